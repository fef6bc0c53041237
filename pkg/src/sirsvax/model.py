"""Controlled SIRS model: parameters, states, vaccination costs and the
pointwise Hamiltonian building blocks.

All rates are per week. The reduced state is x = (s, i), the susceptible and
infected fractions; the recovered fraction is r = 1 - s - i. Everything here
is an immutable value object or a pure function, safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Tolerance band around the closed simplex: states within EPS_DOM of a face
# are accepted and clamped back onto it (floating-point drift from integrators).
EPS_DOM = 1e-12


class DomainError(ValueError):
    """A state/control lies outside its admissible set."""


@dataclass(frozen=True)
class EpidemicParams:
    """SIRS rates and the control cap.

    beta: transmission rate, gamma: recovery rate, eta: reinfection rate,
    r: discount rate (may be zero), u_max: maximal vaccination rate.
    """

    beta: float
    gamma: float
    eta: float
    r: float
    u_max: float

    def __post_init__(self):
        for name in ("beta", "gamma", "eta", "u_max"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be strictly positive, got {v}")
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError(f"r must be nonnegative, got {self.r}")

    @property
    def r_o(self) -> float:
        """Natural reproduction number beta/gamma."""
        return self.beta / self.gamma


def _clamp_unit(v: float, name: str) -> float:
    if -EPS_DOM <= v < 0.0:
        return 0.0
    if 1.0 < v <= 1.0 + EPS_DOM:
        return 1.0
    if v < 0.0 or v > 1.0:
        raise DomainError(f"{name}={v} outside [0, 1]")
    return v


@dataclass(frozen=True)
class State:
    """A point (s, i) of the epidemic simplex {s, i >= 0, s + i <= 1}.

    Construction accepts points within EPS_DOM of the closed simplex and
    clamps them back; anything farther out raises DomainError.
    """

    s: float
    i: float

    def __post_init__(self):
        object.__setattr__(self, "s", _clamp_unit(float(self.s), "s"))
        object.__setattr__(self, "i", _clamp_unit(float(self.i), "i"))
        tot = self.s + self.i
        if tot > 1.0 + EPS_DOM:
            raise DomainError(f"s + i = {tot} exceeds 1")
        if tot > 1.0:
            scale = 1.0 / tot
            object.__setattr__(self, "s", self.s * scale)
            object.__setattr__(self, "i", self.i * scale)

    @property
    def r_rec(self) -> float:
        """Recovered fraction 1 - s - i."""
        return 1.0 - self.s - self.i

    @property
    def interior(self) -> bool:
        """True when the point lies in the open simplex."""
        return 0.0 < self.s < 1.0 and 0.0 < self.i < 1.0 and self.s + self.i < 1.0


@dataclass(frozen=True)
class Gradient:
    """Partial derivatives (p_s, p_i) of a value function candidate."""

    p_s: float
    p_i: float

    def __post_init__(self):
        if not (math.isfinite(self.p_s) and math.isfinite(self.p_i)):
            raise ValueError("gradient components must be finite")


class CostModel:
    """Running cost C(s, i, u), strictly convex in u for fixed (s, i)."""

    is_quadratic = False

    def cost(self, s: float, i: float, u: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticCost(CostModel):
    """C(s, i, u) = (a*i^2 + b*(u*s)^2) / 2 with weights a, b > 0.

    a penalizes infections, b penalizes vaccination effort per susceptible.
    """

    a: float
    b: float
    is_quadratic = True

    def __post_init__(self):
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ValueError(f"a must be nonnegative, got {self.a}")
        if not (self.b > 0.0 and math.isfinite(self.b)):
            raise ValueError(f"b must be strictly positive, got {self.b}")

    def cost(self, s: float, i: float, u: float) -> float:
        us = u * s
        return 0.5 * (self.a * i * i + self.b * us * us)

    def c_max(self, u_max: float) -> float:
        """Upper bound of C on the closed simplex with u <= u_max."""
        return 0.5 * (self.a + self.b * u_max * u_max)


class GenericCost(CostModel):
    """Wraps an arbitrary evaluator (s, i, u) -> cost.

    The evaluator must be defined on the closed simplex times [0, u_max] and
    strictly convex in u; convexity is spot-checked at construction on a
    3-point stencil over a sample of states.
    """

    def __init__(self, evaluator: Callable[[float, float, float], float],
                 u_max: float, bound: float, check_points: int = 25):
        self._fn = evaluator
        self.bound = float(bound)
        rng = np.random.default_rng(1234)
        for _ in range(check_points):
            s = rng.uniform(0.0, 1.0)
            i = rng.uniform(0.0, 1.0 - s)
            u = rng.uniform(0.0, u_max)
            du = min(u, u_max - u, u_max / 4) / 2
            if du <= 0.0:
                continue
            lo, mid, hi = (self._fn(s, i, u - du), self._fn(s, i, u),
                           self._fn(s, i, u + du))
            if min(lo, mid, hi) < 0.0:
                raise ValueError("cost evaluator returned a negative value")
            if mid > 0.5 * (lo + hi) + 1e-12:
                raise ValueError("cost evaluator fails midpoint convexity in u")

    def cost(self, s: float, i: float, u: float) -> float:
        return float(self._fn(s, i, u))

    def c_max(self, u_max: float) -> float:
        return self.bound


def _check_control(u: float, params: EpidemicParams) -> None:
    if not (-EPS_DOM <= u <= params.u_max + EPS_DOM):
        raise DomainError(f"control u={u} outside [0, {params.u_max}]")


def drift(x: State, u: float, params: EpidemicParams) -> tuple[float, float]:
    """Right-hand side (ds/dt, di/dt) of the controlled SIRS system.

    ds/dt = -beta*s*i - u*s + eta*(1 - s - i)
    di/dt =  beta*s*i - gamma*i
    """
    _check_control(u, params)
    si = x.s * x.i
    ds = -params.beta * si - u * x.s + params.eta * (1.0 - x.s - x.i)
    di = params.beta * si - params.gamma * x.i
    return ds, di


def recovered_rate(x: State, u: float, params: EpidemicParams) -> float:
    """dr/dt = gamma*i - eta*r + u*s, the negated sum of the (s, i) drift."""
    return params.gamma * x.i - params.eta * (1.0 - x.s - x.i) + u * x.s


def running_cost(x: State, u: float, cost: CostModel,
                 params: EpidemicParams | None = None) -> float:
    """Evaluate the running cost at (x, u); nonnegative by construction."""
    if params is not None:
        _check_control(u, params)
    return cost.cost(x.s, x.i, u)


def control_hamiltonian(x: State, p: Gradient, u: float,
                        params: EpidemicParams, cost: CostModel) -> float:
    """Pre-minimized Hamiltonian <b(x, u), p> + C(x, u)."""
    ds, di = drift(x, u, params)
    return ds * p.p_s + di * p.p_i + cost.cost(x.s, x.i, u)


def reproduction_numbers(x: State, params: EpidemicParams) -> tuple[float, float]:
    """(R_o, R_t): natural reproduction number beta/gamma and its
    instantaneous counterpart (beta/gamma) * s."""
    r_o = params.beta / params.gamma
    return r_o, r_o * x.s
