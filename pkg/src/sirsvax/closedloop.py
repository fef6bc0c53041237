"""Sample-and-hold simulation of the tabulated feedback policy and realized
discounted cost accounting.

The control is re-read from the policy every `hold` weeks (default: every
step) and held constant in between, which realizes an admissible
piecewise-constant control by construction. Where the policy marks kink
candidates the smaller candidate control is applied and the encounter is
logged; the event log serializes to JSON lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import CostModel, EpidemicParams, QuadraticCost, State
from .policy import FeedbackPolicy
from .simulate import SimulationError, Trajectory


@dataclass
class ClosedLoopRun:
    trajectory: Trajectory
    events: list  # kink encounters: dicts with t, s, i, u


def simulate_feedback(x0: State, policy: FeedbackPolicy, horizon: float,
                      step: float, params: EpidemicParams,
                      hold: float | None = None,
                      lift_low_i: bool = True) -> ClosedLoopRun:
    """Integrate the closed loop from x0. `hold` must be a multiple of the
    step (rounded to one); lift_low_i keeps policy lookups at 0 < i < h on the
    first interior row, the in-domain side of the value jump at i = 0."""
    if horizon <= 0.0 or step <= 0.0:
        raise ValueError("horizon and step must be positive")
    hold = step if hold is None else hold
    hold_every = max(1, int(round(hold / step)))
    n_steps = max(1, math.ceil(horizon / step - 1e-9))
    dt = horizon / n_steps

    g = policy.grid
    kink_u8 = policy.kink_mask.astype(np.uint8)
    ss, ii, uu, kk, status = kernels.path_feedback(
        x0.s, x0.i, dt, n_steps, hold_every, policy.u_star, policy.u_min,
        kink_u8, g.n, g.h, 1 if lift_low_i else 0, params.u_max,
        params.beta, params.gamma, params.eta)
    if status != 0:
        raise SimulationError(
            "closed-loop trajectory left the simplex; refine the step size")
    t = np.arange(n_steps + 1) * dt
    t[-1] = horizon
    traj = Trajectory.build(t=t, s=ss, i=ii, u=uu, params=params, step=dt)
    events = [
        {"t": float(t[m]), "s": float(ss[m]), "i": float(ii[m]),
         "u": float(uu[m])}
        for m in np.nonzero(kk)[0]
    ]
    return ClosedLoopRun(trajectory=traj, events=events)


def write_events_jsonl(events: list, path) -> None:
    with open(path, "w", newline="\n") as f:
        for ev in events:
            f.write(json.dumps(ev, sort_keys=True) + "\n")


@dataclass
class CostEstimate:
    """Discounted running cost of a trajectory plus a certified tail interval
    [0, tail_bound] for the unobserved remainder."""

    quadrature: float
    tail_bound: float

    @property
    def upper(self) -> float:
        return self.quadrature + self.tail_bound


def realized_discounted_cost(traj: Trajectory, cost: CostModel,
                             params: EpidemicParams) -> CostEstimate:
    """Trapezoidal quadrature of exp(-r t) C(s, i, u) over the trajectory;
    the tail bound is exp(-r*horizon) * C_max / r (infinite when r = 0)."""
    if isinstance(cost, QuadraticCost):
        us = traj.u * traj.s
        c = 0.5 * (cost.a * traj.i * traj.i + cost.b * us * us)
    else:
        c = np.array([cost.cost(traj.s[m], traj.i[m], traj.u[m])
                      for m in range(len(traj))])
    quad = float(np.trapezoid(np.exp(-params.r * traj.t) * c, traj.t))
    if params.r > 0.0:
        tail = math.exp(-params.r * traj.t[-1]) * cost.c_max(params.u_max) / params.r
    else:
        tail = math.inf
    return CostEstimate(quadrature=quad, tail_bound=tail)
