"""Fixed-step integration of the controlled SIRS system under
piecewise-constant vaccination schedules.

Steps are refined per control segment so switch times coincide exactly with
step boundaries. Trajectories are immutable sample tables with a CSV
round-trip format `t,s,i,r,u,Rt` (12 significant digits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import EPS_DOM, EpidemicParams, State


class SimulationError(RuntimeError):
    """A sample left the simplex by more than the integrator tolerates."""


CSV_HEADER = "t,s,i,r,u,Rt"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant, right-continuous control: values[k] applies on
    [breakpoints[k], breakpoints[k+1]); the first breakpoint must be 0."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size or bp.size == 0:
            raise ValueError("breakpoints and values must be 1-d and equal length")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if bp.size > 1 and not np.all(np.diff(bp) > 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise ValueError("control values must be finite and nonnegative")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, u: float) -> "ControlSchedule":
        return cls(np.array([0.0]), np.array([float(u)]))

    def value_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return float(self.values[max(idx, 0)])

    def max_value(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class Trajectory:
    """Time series (t, s, i, r, u, Rt) produced by the integrators."""

    t: np.ndarray
    s: np.ndarray
    i: np.ndarray
    u: np.ndarray
    r: np.ndarray = field(default=None)  # type: ignore[assignment]
    rt: np.ndarray = field(default=None)  # type: ignore[assignment]
    step: float = float("nan")

    def __post_init__(self):
        if self.r is None:
            object.__setattr__(self, "r", 1.0 - self.s - self.i)
        if self.rt is None:
            object.__setattr__(self, "rt", np.full_like(self.s, np.nan))
        for arr in (self.t, self.s, self.i, self.u, self.r, self.rt):
            arr.setflags(write=False)

    @classmethod
    def build(cls, t, s, i, u, params: EpidemicParams, step: float) -> "Trajectory":
        rt = (params.beta / params.gamma) * s
        return cls(t=t, s=s, i=i, u=u, r=1.0 - s - i, rt=rt, step=step)

    def __len__(self) -> int:
        return self.t.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as f:
            f.write(CSV_HEADER + "\n")
            for row in zip(self.t, self.s, self.i, self.r, self.u, self.rt):
                f.write(",".join(_fmt(v) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path) as f:
            header = f.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected trajectory header: {header!r}")
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        t, s, i, r, u, rt = (np.ascontiguousarray(data[:, k]) for k in range(6))
        step = float(t[1] - t[0]) if t.size > 1 else float("nan")
        return cls(t=t, s=s, i=i, u=u, r=r, rt=rt, step=step)


def _segment_plan(schedule: ControlSchedule, horizon: float, step: float):
    """Split [0, horizon] at control breakpoints; each segment gets an integer
    number of steps of size <= step."""
    cuts = [0.0]
    for b in schedule.breakpoints[1:]:
        if 0.0 < b < horizon:
            cuts.append(float(b))
    cuts.append(float(horizon))
    plan = []
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        n_seg = max(1, math.ceil((t1 - t0) / step - 1e-9))
        plan.append((t0, t1, n_seg, schedule.value_at(t0)))
    return plan


def integrate(x0: State, schedule: ControlSchedule, horizon: float,
              step: float, params: EpidemicParams) -> Trajectory:
    """Integrate from x0 under the schedule with the classical fourth-order
    method, breakpoint-aligned fixed steps of nominal size `step`."""
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if step <= 0.0:
        raise ValueError("step must be positive")
    if schedule.max_value() > params.u_max + EPS_DOM:
        raise ValueError("schedule exceeds u_max")

    t_parts = [np.array([0.0])]
    s_parts = [np.array([x0.s])]
    i_parts = [np.array([x0.i])]
    u_parts = []
    s_cur, i_cur = x0.s, x0.i
    for t0, t1, n_seg, u in _segment_plan(schedule, horizon, step):
        dt = (t1 - t0) / n_seg
        ss, ii, status = kernels.path_constant_control(
            s_cur, i_cur, u, dt, n_seg, params.beta, params.gamma, params.eta)
        if status != 0:
            raise SimulationError(
                f"trajectory left the simplex by more than {kernels.core.FAIL_BAND}"
                f" in segment [{t0}, {t1}] (step {dt}); refine the step size")
        tt = t0 + np.arange(1, n_seg + 1) * dt
        tt[-1] = t1
        t_parts.append(tt)
        s_parts.append(ss[1:])
        i_parts.append(ii[1:])
        u_parts.append(np.full(n_seg, u))
        s_cur, i_cur = float(ss[-1]), float(ii[-1])
    u_parts.append(np.array([schedule.value_at(horizon)]))

    return Trajectory.build(
        t=np.concatenate(t_parts),
        s=np.concatenate(s_parts),
        i=np.concatenate(i_parts),
        u=np.concatenate(u_parts),
        params=params, step=step)


def infected_consistency_error(traj: Trajectory, params: EpidemicParams) -> float:
    """Max relative deviation of the sampled infected fraction from
    i(0) * exp(integral of (beta*s - gamma)), quadrature by trapezoids on the
    trajectory's own samples. Defined as 0 when i(0) = 0."""
    i0 = float(traj.i[0])
    if i0 == 0.0:
        return 0.0
    g = params.beta * traj.s - params.gamma
    dt = np.diff(traj.t)
    integral = np.concatenate(
        ([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * dt)))
    predicted = i0 * np.exp(integral)
    return float(np.max(np.abs(traj.i - predicted) / traj.i))
