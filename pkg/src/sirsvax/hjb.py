"""Value-function solver for the vaccination problem.

The stationary equation r v = H(x, Dv) is attacked through its representation
along flows. Two update maps are provided:

* bellman_map applies the explicit recursion

      v_new(x) = integral_0^T exp(-r t) Cmin(X_t, dv/ds(X_t)) dt
                 + exp(-r T) v_prev(X_T)

  with X the *uncontrolled* flow and Cmin the running cost minimized
  pointwise over the vaccination rate (gradient read from the previous
  iterate, full Jacobi sweeps). This is the textbook fixed-point splitting,
  exported and tested as an operation in its own right. Iterating it is
  linearly unstable on fine grids: the control-transport term -u*s*dv/ds is
  fed back explicitly through a finite-difference gradient, with loop gain of
  order u_max * (flow residence time) / h.

* solve() therefore iterates the policy-evaluation form of the same
  representation formula: freeze the feedback rate induced by the current
  gradient, integrate the *controlled* flow (transport implicit in the
  characteristics), accumulate the plain running cost, re-minimize. Every
  iterate is then the value of an admissible policy, hence trapped in
  [0, C_max/r], and the loop converges in a few dozen sweeps.

With weekly discount rates the tail factor q = exp(-r T) is close to 1 and
each sweep sheds the remaining error through an almost uniform constant mode.
Constant shifts leave every within-row s-gradient untouched, so that mode is
exactly summable: the solver adds the geometric tail q/(1-q) * delta(X_T) per
node, and both stops on and returns the corrected iterate. The a = 0
degenerate case still converges in one sweep with zero correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .grid import SimplexGrid, gradient_s_fd, interp_field
from .kernels.numpy_sweep import _cstar_vec
from .model import CostModel, EpidemicParams, QuadraticCost, State

VALUE_CSV_HEADER = "s,i,v,vs"


class SolverError(RuntimeError):
    """The uncontrolled flow left the simplex during a sweep."""


@dataclass
class ValueField:
    """Grid-sampled value function with its finite-difference s-gradient."""

    grid: SimplexGrid
    values: np.ndarray      # (n, n), zero outside the simplex
    gradient_s: np.ndarray  # (n, n)

    @classmethod
    def from_values(cls, grid: SimplexGrid, values: np.ndarray) -> "ValueField":
        vals = np.where(grid.mask, values, 0.0)
        return cls(grid=grid, values=vals, gradient_s=gradient_s_fd(vals, grid))

    @classmethod
    def zero(cls, grid: SimplexGrid) -> "ValueField":
        return cls.from_values(grid, grid.new_field())

    def value_at(self, s, i):
        return interp_field(self.values, self.grid.n, self.grid.h, s, i)

    def gradient_s_at(self, s, i):
        return interp_field(self.gradient_s, self.grid.n, self.grid.h, s, i)

    def node_values(self) -> np.ndarray:
        return self.grid.gather(self.values)

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="\n") as f:
            f.write(VALUE_CSV_HEADER + "\n")
            for j, k in zip(g.jj, g.kk):
                f.write(f"{j * g.h:.12g},{k * g.h:.12g},"
                        f"{self.values[j, k]:.12g},{self.gradient_s[j, k]:.12g}\n")

    @classmethod
    def from_csv(cls, path) -> "ValueField":
        with open(path) as f:
            header = f.readline().strip()
            if header != VALUE_CSV_HEADER:
                raise ValueError(f"unexpected value-field header: {header!r}")
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        count = data.shape[0]
        n = int((math.isqrt(8 * count + 1) - 1) // 2)
        if n * (n + 1) != 2 * count:
            raise ValueError(f"{count} rows is not a triangular node count")
        grid = SimplexGrid(n)
        expect_s, expect_i = grid.node_s, grid.node_i
        if (np.max(np.abs(data[:, 0] - expect_s)) > 1e-9
                or np.max(np.abs(data[:, 1] - expect_i)) > 1e-9):
            raise ValueError("node coordinates do not match a simplex grid")
        values = grid.scatter(data[:, 2])
        field = cls(grid=grid, values=values,
                    gradient_s=grid.scatter(data[:, 3]))
        return field


@dataclass(frozen=True)
class SolverConfig:
    """Grid size, flow truncation and stopping parameters for solve()."""

    grid_n: int = 101
    time_step: float = 0.05
    horizon_t: float = 200.0
    fix_point_tol: float | None = None  # None: 1e-7 * C_max / r
    max_iters: int = 200

    def __post_init__(self):
        if self.grid_n < 3:
            raise ValueError("grid_n must be at least 3")
        if self.time_step <= 0.0 or self.horizon_t <= 0.0:
            raise ValueError("time_step and horizon_t must be positive")
        if self.fix_point_tol is not None and self.fix_point_tol <= 0.0:
            raise ValueError("fix_point_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon_t / self.time_step)))


@dataclass
class SolveResult:
    field: ValueField
    iterations: int
    residual: float
    converged: bool
    tolerance: float
    iterate_min: float
    iterate_max: float


def optimized_running_cost(x: State, p_s: float, cost: CostModel,
                           params: EpidemicParams) -> float:
    """inf over u in [0, u_max] of C(s, i, u) - u*s*p_s.

    Quadratic costs use the closed-form clipped minimizer; generic costs a
    bounded scalar minimization to 1e-10 in u.
    """
    if isinstance(cost, QuadraticCost):
        return float(kernels.core.cstar_quadratic(
            x.s, x.i, p_s, cost.a, cost.b, params.u_max))
    res = minimize_scalar(lambda u: cost.cost(x.s, x.i, u) - u * x.s * p_s,
                          bounds=(0.0, params.u_max), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.fun)


def _sweep(prev: ValueField, cfg: SolverConfig, params: EpidemicParams,
           cost: CostModel):
    """One Jacobi sweep; returns flat new values plus flow endpoints."""
    g = prev.grid
    dt = cfg.time_step
    n_steps = cfg.n_steps
    q = math.exp(-params.r * dt)
    if isinstance(cost, QuadraticCost):
        out, end_s, end_i, status = kernels.bellman_sweep_quadratic(
            g.node_s, g.node_i, prev.gradient_s, prev.values, g.n, g.h,
            params.beta, params.gamma, params.eta, q,
            cost.a, cost.b, params.u_max, dt, n_steps)
        if status != 0:
            raise SolverError("uncontrolled flow left the simplex; refine "
                              "time_step")
        return out, end_s, end_i

    # generic cost: per-node flow through the jitted path, scalar minimization
    # of the control term at every sample (intended for small grids)
    t = np.arange(n_steps + 1) * dt
    disc = np.exp(-params.r * t)
    out = np.empty(g.node_count)
    end_s = np.empty(g.node_count)
    end_i = np.empty(g.node_count)
    for idx in range(g.node_count):
        ss, ii, status = kernels.path_constant_control(
            float(g.node_s[idx]), float(g.node_i[idx]), 0.0, dt, n_steps,
            params.beta, params.gamma, params.eta)
        if status != 0:
            raise SolverError("uncontrolled flow left the simplex; refine "
                              "time_step")
        p = interp_field(prev.gradient_s, g.n, g.h, ss, ii)
        c = np.array([optimized_running_cost(State(ss[m], ii[m]), p[m],
                                             cost, params)
                      for m in range(n_steps + 1)])
        v_tail = float(interp_field(prev.values, g.n, g.h, ss[-1], ii[-1]))
        out[idx] = np.trapezoid(disc * c, dx=dt) + disc[-1] * v_tail
        end_s[idx] = ss[-1]
        end_i[idx] = ii[-1]
    return out, end_s, end_i


def bellman_map(prev: ValueField, cfg: SolverConfig, params: EpidemicParams,
                cost: CostModel) -> ValueField:
    """Single application of the explicit value update; gradient recomputed
    on the result (full Jacobi sweep, inputs untouched)."""
    out, _, _ = _sweep(prev, cfg, params, cost)
    return ValueField.from_values(prev.grid, prev.grid.scatter(out))


def _policy_eval_sweep(prev: ValueField, cfg: SolverConfig,
                       params: EpidemicParams, cost: CostModel,
                       lift_low_i: bool):
    """Value of the feedback induced by prev's gradient: running cost along
    the controlled flow per node, closed with prev's value at the endpoint."""
    g = prev.grid
    dt = cfg.time_step
    n_steps = cfg.n_steps
    q = math.exp(-params.r * dt)
    if isinstance(cost, QuadraticCost):
        out, end_s, end_i, status = kernels.policy_value_sweep_quadratic(
            g.node_s, g.node_i, prev.gradient_s, prev.values, g.n, g.h,
            params.beta, params.gamma, params.eta, q,
            cost.a, cost.b, params.u_max, dt, n_steps,
            1 if lift_low_i else 0)
        if status != 0:
            raise SolverError("controlled flow left the simplex; refine "
                              "time_step")
        return out, end_s, end_i

    # generic cost: scalar stepping with per-sample control minimization
    from .policy import optimal_vaccination_generic
    core = kernels.core
    out = np.empty(g.node_count)
    end_s = np.empty(g.node_count)
    end_i = np.empty(g.node_count)

    def lifted(arr, s_, i_):
        ie = i_
        if lift_low_i and 0.0 < ie < g.h:
            ie = min(g.h, 1.0 - s_)
        return core.interp_scalar(arr, g.n, g.h, s_, ie)

    for idx in range(g.node_count):
        s = float(g.node_s[idx])
        i = float(g.node_i[idx])

        def control(s_, i_):
            p = lifted(prev.gradient_s, s_, i_)
            return optimal_vaccination_generic(State(s_, i_), p, cost,
                                               params.u_max)

        u = control(s, i)
        acc = 0.5 * cost.cost(s, i, u)
        disc = 1.0
        ok = True
        for step in range(n_steps):
            s, i = core.rk4_step(s, i, u, dt, params.beta, params.gamma,
                                 params.eta)
            s, i, ok1 = core.clamp_state(s, i)
            ok = ok and ok1
            disc *= q
            u = control(s, i)
            term = disc * cost.cost(s, i, u)
            if step == n_steps - 1:
                term = 0.5 * term
            acc += term
        if not ok:
            raise SolverError("controlled flow left the simplex; refine "
                              "time_step")
        out[idx] = acc * dt + disc * lifted(prev.values, s, i)
        end_s[idx] = s
        end_i[idx] = i
    return out, end_s, end_i


def solve(cfg: SolverConfig, params: EpidemicParams, cost: CostModel,
          v0: ValueField | None = None, progress=None,
          lift_low_i: bool = True) -> SolveResult:
    """Alternate policy evaluation and improvement from v = 0 (or a warm
    start) until the geometric-tail-corrected iterate moves less than the
    tolerance in sup norm. Requires r > 0. Reports the best iterate instead
    of raising when max_iters is hit."""
    if params.r <= 0.0:
        raise ValueError("solve requires a strictly positive discount rate")
    grid = SimplexGrid(cfg.grid_n)
    c_max = cost.c_max(params.u_max)
    tol = (cfg.fix_point_tol if cfg.fix_point_tol is not None
           else 1e-7 * c_max / params.r)

    field = v0 if v0 is not None else ValueField.zero(grid)
    if v0 is not None and v0.grid.n != cfg.grid_n:
        raise ValueError("warm start grid does not match config grid_n")
    prev_flat = field.node_values()
    corr_prev = prev_flat.copy()

    q_total = math.exp(-params.r * cfg.time_step) ** cfg.n_steps
    kappa = q_total / (1.0 - q_total)

    vmin, vmax = math.inf, -math.inf
    residual = math.inf
    converged = False
    iterations = 0
    corr = corr_prev
    for it in range(1, cfg.max_iters + 1):
        new_flat, end_s, end_i = _policy_eval_sweep(field, cfg, params, cost,
                                                    lift_low_i)
        vmin = min(vmin, float(new_flat.min()))
        vmax = max(vmax, float(new_flat.max()))
        delta_grid = grid.scatter(new_flat - prev_flat)
        if lift_low_i:
            lifted_i = np.where((end_i > 0.0) & (end_i < grid.h),
                                np.minimum(grid.h, 1.0 - end_s), end_i)
        else:
            lifted_i = end_i
        corr = new_flat + kappa * interp_field(delta_grid, grid.n, grid.h,
                                               end_s, lifted_i)
        residual = float(np.max(np.abs(corr - corr_prev)))
        iterations = it
        if progress is not None:
            progress(it, residual)
        field = ValueField.from_values(grid, grid.scatter(new_flat))
        prev_flat = new_flat
        corr_prev = corr
        if residual < tol:
            converged = True
            break

    final = ValueField.from_values(grid, grid.scatter(corr))
    return SolveResult(field=final, iterations=iterations, residual=residual,
                       converged=converged, tolerance=tol,
                       iterate_min=vmin, iterate_max=vmax)


@dataclass
class ResidualReport:
    max_abs: float
    at_s: float
    at_i: float


def hjb_residual(field: ValueField, params: EpidemicParams,
                 cost: CostModel) -> ResidualReport:
    """Max over interior nodes of |r*v - min_u H(x, Dv, u)| with both partial
    derivatives by central differences."""
    g = field.grid
    n, h = g.n, g.h
    interior = g.interior_mask_flat()
    j = g.jj.astype(np.int64)[interior]
    k = g.kk.astype(np.int64)[interior]
    v = field.values[j, k]
    vs = (field.values[j + 1, k] - field.values[j - 1, k]) / (2.0 * h)
    vi = (field.values[j, k + 1] - field.values[j, k - 1]) / (2.0 * h)
    s = j * h
    i = k * h
    if isinstance(cost, QuadraticCost):
        cmin = _cstar_vec(s, i, vs, cost.a, cost.b, params.u_max)
    else:
        cmin = np.array([optimized_running_cost(State(s[m], i[m]), vs[m],
                                                cost, params)
                         for m in range(s.size)])
    ham = (params.beta * s * i * (vi - vs) + params.eta * (1.0 - s - i) * vs
           - params.gamma * i * vi + cmin)
    resid = np.abs(params.r * v - ham)
    m = int(np.argmax(resid))
    return ResidualReport(max_abs=float(resid[m]), at_s=float(s[m]),
                          at_i=float(i[m]))


@dataclass
class BruteForceBound:
    """Certified upper bound on V from exhaustive piecewise-constant search."""

    total: float        # quadrature of the best schedule plus tail bound
    quadrature: float   # discounted running cost of the best schedule
    tail_bound: float   # exp(-r*horizon) * C_max / r
    schedule: tuple     # control level per segment


def brute_force_upper_bound(x: State, depth: int, horizon: float,
                            params: EpidemicParams, cost: CostModel,
                            step: float = 0.05) -> BruteForceBound:
    """Search all piecewise-constant schedules with `depth` equal segments and
    controls from {0, U/4, U/2, 3U/4, U}; certified upper bound on V(x)."""
    if not 1 <= depth <= 4:
        raise ValueError("depth must be between 1 and 4")
    if params.r <= 0.0:
        raise ValueError("requires a strictly positive discount rate")
    levels = [params.u_max * f for f in (0.0, 0.25, 0.5, 0.75, 1.0)]
    seg = horizon / depth
    n_steps = max(1, math.ceil(seg / step - 1e-9))
    dt = seg / n_steps
    t_rel = np.arange(n_steps + 1) * dt
    is_quad = isinstance(cost, QuadraticCost)

    best = {"quad": math.inf, "controls": ()}

    def recurse(level, s, i, t0, acc, controls):
        if level == depth:
            if acc < best["quad"]:
                best["quad"] = acc
                best["controls"] = controls
            return
        for u in levels:
            ss, ii, status = kernels.path_constant_control(
                s, i, u, dt, n_steps, params.beta, params.gamma, params.eta)
            if status != 0:
                raise SolverError("schedule search left the simplex")
            if is_quad:
                us = u * ss
                c = 0.5 * (cost.a * ii * ii + cost.b * us * us)
            else:
                c = np.array([cost.cost(ss[m], ii[m], u)
                              for m in range(n_steps + 1)])
            inc = float(np.trapezoid(np.exp(-params.r * (t0 + t_rel)) * c,
                                     dx=dt))
            recurse(level + 1, float(ss[-1]), float(ii[-1]), t0 + seg,
                    acc + inc, controls + (u,))

    recurse(0, x.s, x.i, 0.0, 0.0, ())
    tail = math.exp(-params.r * horizon) * cost.c_max(params.u_max) / params.r
    return BruteForceBound(total=best["quad"] + tail, quadrature=best["quad"],
                           tail_bound=tail, schedule=best["controls"])


def second_difference_bound(field: ValueField) -> dict:
    """Largest upward second difference of the values along each axis and the
    main diagonal, scaled by the squared spacing (semiconcavity proxy,
    reported rather than asserted)."""
    g = field.grid
    n, h = g.n, g.h
    v = field.values
    j = g.jj.astype(np.int64)
    k = g.kk.astype(np.int64)
    out = {}
    ok = (j > 0) & (j + 1 + k <= n - 1)
    js, ks = j[ok], k[ok]
    out["s"] = float(np.max((v[js + 1, ks] - 2.0 * v[js, ks]
                             + v[js - 1, ks]) / h**2)) if js.size else 0.0
    ok = (k > 0) & (j + k + 1 <= n - 1)
    js, ks = j[ok], k[ok]
    out["i"] = float(np.max((v[js, ks + 1] - 2.0 * v[js, ks]
                             + v[js, ks - 1]) / h**2)) if js.size else 0.0
    ok = (j > 0) & (k > 0) & (j + k + 2 <= n - 1)
    js, ks = j[ok], k[ok]
    out["diag"] = float(np.max((v[js + 1, ks + 1] - 2.0 * v[js, ks]
                                + v[js - 1, ks - 1]) / (2.0 * h**2))) if js.size else 0.0
    return out


def sup_diff_on_common_nodes(coarse: ValueField, fine: ValueField) -> float:
    """Sup over shared nodes of |coarse - fine| (fine grid must refine the
    coarse one by an integer factor)."""
    nc, nf = coarse.grid.n, fine.grid.n
    if (nf - 1) % (nc - 1) != 0:
        raise ValueError("fine grid does not refine the coarse grid")
    m = (nf - 1) // (nc - 1)
    j = coarse.grid.jj.astype(np.int64)
    k = coarse.grid.kk.astype(np.int64)
    return float(np.max(np.abs(coarse.values[j, k]
                               - fine.values[m * j, m * k])))
