"""Pointwise optimal vaccination rates and tabulated feedback policies.

For the quadratic cost the minimizer of u -> C(s, i, u) - u*s*p_s over
[0, u_max] has the closed three-branch form

    0            if p_s <= 0
    p_s / (b s)  if 0 < p_s < b * u_max * s
    u_max        if p_s >= b * u_max * s

which is continuous and nondecreasing in p_s. Generic strictly convex costs
fall back to bounded scalar minimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import SimplexGrid, interp_field, one_sided_gradients_s
from .hjb import ValueField
from .model import CostModel, EpidemicParams, QuadraticCost, State

POLICY_CSV_HEADER = "s,i,ustar"

# One-sided s-derivatives disagreeing by more than this multiple of the grid
# spacing mark a kink candidate; both candidate controls are kept there.
KINK_FACTOR = 10.0


class NonConvexCostError(ValueError):
    """The sampled control objective failed midpoint convexity."""


def optimal_vaccination_quadratic(s, p_s, b: float, u_max: float):
    """Closed-form minimizer for the quadratic cost; array friendly.

    At s = 0 the objective no longer depends on u and 0 is returned, keeping
    the policy continuous from p_s <= 0 and bounded otherwise.
    """
    s_arr = np.asarray(s, dtype=np.float64)
    p_arr = np.asarray(p_s, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = p_arr / (b * s_arr)
    u = np.minimum(np.maximum(u, 0.0), u_max)
    u = np.where(s_arr > 0.0, u, 0.0)
    return float(u) if u.ndim == 0 else u


def optimal_vaccination_generic(x: State, p_s: float, cost: CostModel,
                                u_max: float) -> float:
    """Bounded scalar minimization of u -> C(x, u) - u*s*p_s to 1e-10.

    Raises NonConvexCostError when the objective fails a midpoint convexity
    check on the bracket.
    """

    def objective(u):
        return cost.cost(x.s, x.i, u) - u * x.s * p_s

    probes = np.linspace(0.0, u_max, 5)
    vals = [objective(u) for u in probes]
    for m in range(1, 4):
        if vals[m] > 0.5 * (vals[m - 1] + vals[m + 1]) + 1e-12:
            raise NonConvexCostError(
                "control objective fails midpoint convexity on the bracket")
    res = minimize_scalar(objective, bounds=(0.0, u_max), method="bounded",
                          options={"xatol": 1e-10})
    return float(min(max(res.x, 0.0), u_max))


@dataclass
class FeedbackPolicy:
    """Tabulated feedback vaccination rate over a simplex grid.

    u_star holds the control from the field's default gradient. Nodes where
    forward and backward s-differences disagree beyond KINK_FACTOR * h are
    flagged in kink_mask, with both one-sided candidates tabulated; u_min
    carries the smaller candidate there (the conservative tie-break used by
    the closed loop).
    """

    grid: SimplexGrid
    u_star: np.ndarray
    kink_mask: np.ndarray
    u_fwd: np.ndarray
    u_bwd: np.ndarray

    @property
    def u_min(self) -> np.ndarray:
        return np.where(self.kink_mask, np.minimum(self.u_fwd, self.u_bwd),
                        self.u_star)

    def control_at(self, s, i, lift_low_i: bool = True):
        """Interpolated control at (s, i), mirroring the closed-loop lookup:
        queries with 0 < i < h read the first interior row, and cells touching
        kink nodes use the conservative table."""
        g = self.grid
        s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
        i_arr = np.atleast_1d(np.asarray(i, dtype=np.float64))
        if lift_low_i:
            lift = (i_arr > 0.0) & (i_arr < g.h)
            i_arr = np.where(lift, np.minimum(g.h, 1.0 - s_arr), i_arr)
        kinked = interp_field(self.kink_mask.astype(np.float64), g.n, g.h,
                              s_arr, i_arr) > 0.0
        u = np.where(kinked,
                     interp_field(self.u_min, g.n, g.h, s_arr, i_arr),
                     interp_field(self.u_star, g.n, g.h, s_arr, i_arr))
        u = np.clip(u, 0.0, None)
        return float(u[0]) if np.isscalar(s) or np.asarray(s).ndim == 0 else u

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="\n") as f:
            f.write(POLICY_CSV_HEADER + "\n")
            for j, k in zip(g.jj, g.kk):
                f.write(f"{j * g.h:.12g},{k * g.h:.12g},"
                        f"{self.u_star[j, k]:.12g}\n")


def tabulate_policy(field: ValueField, cost: CostModel,
                    params: EpidemicParams) -> FeedbackPolicy:
    """Apply the pointwise minimizer at every node with p_s taken from the
    field's finite-difference gradient; tabulate one-sided candidates at kink
    nodes."""
    g = field.grid
    node_s = g.node_s
    p = g.gather(field.gradient_s)

    def controls_for(p_flat):
        if isinstance(cost, QuadraticCost):
            return optimal_vaccination_quadratic(node_s, p_flat, cost.b,
                                                 params.u_max)
        return np.array([
            optimal_vaccination_generic(State(node_s[m], g.node_i[m]),
                                        p_flat[m], cost, params.u_max)
            for m in range(g.node_count)])

    u_star = g.scatter(controls_for(p))
    fwd, bwd, both = one_sided_gradients_s(field.values, g)
    kink = both & (np.abs(fwd - bwd) > KINK_FACTOR * g.h) & g.mask
    u_fwd = g.scatter(controls_for(g.gather(fwd)))
    u_bwd = g.scatter(controls_for(g.gather(bwd)))
    return FeedbackPolicy(grid=g, u_star=u_star, kink_mask=kink,
                          u_fwd=u_fwd, u_bwd=u_bwd)
