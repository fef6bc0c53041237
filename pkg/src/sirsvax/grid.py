"""Triangular grid on the epidemic simplex and piecewise-linear interpolation.

Nodes are (j*h, k*h) with h = 1/(n-1) and j + k <= n - 1, so the node set
covers the closed simplex. Fields live on full (n, n) arrays indexed
[j, k] = [s-index, i-index]; entries outside the simplex are kept at zero and
never read. Interpolation is bilinear on full cells and barycentric on the
lower triangle of cells cut by the hypotenuse, which is exactly where
in-simplex query points can fall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SimplexGrid:
    """Uniform triangular discretization of {s, i >= 0, s + i <= 1}."""

    n: int
    h: float = field(init=False)
    jj: np.ndarray = field(init=False)   # s-index of each node, int32
    kk: np.ndarray = field(init=False)   # i-index of each node, int32
    mask: np.ndarray = field(init=False)  # (n, n) bool, True inside simplex

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        object.__setattr__(self, "h", 1.0 / (self.n - 1))
        j, k = np.meshgrid(np.arange(self.n), np.arange(self.n), indexing="ij")
        mask = (j + k) <= (self.n - 1)
        jj, kk = np.nonzero(mask)
        object.__setattr__(self, "jj", jj.astype(np.int32))
        object.__setattr__(self, "kk", kk.astype(np.int32))
        object.__setattr__(self, "mask", mask)

    @property
    def node_count(self) -> int:
        return self.jj.size

    @property
    def node_s(self) -> np.ndarray:
        return self.jj * self.h

    @property
    def node_i(self) -> np.ndarray:
        return self.kk * self.h

    def interior_mask_flat(self) -> np.ndarray:
        """True for nodes whose four axis neighbors are all inside."""
        j, k = self.jj.astype(np.int64), self.kk.astype(np.int64)
        return (j > 0) & (k > 0) & (j + k + 1 <= self.n - 1)

    def new_field(self) -> np.ndarray:
        """Zero-initialized (n, n) node array."""
        return np.zeros((self.n, self.n))

    def scatter(self, flat: np.ndarray) -> np.ndarray:
        """Place flat per-node values into an (n, n) array (zeros outside)."""
        out = np.zeros((self.n, self.n))
        out[self.jj, self.kk] = flat
        return out

    def gather(self, arr: np.ndarray) -> np.ndarray:
        """Read per-node values out of an (n, n) array."""
        return arr[self.jj, self.kk]


def clip_to_simplex(s, i):
    """Project query coordinates onto the closed simplex (vectorized)."""
    s = np.minimum(np.maximum(s, 0.0), 1.0)
    i = np.minimum(np.maximum(i, 0.0), 1.0)
    i = np.minimum(i, 1.0 - s)
    return s, i


def interp_field(arr: np.ndarray, n: int, h: float, s, i):
    """Interpolate an (n, n) node array at points (s, i) inside the simplex.

    Full cells use bilinear weights; cells cut by the hypotenuse fall back to
    the linear interpolant on their in-simplex triangle. Exact on linear
    fields and at grid nodes.
    """
    s = np.asarray(s, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    scalar = s.ndim == 0
    s, i = np.atleast_1d(s), np.atleast_1d(i)
    s, i = clip_to_simplex(s, i)

    j = np.minimum(np.floor(s / h).astype(np.int64), n - 2)
    k = np.minimum(np.floor(i / h).astype(np.int64), n - 2)
    # A query can index a cell whose lower-left corner sits on the hypotenuse
    # (only when it IS that corner); step back so the corner becomes a vertex.
    over = (j + k) > (n - 2)
    k = np.where(over & (k > 0), k - 1, k)
    j = np.where((j + k) > (n - 2), j - 1, j)

    xi = s / h - j
    ze = i / h - k
    f00 = arr[j, k]
    f10 = arr[j + 1, k]
    f01 = arr[j, k + 1]

    tri = (j + k) == (n - 2)
    out = np.empty_like(s)
    # hypotenuse cells: linear on the lower triangle
    out[tri] = (f00 + xi * (f10 - f00) + ze * (f01 - f00))[tri]
    full = ~tri
    if np.any(full):
        f11 = arr[np.minimum(j + 1, n - 1), np.minimum(k + 1, n - 1)]
        bil = (f00 * (1.0 - xi) * (1.0 - ze) + f10 * xi * (1.0 - ze)
               + f01 * (1.0 - xi) * ze + f11 * xi * ze)
        out[full] = bil[full]
    return out[0] if scalar else out


def gradient_s_fd(values: np.ndarray, grid: SimplexGrid) -> np.ndarray:
    """Finite-difference d/ds of a node field: central (second-order) where
    both s-neighbors exist, one-sided first-order at boundary nodes, zero at
    the isolated top corner node (0, 1)."""
    n, h = grid.n, grid.h
    mask = grid.mask
    out = np.zeros((n, n))
    j, k = grid.jj.astype(np.int64), grid.kk.astype(np.int64)

    has_left = j > 0
    has_right = (j + 1 + k) <= (n - 1)
    central = has_left & has_right
    fwd = ~has_left & has_right
    bwd = has_left & ~has_right

    jc, kc = j[central], k[central]
    out[jc, kc] = (values[jc + 1, kc] - values[jc - 1, kc]) / (2.0 * h)
    jf, kf = j[fwd], k[fwd]
    out[jf, kf] = (values[jf + 1, kf] - values[jf, kf]) / h
    jb, kb = j[bwd], k[bwd]
    out[jb, kb] = (values[jb, kb] - values[jb - 1, kb]) / h
    out[~mask] = 0.0
    return out


def one_sided_gradients_s(values: np.ndarray, grid: SimplexGrid):
    """Forward and backward s-differences per node where each exists.

    Returns (fwd, bwd, both_mask): (n, n) arrays, with the node's available
    one-sided value substituted where the other side is missing, and a mask of
    nodes where both sides exist (kink detection is meaningful only there).
    """
    n, h = grid.n, grid.h
    j, k = grid.jj.astype(np.int64), grid.kk.astype(np.int64)
    fwd = np.zeros((n, n))
    bwd = np.zeros((n, n))
    both = np.zeros((n, n), dtype=bool)

    has_left = j > 0
    has_right = (j + 1 + k) <= (n - 1)
    jr, kr = j[has_right], k[has_right]
    fwd[jr, kr] = (values[jr + 1, kr] - values[jr, kr]) / h
    jl, kl = j[has_left], k[has_left]
    bwd[jl, kl] = (values[jl, kl] - values[jl - 1, kl]) / h
    b = has_left & has_right
    both[j[b], k[b]] = True
    # fall back to the existing side so both arrays are defined on all nodes
    only_r = has_right & ~has_left
    bwd[j[only_r], k[only_r]] = fwd[j[only_r], k[only_r]]
    only_l = has_left & ~has_right
    fwd[j[only_l], k[only_l]] = bwd[j[only_l], k[only_l]]
    return fwd, bwd, both
