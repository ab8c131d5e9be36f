"""Uniform grids, wide stencils, discrete jets, envelopes, sup-convolution.

Grids are uniform over a box in dimension 1, 2, or 3 with a boundary
layer thick enough for the widest stencil offset. The default 2-D
stencil holds 8 directions up to sign: the axes, the diagonals, and the
(2,1)-type knight moves. Directional second differences are exact on
quadratics whose eigenframe is spanned by stencil directions; off the
stencil the min/max/partial-sum surrogates carry a measured bias (see
the stencil_bias helper) rather than a convergence theorem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BoundaryNode,
    BoundaryViolation,
    EmptyFamily,
    StencilOutOfBounds,
)
from .jets import Jet2, SymMat

STENCIL_2D = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2))
STENCIL_1D = ((1,),)
STENCIL_3D = (
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1),
)

_DEFAULT_STENCILS = {1: STENCIL_1D, 2: STENCIL_2D, 3: STENCIL_3D}


@dataclass(frozen=True)
class Grid:
    """Uniform grid over [lo, hi]^d with integer-offset stencil directions."""

    lo: np.ndarray
    hi: np.ndarray
    dims: tuple
    stencil_dirs: tuple = ()

    def __init__(self, lo, hi, dims, stencil_dirs=None):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        dims = tuple(int(d) for d in np.atleast_1d(dims))
        d = len(dims)
        if len(lo) != d or len(hi) != d:
            raise ValueError("box and dims dimensions disagree")
        steps = (hi - lo) / (np.array(dims) - 1)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=1e-14):
            raise ValueError(f"grid spacing must be uniform, got {steps}")
        if stencil_dirs is None:
            stencil_dirs = _DEFAULT_STENCILS[d]
        stencil_dirs = tuple(tuple(int(c) for c in s) for s in stencil_dirs)
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "stencil_dirs", stencil_dirs)
        if min(dims) <= 2 * self.layer_width:
            raise ValueError(
                f"grid too small for stencil width {self.layer_width}: dims {dims}"
            )

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def h(self) -> float:
        return float((self.hi[0] - self.lo[0]) / (self.dims[0] - 1))

    @property
    def layer_width(self) -> int:
        """Boundary layer thickness: the widest stencil offset component."""
        return max(max(abs(c) for c in s) for s in self.stencil_dirs)

    def coords(self) -> list:
        return [np.linspace(self.lo[i], self.hi[i], self.dims[i]) for i in range(self.d)]

    def meshgrid(self) -> list:
        return np.meshgrid(*self.coords(), indexing="ij")

    def interior_slice(self, width: Optional[int] = None) -> tuple:
        w = self.layer_width if width is None else width
        return tuple(slice(w, dim - w) for dim in self.dims)

    def interior_mask(self, width: Optional[int] = None) -> np.ndarray:
        m = np.zeros(self.dims, dtype=bool)
        m[self.interior_slice(width)] = True
        return m

    def interior_nodes(self, width: Optional[int] = None) -> list:
        w = self.layer_width if width is None else width
        ranges = [range(w, dim - w) for dim in self.dims]
        return list(itertools.product(*ranges))

    def node_point(self, node) -> np.ndarray:
        return self.lo + self.h * np.asarray(node, dtype=float)

    def orthogonal_tuples(self, p: int) -> list:
        """All p-tuples of mutually orthogonal stencil directions."""
        dirs = [np.array(s, dtype=float) for s in self.stencil_dirs]
        out = []
        for combo in itertools.combinations(range(len(dirs)), p):
            ok = all(
                abs(dirs[i] @ dirs[j]) < 1e-12
                for i, j in itertools.combinations(combo, 2)
            )
            if ok:
                out.append(combo)
        return out


def square_grid(n_side: int, lo=0.0, hi=1.0, d: int = 2,
                stencil_dirs=None) -> Grid:
    return Grid(np.full(d, lo), np.full(d, hi), (n_side,) * d, stencil_dirs)


@dataclass
class GridFunction:
    """Values over a grid, with the boundary layer pinned during solves."""

    grid: Grid
    values: np.ndarray
    boundary_data: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.dims)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function must be finite")
        if self.boundary_data is None:
            self.boundary_data = self.values.copy()
        mask = ~self.grid.interior_mask()
        self.values[mask] = self.boundary_data[mask]

    @staticmethod
    def from_callable(grid: Grid, f: Callable) -> "GridFunction":
        mesh = grid.meshgrid()
        vals = np.vectorize(lambda *xs: float(f(np.array(xs))))(*mesh)
        return GridFunction(grid, vals)

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.boundary_data.copy())

    def boundary_trace(self) -> np.ndarray:
        return self.values[~self.grid.interior_mask()]

    def second_difference(self, node, direction) -> float:
        """(u(x + h*dir) + u(x - h*dir) - 2u(x)) / (h |dir|)^2."""
        g = self.grid
        node = tuple(node)
        fwd = tuple(node[i] + direction[i] for i in range(g.d))
        bwd = tuple(node[i] - direction[i] for i in range(g.d))
        for nb in (fwd, bwd):
            if any(c < 0 or c >= g.dims[i] for i, c in enumerate(nb)):
                raise StencilOutOfBounds(f"offset {direction} leaves the grid at {node}")
        step2 = (g.h ** 2) * float(sum(c * c for c in direction))
        return (self.values[fwd] + self.values[bwd] - 2.0 * self.values[node]) / step2

    def discrete_spectrum(self, node) -> np.ndarray:
        """Directional second differences over the stencil (one per direction)."""
        return np.array([self.second_difference(node, s) for s in self.grid.stencil_dirs])

    def discrete_gradient(self, node) -> np.ndarray:
        g = self.grid
        node = tuple(node)
        out = np.zeros(g.d)
        for i in range(g.d):
            fwd = list(node)
            bwd = list(node)
            fwd[i] += 1
            bwd[i] -= 1
            out[i] = (self.values[tuple(fwd)] - self.values[tuple(bwd)]) / (2 * g.h)
        return out

    def discrete_hessian(self, node) -> SymMat:
        """Centered second differences including cross terms; exact on quadratics."""
        g = self.grid
        node = tuple(node)
        h = g.h
        H = np.zeros((g.d, g.d))
        for i in range(g.d):
            ei = [0] * g.d
            ei[i] = 1
            H[i, i] = self.second_difference(node, ei)
            for j in range(i + 1, g.d):
                pp = list(node); pm = list(node); mp = list(node); mm = list(node)
                pp[i] += 1; pp[j] += 1
                pm[i] += 1; pm[j] -= 1
                mp[i] -= 1; mp[j] += 1
                mm[i] -= 1; mm[j] -= 1
                H[i, j] = H[j, i] = (
                    self.values[tuple(pp)] - self.values[tuple(pm)]
                    - self.values[tuple(mp)] + self.values[tuple(mm)]
                ) / (4 * h * h)
        return SymMat(H)

    def discrete_jet(self, node) -> Jet2:
        """(value, centered gradient, centered Hessian) at an interior node."""
        g = self.grid
        node = tuple(node)
        w = 1  # jets need one-node margins; wide stencil ops check their own
        if any(c < w or c >= g.dims[i] - w for i, c in enumerate(node)):
            raise BoundaryNode(f"node {node} has no centered jet")
        return Jet2(float(self.values[node]), self.discrete_gradient(node),
                    self.discrete_hessian(node))


def directional_second_difference(u: GridFunction, node, direction) -> float:
    return u.second_difference(node, direction)


def discrete_spectrum(u: GridFunction, node) -> np.ndarray:
    return u.discrete_spectrum(node)


def shifted_views(values: np.ndarray, direction) -> tuple:
    """Interior-aligned views (center, forward, backward) for a stencil offset."""
    d = values.ndim
    w = max(abs(c) for c in direction)

    def sl(off):
        return tuple(
            slice(w + off[i], values.shape[i] - w + off[i]) for i in range(d)
        )

    zero = (0,) * d
    fwd = tuple(direction)
    bwd = tuple(-c for c in direction)
    return values[sl(zero)], values[sl(fwd)], values[sl(bwd)]


def second_difference_field(values: np.ndarray, direction, h: float,
                            width: int) -> np.ndarray:
    """Vectorized directional second difference on the width-trimmed interior."""
    d = values.ndim

    def sl(off):
        return tuple(
            slice(width + off[i], values.shape[i] - width + off[i]) for i in range(d)
        )

    c = values[sl((0,) * d)]
    f = values[sl(tuple(direction))]
    b = values[sl(tuple(-x for x in direction))]
    step2 = (h ** 2) * float(sum(x * x for x in direction))
    return (f + b - 2.0 * c) / step2


# ---------------------------------------------------------------------------
# Upper envelopes and sup-convolution
# ---------------------------------------------------------------------------

def perron_envelope(family: Sequence[GridFunction], g: GridFunction,
                    tol: float = 1e-12) -> GridFunction:
    """Pointwise max of a family of grid functions dominated by g on the layer.

    Raises EmptyFamily / BoundaryViolation; the envelope keeps g as its
    boundary data. The max of discrete subsolutions stays a subsolution
    for positivity-monotone oracles, which the caller can verify with
    check_subharmonic.
    """
    family = list(family)
    if not family:
        raise EmptyFamily("perron envelope of an empty family")
    grid = g.grid
    mask = ~grid.interior_mask()
    for k, w in enumerate(family):
        if w.grid.dims != grid.dims:
            raise ValueError("family member grid mismatch")
        excess = float(np.max(w.values[mask] - g.values[mask]))
        if excess > tol:
            raise BoundaryViolation(
                f"family member {k} exceeds boundary data by {excess:.3e}"
            )
    vals = family[0].values.copy()
    for w in family[1:]:
        np.maximum(vals, w.values, out=vals)
    return GridFunction(grid, vals, boundary_data=vals.copy())


def sup_convolution(u: GridFunction, eps: float) -> GridFunction:
    """Discrete quadratic-penalty upper envelope over grid nodes.

    u^eps(x) = max_y [ u(y) - |y - x|^2 / (2 eps) ], computed by
    separable one-dimensional passes. Dominates u, increases with eps,
    and u^eps + |x|^2/(2 eps) is a discrete max of affine functions of
    x, hence convex along every grid line.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g = u.grid
    vals = u.values.copy()
    for axis in range(g.d):
        xs = np.linspace(g.lo[axis], g.hi[axis], g.dims[axis])
        penalty = (xs[None, :] - xs[:, None]) ** 2 / (2.0 * eps)
        moved = np.moveaxis(vals, axis, -1)
        flat = moved.reshape(-1, g.dims[axis])
        # out[i, x] = max_y flat[i, y] - penalty[x, y]
        out = np.max(flat[:, None, :] - penalty[None, :, :], axis=2)
        vals = np.moveaxis(out.reshape(moved.shape), -1, axis)
    return GridFunction(g, vals, boundary_data=vals.copy())


def sup_convolution_bruteforce(u: GridFunction, eps: float) -> GridFunction:
    """Direct double-loop reference for the separable implementation."""
    g = u.grid
    pts = np.stack([m.ravel() for m in g.meshgrid()], axis=-1)
    flat = u.values.ravel()
    out = np.empty_like(flat)
    for i, x in enumerate(pts):
        d2 = np.sum((pts - x) ** 2, axis=1)
        out[i] = np.max(flat - d2 / (2.0 * eps))
    vals = out.reshape(g.dims)
    return GridFunction(g, vals, boundary_data=vals.copy())


def quasiconvexity_defect(u: GridFunction, eps: float) -> float:
    """Worst second difference of u + |x|^2/(2 eps) over stencil directions.

    Nonnegative (up to roundoff) when u is a sup-convolution with this
    eps: discrete (1/eps)-quasiconvexity.
    """
    g = u.grid
    mesh = g.meshgrid()
    q = sum(m**2 for m in mesh) / (2.0 * eps)
    shifted = u.values + q
    worst = np.inf
    for s in g.stencil_dirs:
        fld = second_difference_field(shifted, s, g.h, g.layer_width)
        worst = min(worst, float(np.min(fld)))
    return worst
