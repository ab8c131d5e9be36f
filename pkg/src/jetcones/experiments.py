"""Reusable experiment constructions for the comparison / ZMP / UTP harness.

Sub/super pairs are quadratics: their discrete jets are exact, so the
hypothesis checks in the experiments are sharp. Subsolutions get a
Hessian pushed inside the cone; supersolutions get one pushed just
outside its interior, and constants are adjusted so the boundary
ordering is tight somewhere.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .catalog import (
    Arity,
    FiberOracle,
    MonotonicityCone,
    make_oracle,
    shift_to_boundary,
)
from .grids import Grid, GridFunction, square_grid
from .jets import Jet2, SymMat, random_symmetric
from .solver import comparison_experiment, zmp_experiment


def quadratic_grid_function(grid: Grid, A: SymMat, p=None, c: float = 0.0,
                            x0=None) -> GridFunction:
    """u(x) = c + p.(x - x0) + (x - x0)^T A (x - x0) / 2 sampled on the grid."""
    x0 = grid.lo * 0.5 + grid.hi * 0.5 if x0 is None else np.asarray(x0, dtype=float)
    p = np.zeros(grid.d) if p is None else np.asarray(p, dtype=float)
    mesh = grid.meshgrid()
    pts = np.stack(mesh, axis=-1) - x0
    quad = 0.5 * np.einsum("...i,ij,...j->...", pts, A.entries, pts)
    lin = np.einsum("...i,i->...", pts, p)
    return GridFunction(grid, c + lin + quad)


def _hessian_inside(oracle: FiberOracle, rng: np.random.Generator,
                    margin: float = 0.2) -> SymMat:
    n = oracle.n
    eyeJ = Jet2.from_matrix(SymMat.identity(n))
    A = random_symmetric(rng, n, 1.0)
    J = shift_to_boundary(oracle, Jet2.from_matrix(A), eyeJ, margin=margin)
    if J is None:
        raise RuntimeError(f"could not push a Hessian inside {oracle.label}")
    return J.A


def _hessian_outside_interior(oracle: FiberOracle, rng: np.random.Generator,
                              margin: float = 0.2) -> SymMat:
    n = oracle.n
    eyeJ = Jet2.from_matrix(SymMat.identity(n))
    A = random_symmetric(rng, n, 1.0)
    J = shift_to_boundary(oracle, Jet2.from_matrix(A), eyeJ, margin=-margin)
    if J is None:
        raise RuntimeError(f"could not push a Hessian out of {oracle.label}")
    return J.A


def sub_super_pair(oracle: FiberOracle, grid: Grid, rng: np.random.Generator):
    """Quadratic subsolution / supersolution with tight boundary ordering."""
    A_sub = _hessian_inside(oracle, rng)
    B_sup = _hessian_outside_interior(oracle, rng)
    p_sub = rng.standard_normal(grid.d) * 0.5
    p_sup = rng.standard_normal(grid.d) * 0.5
    u = quadratic_grid_function(grid, A_sub, p_sub)
    w = quadratic_grid_function(grid, B_sup, p_sup)
    mask = ~grid.interior_mask()
    gap = float(np.max(u.values[mask] - w.values[mask]))
    w = GridFunction(grid, w.values + gap, boundary_data=w.boundary_data + gap)
    return u, w


def comparison_battery(keys, pairs: int = 10, n_side: int = 33, seed: int = 107,
                       dims: Optional[dict] = None) -> dict:
    """Seeded sub/super comparison verdicts per catalog key."""
    dims = dims or {}
    out = {}
    for key in keys:
        d = dims.get(key, 2)
        grid = square_grid(n_side if d == 2 else max(9, n_side // 3), 0.0, 1.0, d=d)
        oracle = make_oracle(key, d)
        rng = np.random.default_rng(seed)
        verdicts = []
        for _ in range(pairs):
            u, w = sub_super_pair(oracle, grid, rng)
            verdicts.append(comparison_experiment(oracle, u, w))
        out[key] = verdicts
    return out


def zmp_sample(M: MonotonicityCone, grid: Grid, rng: np.random.Generator,
               arity: Arity = Arity.FULL) -> GridFunction:
    """A discrete dual-cone subharmonic that is <= 0 on the boundary layer.

    Quadratics whose Hessian has a safely positive top eigenvalue lie in
    the dual of every fundamental-family cone (the negated jet cannot
    have a strictly positive-definite Hessian part).
    """
    n = grid.d
    A = random_symmetric(rng, n, 1.0)
    ev, vec = np.linalg.eigh(A.entries)
    if ev[-1] < 0.3:
        A = SymMat(A.entries + (0.3 - ev[-1]) * np.outer(vec[:, -1], vec[:, -1]))
    p = rng.standard_normal(n) * 0.5
    z = quadratic_grid_function(grid, A, p)
    mask = ~grid.interior_mask()
    shift = float(np.max(z.values[mask]))
    return GridFunction(grid, z.values - shift, boundary_data=z.boundary_data - shift)


def zmp_battery(cases, n_side: int = 21, seed: int = 109, samples: int = 5) -> dict:
    """Run the zero-maximum-principle experiment over (label, M, arity, box)."""
    out = {}
    for label, M, arity, lo, hi in cases:
        grid = square_grid(n_side, lo, hi, d=2)
        rng = np.random.default_rng(seed)
        verdicts = []
        for _ in range(samples):
            z = zmp_sample(M, grid, rng, arity)
            verdicts.append(zmp_experiment(M, z, arity=arity))
        out[label] = verdicts
    return out


# ---------------------------------------------------------------------------
# Uniform translation probes
# ---------------------------------------------------------------------------


def perturbed_ma_map(n: int = 2, box_half: float = 1.0):
    """The demo perturbed Monge-Ampere fiber map with Lipschitz data."""
    from .catalog import Box, fiber_perturbed_MA

    box = Box(-box_half * np.ones(n), box_half * np.ones(n))

    def M_field(x):
        m = np.eye(n)
        m[0, 0] = 1.0 + float(x @ x)
        return SymMat(m)

    return fiber_perturbed_MA(box, M_field, lambda x: 1.0, n=n)


def utp_perturbed_ma(theta: float, n_side: int = 17, seed: int = 113,
                     curvature: float = 0.15, max_shift: int = 3):
    """Translation probe on the perturbed MA fiber.

    The base subharmonic u = -c x1^4 / 12 has membership exactly tight
    along the x2 axis, so naked translates fail while theta-perturbed
    ones survive within a positive radius.
    """
    from .solver import uniform_translation_probe

    theta_map = perturbed_ma_map(2)
    grid = square_grid(n_side, -1.0, 1.0, d=2)

    def u_fun(x):
        return -curvature * x[0] ** 4 / 12.0

    u = GridFunction.from_callable(grid, u_fun)
    K = 2.0 * 2 + 1.0

    def psi_fun(x):
        return 0.5 * (float(x @ x) - K)

    psi = GridFunction.from_callable(grid, psi_fun)
    return uniform_translation_probe(u, theta_map, psi, theta, max_shift=max_shift)
