"""Solve the three stencil-exact Dirichlet benchmarks and print errors.

Each problem has a quadratic exact solution reproduced exactly by the
wide stencil, so the max-node error measures pure solver convergence.

Usage: python scripts/run_dirichlet_benchmarks.py [n_side]
"""

import sys
import time

import numpy as np

from jetcones.grids import GridFunction, square_grid
from jetcones.solver import solve_dirichlet


def main():
    n_side = int(sys.argv[1]) if len(sys.argv) > 1 else 65
    grid = square_grid(n_side, 0.0, 1.0)
    quad = GridFunction.from_callable(grid, lambda x: 0.5 * float(x @ x))
    saddle = GridFunction.from_callable(grid, lambda x: x[0] ** 2 - x[1] ** 2)
    runs = [
        ("P", 1.0, quad, "minimal directional curvature = 1"),
        ("pfold:p=2", 0.0, saddle, "harmonic (frame-mean = 0)"),
        ("slag", float(np.pi / 2), quad, "phase sum = pi/2"),
    ]
    zeros = np.zeros(grid.dims)
    for key, rhs, exact, desc in runs:
        t0 = time.time()
        u, rep = solve_dirichlet(key, rhs, exact, tol=1e-8, init=zeros)
        err = float(np.max(np.abs(u.values - exact.values)))
        print(f"{key:12s} {desc:36s} err={err:.2e} "
              f"iters={rep.iterations:6d} time={time.time() - t0:5.1f}s")


if __name__ == "__main__":
    main()
