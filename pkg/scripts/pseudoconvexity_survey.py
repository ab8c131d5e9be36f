"""Boundary-convexity survey: domains x cones, one verdict per pair.

Classifies built-in test boundaries against catalog cones, using the
strict-ellipticity shortcut where it applies.

Usage: python scripts/pseudoconvexity_survey.py
"""

import numpy as np

from jetcones.boundary import (
    boundary_point,
    cylinder_domain,
    project_to_boundary,
    saddle_domain,
    slab_domain,
    sphere_domain,
    strict_ellipticity_check,
    strict_pseudoconvex_at,
)
from jetcones.catalog import make_oracle


def main():
    domains = [
        (sphere_domain(3), [0.1, 0.2, 0.9]),
        (slab_domain(3), [1.0, 0.2, -0.1]),
        (cylinder_domain(), [0.9, 0.4, 0.0]),
        (saddle_domain(), [0.05, 0.05, 0.0]),
    ]
    keys = ["P", "P~", "pfold:p=2", "pucci:1,2", "branch:k=2", "sigma:k=2"]
    print(f"{'domain':34s} " + " ".join(f"{k:>10s}" for k in keys))
    for dom, seed in domains:
        x = project_to_boundary(dom, np.asarray(seed, dtype=float))
        bp = boundary_point(dom, x)
        cells = []
        for key in keys:
            oracle = make_oracle(key, 3)
            elliptic, _, _ = strict_ellipticity_check(oracle)
            if elliptic:
                cells.append("yes*")
            else:
                v = strict_pseudoconvex_at(oracle, bp)
                cells.append("yes" if v.convex else "no")
        print(f"{dom.label:34s} " + " ".join(f"{c:>10s}" for c in cells))
    print("(* strictly elliptic: no boundary geometry required)")


if __name__ == "__main__":
    main()
