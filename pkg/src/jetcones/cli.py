"""Command-line front end.

Subcommands: catalog, membership, dual, canonical, garding, distance,
pseudoconvex, solve, check. Outputs are JSON (to stdout) or CSV files;
every JSON payload carries the seed so runs are reproducible bit for
bit at a fixed seed and thread count.

Exit codes: 0 success, 1 negative verdict, 2 usage/parse error,
3 domain error, 4 non-convergence, 5 hypothesis violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import garding as gar
from .boundary import (
    boundary_point,
    domain_from_spec,
    project_to_boundary,
    strict_ellipticity_check,
    strict_pseudoconvex_at,
)
from .canonical import canonical_operator, signed_distance
from .errors import (
    HypothesisViolation,
    NotConverged,
    ParseError,
    UnknownKey,
    UnstableStep,
)
from .exprs import compile_expression
from .grids import GridFunction, square_grid
from .jets import Jet2, SymMat
from .solver import solve_dirichlet

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NOCONV = 4
EXIT_HYPOTHESIS = 5


def _load_matrix(text: str) -> SymMat:
    try:
        data = json.loads(text)
        return SymMat(np.asarray(data, dtype=float))
    except (json.JSONDecodeError, ValueError) as e:
        raise ParseError(f"bad matrix payload: {e}") from e


def _load_jet(text: str) -> Jet2:
    try:
        return Jet2.from_json_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise ParseError(f"bad jet payload: {e}") from e


def _emit(payload: dict, seed) -> None:
    payload.setdefault("seed", seed)
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _jet_from_args(args) -> Jet2:
    if getattr(args, "jet", None):
        return _load_jet(args.jet)
    if getattr(args, "matrix", None):
        return Jet2.from_matrix(_load_matrix(args.matrix))
    raise ParseError("provide --matrix or --jet")


def cmd_catalog(args) -> int:
    if args.action == "list":
        rows = []
        for name in cat.catalog_names():
            entry = cat.REGISTRY[name]
            rows.append({
                "key": name,
                "variable": entry.variable,
                "describe": entry.describe,
            })
        for name in gar.operator_names():
            rows.append({
                "key": name,
                "operator": True,
                "describe": gar.OPERATOR_DESCRIPTIONS[name],
            })
        _emit({"entries": rows, "count": len(rows)}, args.seed)
        return EXIT_OK
    # describe <key>
    name, _, _ = cat.parse_key(args.key)
    if name in cat.REGISTRY:
        _emit({"key": args.key, "describe": cat.describe_key(args.key)}, args.seed)
        return EXIT_OK
    if name in gar.OPERATOR_DESCRIPTIONS:
        _emit({"key": args.key, "describe": gar.OPERATOR_DESCRIPTIONS[name]}, args.seed)
        return EXIT_OK
    raise UnknownKey(f"unknown key {args.key!r}")


def cmd_membership(args) -> int:
    J = _jet_from_args(args)
    oracle = cat.make_oracle(args.key, J.n)
    if isinstance(oracle, cat.VariableFiberMap):
        x = np.asarray([float(v) for v in args.at.split(",")]) if args.at else \
            oracle.domain.center
        oracle = oracle.fiber_at(x)
    region = oracle.classify(J, args.tol)
    _emit({
        "key": args.key,
        "region": region.kind.value,
        "margin": region.margin,
        "value": oracle.value(J),
    }, args.seed)
    return EXIT_OK if region.is_member else EXIT_NEGATIVE


def cmd_dual(args) -> int:
    from .duality import dual_contains

    J = _jet_from_args(args)
    oracle = cat.make_oracle(args.key, J.n)
    if isinstance(oracle, cat.VariableFiberMap):
        x = np.asarray([float(v) for v in args.at.split(",")]) if args.at else \
            oracle.domain.center
        oracle = oracle.fiber_at(x)
    region = dual_contains(oracle, J, args.tol)
    _emit({
        "key": args.key,
        "dual_region": region.kind.value,
        "margin": region.margin,
    }, args.seed)
    return EXIT_OK if region.is_member else EXIT_NEGATIVE


def cmd_canonical(args) -> int:
    J = _jet_from_args(args)
    oracle = cat.make_oracle(args.key, J.n)
    value = canonical_operator(oracle, J.A, tol=args.tol)
    if args.out:
        flat = list(J.A.entries.ravel()) + [value]
        Path(args.out).write_text(",".join(repr(float(v)) for v in flat) + "\n")
    _emit({"key": args.key, "canonical": value}, args.seed)
    return EXIT_OK


def cmd_garding(args) -> int:
    A = _load_matrix(args.matrix)
    op = gar.make_operator(args.op, A.n)
    lam = gar.garding_eigenvalues(op, A)
    if args.out:
        flat = list(A.entries.ravel()) + list(lam)
        Path(args.out).write_text(",".join(repr(float(v)) for v in flat) + "\n")
    _emit({
        "op": args.op,
        "degree": op.degree,
        "eigenvalues": lam.tolist(),
        "value": op.eval(A),
    }, args.seed)
    return EXIT_OK


def cmd_distance(args) -> int:
    J = _jet_from_args(args)
    oracle = cat.make_oracle(args.key, J.n)
    value = signed_distance(oracle, J, directions=args.directions, seed=args.seed or 53)
    _emit({"key": args.key, "signed_distance": value}, args.seed)
    return EXIT_OK


def cmd_pseudoconvex(args) -> int:
    spec = json.loads(Path(args.domain).read_text()) if Path(args.domain).exists() \
        else json.loads(args.domain)
    dom = domain_from_spec(spec)
    n = len(dom.bbox.lo)
    oracle = cat.make_oracle(args.key, n)
    elliptic, worst, _ = strict_ellipticity_check(oracle)
    seeds = []
    if args.points:
        for chunk in args.points.split(";"):
            seeds.append(np.asarray([float(v) for v in chunk.split(",")]))
    else:
        rng = np.random.default_rng(args.seed or 101)
        for _ in range(args.count):
            seeds.append(dom.bbox.lo + rng.random(n) * (dom.bbox.hi - dom.bbox.lo))
    rows = ["x,e,principal_curvatures,verdict,t0"]
    all_yes = True
    for s in seeds:
        x = project_to_boundary(dom, s)
        bp = boundary_point(dom, x)
        if elliptic:
            verdict, t0 = True, 0.0
        else:
            v = strict_pseudoconvex_at(oracle, bp, t_cap=args.t_cap)
            verdict, t0 = v.convex, v.t0
        all_yes &= verdict
        rows.append(
            ";".join(str(round(c, 9)) for c in x) + ","
            + ";".join(str(round(c, 9)) for c in bp.e) + ","
            + ";".join(str(round(c, 9)) for c in bp.principal_curvatures) + ","
            + ("yes" if verdict else "no") + ","
            + ("" if t0 is None else str(t0))
        )
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all_yes else EXIT_NEGATIVE


def cmd_solve(args) -> int:
    config = json.loads(Path(args.config).read_text())
    n_side = int(round((config["box"][1] - config["box"][0]) / config["h"])) + 1
    d = int(config.get("dim", 2))
    grid = square_grid(n_side, config["box"][0], config["box"][1], d=d)
    bexpr = compile_expression(config["boundary"])
    mesh = grid.meshgrid()
    g = GridFunction(grid, np.asarray(bexpr(mesh), dtype=float) * np.ones(grid.dims))
    rhs = config.get("level", 0.0)
    if isinstance(rhs, str):
        rhs_fn = compile_expression(rhs)
        rhs_val = lambda x: float(rhs_fn(list(x)))
    else:
        rhs_val = float(rhs)
    init = np.zeros(grid.dims) if config.get("init") == "zero" else None
    u, report = solve_dirichlet(
        config["operator"], rhs_val, g,
        dt=config.get("dt"), tol=config.get("tol", 1e-10),
        max_iter=int(config.get("max_iter", 100_000)), init=init,
    )
    outdir = Path(args.out_dir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    lines = [",".join(f"x{i + 1}" for i in range(d)) + ",value"]
    for pt, v in zip(coords, u.values.ravel()):
        lines.append(",".join(repr(float(c)) for c in pt) + "," + repr(float(v)))
    (outdir / "solution.csv").write_text("\n".join(lines) + "\n")
    header = {
        "grid": {"box": config["box"], "h": grid.h, "dims": list(grid.dims)},
        "operator": config["operator"],
        "boundary": config["boundary"],
        "residuals": report.residual_history,
        "iterations": report.iterations,
        "dt": report.dt,
        "seed": args.seed,
    }
    (outdir / "solve.json").write_text(json.dumps(header, indent=2, sort_keys=True))
    _emit({"iterations": report.iterations, "residual": report.residual,
           "out_dir": str(outdir)}, args.seed)
    return EXIT_OK


def cmd_check(args) -> int:
    from .suites import run_suite

    ok, lines = run_suite(args.suite, seed=args.seed or 2024)
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jetcones", description=__doc__)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1,
                    help="reserved; module calls are single-threaded")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list or describe catalog entries")
    p.add_argument("action", choices=["list", "describe"])
    p.add_argument("key", nargs="?")
    p.set_defaults(fn=cmd_catalog)

    for name, fn in (("membership", cmd_membership), ("dual", cmd_dual)):
        p = sub.add_parser(name)
        p.add_argument("--key", required=True)
        p.add_argument("--matrix")
        p.add_argument("--jet")
        p.add_argument("--at", help="evaluation point for variable fibers, e.g. 0.1,0.2")
        p.add_argument("--tol", type=float, default=cat.DEFAULT_TOL)
        p.set_defaults(fn=fn)

    p = sub.add_parser("canonical")
    p.add_argument("--key", required=True)
    p.add_argument("--matrix")
    p.add_argument("--jet")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", help="CSV output path (matrix entries flattened, then value)")
    p.set_defaults(fn=cmd_canonical)

    p = sub.add_parser("garding")
    p.add_argument("--op", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", help="CSV output path (inputs flattened, then eigenvalues)")
    p.set_defaults(fn=cmd_garding)

    p = sub.add_parser("distance")
    p.add_argument("--key", required=True)
    p.add_argument("--matrix")
    p.add_argument("--jet")
    p.add_argument("--directions", type=int, default=256)
    p.set_defaults(fn=cmd_distance)

    p = sub.add_parser("pseudoconvex")
    p.add_argument("--domain", required=True, help="domain spec JSON (inline or path)")
    p.add_argument("--key", required=True)
    p.add_argument("--points", help="seed points 'x1,x2;x1,x2;...'")
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--t-cap", type=float, default=1e6)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_pseudoconvex)

    p = sub.add_parser("solve")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("check")
    p.add_argument("suite", choices=[
        "duality-involution", "garding-identities", "monotonicity",
        "comparison", "utp",
    ])
    p.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.fn(args)
    except (ParseError, UnknownKey) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NOCONV
    except (HypothesisViolation,) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ValueError, UnstableStep) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
