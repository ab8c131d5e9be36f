"""Desk-scale viscosity Dirichlet solver and experiment harness.

The discretization is a wide-stencil monotone scheme: each supported
operator is a min/max/partial-sum reduction of directional second
differences, so increasing any neighbor value never decreases the
update. The solve is a damped Jacobi fixed point

    u <- u + dt * (F_h(u) - psi)   on interior nodes,

with dt capped by h^2 / (2 * sum_theta |theta|^-2 * lip) and a 0.9
safety factor; updates are synchronous (read old array, write new) so
residual histories are reproducible. Discrete comparison holds for the
scheme by monotonicity.

The experiment harness turns the comparison principle, the zero maximum
principle for dual cones, and the uniform translation property into
grid-level checks with explicit hypothesis validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .catalog import (
    Arity,
    DEFAULT_TOL,
    FiberOracle,
    MonotonicityCone,
    VariableFiberMap,
    ConeKind,
    cone_M,
)
from .duality import dual_oracle
from .errors import (
    HypothesisViolation,
    NotConverged,
    UnknownKey,
    UnstableStep,
)
from .grids import Grid, GridFunction, second_difference_field
from .jets import Jet2

# ---------------------------------------------------------------------------
# Discrete operators (monotone reductions of directional second differences)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteOperator:
    """Monotone wide-stencil operator with its stability weight.

    center_weight bounds sum_theta |dR/dDelta_theta| / |theta|^2 over
    the directions active in the reduction R at a node; the explicit
    Euler step stays monotone for dt <= h^2 / (2 * center_weight).
    A min/max over directions activates a single unit direction
    (weight 1, the classical h^2/2 bound); frame sums add their terms.
    """

    key: str
    apply: Callable[[np.ndarray, Grid], np.ndarray]  # values -> interior field
    center_weight: float = 1.0


def _diff_stack(values: np.ndarray, grid: Grid) -> np.ndarray:
    w = grid.layer_width
    return np.stack(
        [second_difference_field(values, s, grid.h, w) for s in grid.stencil_dirs]
    )


def _frame_stack(diffs: np.ndarray, tuples) -> np.ndarray:
    return np.stack([sum(diffs[i] for i in combo) for combo in tuples])


def make_discrete_operator(key: str, grid: Grid) -> DiscreteOperator:
    """Build the monotone discretization addressed by an operator key.

    Supported: "P" (minimal directional curvature), "P~" (maximal),
    "branch:k=<n or 1>" in 2-D, "pfold:p=<p>" (mean over the best
    orthogonal frame, the c = 1 canonical scaling), "slag" (sum of
    arctans over the worst frame), "pucci:lam,Lam".
    """
    from .catalog import parse_key

    name, kv, pos = parse_key(key)
    d = grid.d

    if name == "P" or (name == "branch" and int(kv.get("k", 1)) == 1) or (
        name == "pfold" and int(kv.get("p", pos[0] if pos else 1)) == 1
    ):
        return DiscreteOperator(key, lambda v, g: np.min(_diff_stack(v, g), axis=0))
    if name == "P~" or (name == "branch" and int(kv.get("k", 0)) == d):
        return DiscreteOperator(key, lambda v, g: np.max(_diff_stack(v, g), axis=0))
    if name == "pfold":
        p = int(kv.get("p", pos[0] if pos else 1))
        tuples = grid.orthogonal_tuples(p)
        if not tuples:
            raise UnknownKey(f"stencil has no orthogonal {p}-tuples for {key!r}")
        weight = _frame_weight(grid, tuples, slope=1.0) / p

        def apply(v, g, tuples=tuples, p=p):
            return np.min(_frame_stack(_diff_stack(v, g), tuples), axis=0) / p

        return DiscreteOperator(key, apply, center_weight=weight)
    if name == "slag":
        tuples = grid.orthogonal_tuples(d)

        def apply(v, g, tuples=tuples):
            diffs = np.arctan(_diff_stack(v, g))
            return np.min(_frame_stack(diffs, tuples), axis=0)

        return DiscreteOperator(key, apply,
                                center_weight=_frame_weight(grid, tuples, slope=1.0))
    if name == "pucci":
        lam = float(kv.get("lam", pos[0] if pos else 1.0))
        Lam = float(kv.get("Lam", pos[1] if len(pos) > 1 else 2.0))
        tuples = grid.orthogonal_tuples(d)

        def apply(v, g, tuples=tuples):
            diffs = _diff_stack(v, g)
            weighted = lam * np.maximum(diffs, 0.0) + Lam * np.minimum(diffs, 0.0)
            return np.min(_frame_stack(weighted, tuples), axis=0)

        return DiscreteOperator(key, apply,
                                center_weight=_frame_weight(grid, tuples, slope=Lam))
    raise UnknownKey(f"no monotone discretization registered for key {key!r}")


def _frame_weight(grid: Grid, tuples, slope: float) -> float:
    """Worst active sum of slope / |theta|^2 over the candidate frames."""
    dirs = grid.stencil_dirs
    return max(
        sum(slope / sum(c * c for c in dirs[i]) for i in combo) for combo in tuples
    )


def stability_dt(grid: Grid, center_weight: float, safety: float = 0.9) -> float:
    """dt bound h^2 / (2 * active sum of |theta|^-2 * slope), with safety.

    The sum runs over the directions active in the operator's reduction
    (a min/max activates one direction), so min-type operators get the
    classical h^2/2 step.
    """
    return safety * grid.h**2 / (2.0 * center_weight)


def stencil_bias(grid: Grid, op_key: str, rng: np.random.Generator,
                 trials: int = 50) -> float:
    """Measured worst gap between the discrete operator and its target on
    random quadratics (the honest substitute for a convergence theorem)."""
    from .jets import random_symmetric

    op = make_discrete_operator(op_key, grid)
    worst = 0.0
    for _ in range(trials):
        B = random_symmetric(rng, grid.d)
        u = GridFunction.from_callable(grid, lambda x: 0.5 * float(x @ B.entries @ x))
        fld = op.apply(u.values, grid)
        from .catalog import parse_key

        name, kv, pos = parse_key(op_key)
        if name == "P":
            target = float(np.linalg.eigvalsh(B.entries)[0])
        elif name == "P~":
            target = float(np.linalg.eigvalsh(B.entries)[-1])
        elif name == "slag":
            target = float(np.sum(np.arctan(np.linalg.eigvalsh(B.entries))))
        elif name == "pfold":
            p = int(kv.get("p", pos[0] if pos else 1))
            target = float(np.mean(np.linalg.eigvalsh(B.entries)[:p]))
        else:
            continue
        worst = max(worst, float(np.max(np.abs(fld - target))))
    return worst


@dataclass
class SolveReport:
    operator: str
    iterations: int
    residual: float
    dt: float
    residual_history: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "operator": self.operator,
            "iterations": self.iterations,
            "residual": self.residual,
            "dt": self.dt,
            "residual_history": self.residual_history,
        }


def solve_dirichlet(
    op_key: str,
    rhs: Union[float, Callable[[np.ndarray], float]],
    g: GridFunction,
    dt: Optional[float] = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    record_every: int = 50,
    init: Optional[np.ndarray] = None,
) -> tuple:
    """Damped fixed-point solve of F_h(u) = rhs with boundary data g.

    rhs is a constant level or a source field psi(x). The iteration
    starts from g's values unless init supplies an interior guess.
    Returns the iterate and a SolveReport with the residual history.
    Raises NotConverged past max_iter and UnstableStep when the residual
    grows for 100 consecutive steps.
    """
    grid = g.grid
    op = make_discrete_operator(op_key, grid)
    dt = stability_dt(grid, op.center_weight) if dt is None else dt
    interior = grid.interior_slice()
    if callable(rhs):
        mesh = grid.meshgrid()
        pts = np.stack(mesh, axis=-1)
        rhs_field = np.apply_along_axis(lambda x: float(rhs(x)), -1, pts)[interior]
    else:
        rhs_field = float(rhs)
    u = g.values.copy()
    if init is not None:
        u[interior] = np.asarray(init, dtype=float).reshape(grid.dims)[interior]
    history = []
    prev_res = math.inf
    growth = 0
    for it in range(1, max_iter + 1):
        fld = op.apply(u, grid) - rhs_field
        res = float(np.max(np.abs(fld)))
        if not math.isfinite(res):
            raise UnstableStep(f"residual became non-finite at it={it}")
        if it % record_every == 1 or res <= tol:
            history.append(res)
        if res <= tol:
            out = GridFunction(grid, u, boundary_data=g.boundary_data.copy())
            return out, SolveReport(op_key, it, res, dt, history)
        growth = growth + 1 if res > prev_res * (1 + 1e-12) else 0
        if growth >= 100:
            raise UnstableStep(f"residual grew for {growth} consecutive steps at it={it}")
        prev_res = res
        u[interior] = u[interior] + dt * fld
    raise NotConverged(
        f"{op_key}: residual {prev_res:.3e} > {tol:.1e} after {max_iter} iterations",
        residuals=history,
    )


def scheme_monotonicity_probe(
    op_key: str,
    grid: Grid,
    states: int = 100,
    seed: int = 97,
    bump: float = 1e-6,
    tol: float = 1e-12,
) -> bool:
    """Finite-difference check that the update map is monotone.

    At random states, bumping one neighbor up must not decrease the
    updated value at any node (dt at the stability bound).
    """
    rng = np.random.default_rng(seed)
    op = make_discrete_operator(op_key, grid)
    dt = stability_dt(grid, op.center_weight)
    interior = grid.interior_slice()
    for _ in range(states):
        u = rng.standard_normal(grid.dims)
        node = tuple(rng.integers(0, dim) for dim in grid.dims)
        base = u[interior] + dt * op.apply(u, grid)
        u2 = u.copy()
        u2[node] += bump
        upd = u2[interior] + dt * op.apply(u2, grid)
        if float(np.min(upd - base)) < -tol * bump:
            return False
    return True


# ---------------------------------------------------------------------------
# Discrete subharmonicity
# ---------------------------------------------------------------------------


@dataclass
class NodeReport:
    """Per-node classification summary from a discrete jet sweep."""

    total: int
    members: int
    worst_margin: float
    failures: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return self.members == self.total


def check_subharmonic(
    u: GridFunction,
    fiber: Union[FiberOracle, VariableFiberMap],
    tol: float = DEFAULT_TOL,
    width: int = 1,
) -> NodeReport:
    """Classify every interior node's discrete jet against the fiber."""
    variable = isinstance(fiber, VariableFiberMap)
    grid = u.grid
    total = members = 0
    worst = math.inf
    failures = []
    for node in grid.interior_nodes(width):
        J = u.discrete_jet(node)
        oracle = fiber.fiber_at(grid.node_point(node)) if variable else fiber
        r = oracle.classify(J, tol)
        total += 1
        m = r.margin if r.is_member else -r.margin
        worst = min(worst, m)
        if r.is_member:
            members += 1
        elif len(failures) < 8:
            failures.append((node, m))
    return NodeReport(total, members, worst, failures)


def check_superharmonic(
    w: GridFunction,
    fiber: Union[FiberOracle, VariableFiberMap],
    tol: float = DEFAULT_TOL,
    width: int = 1,
) -> NodeReport:
    """Superharmonicity via duality: -w must be subharmonic for the dual."""
    neg = GridFunction(w.grid, -w.values, boundary_data=-w.boundary_data)
    if isinstance(fiber, VariableFiberMap):
        base = fiber

        def fiber_at(x):
            return dual_oracle(base.fiber_at(x))

        dual = VariableFiberMap(
            label=f"dual of [{base.label}]",
            domain=base.domain,
            fiber_at=fiber_at,
            monotonicity=base.monotonicity,
            reference_jet=base.reference_jet,
            arity=base.arity,
        )
    else:
        dual = dual_oracle(fiber)
    return check_subharmonic(neg, dual, tol, width)


# ---------------------------------------------------------------------------
# Comparison / ZMP experiments
# ---------------------------------------------------------------------------


@dataclass
class Verdict:
    ok: bool
    witness_node: Optional[tuple] = None
    margin: float = 0.0
    note: str = ""


def comparison_experiment(
    fiber: Union[FiberOracle, VariableFiberMap],
    u_sub: GridFunction,
    w_super: GridFunction,
    tol: float = DEFAULT_TOL,
    ordering_slack: float = 1e-9,
) -> Verdict:
    """Boundary ordering of a sub/super pair must propagate to the interior.

    Hypotheses (u subharmonic, w superharmonic, u <= w on the boundary
    layer) are validated first; HypothesisViolation reports which failed.
    """
    sub = check_subharmonic(u_sub, fiber, tol)
    if not sub.all_pass:
        raise HypothesisViolation(
            f"u fails the subharmonic check at {sub.total - sub.members} nodes "
            f"(worst margin {sub.worst_margin:.3e})"
        )
    sup = check_superharmonic(w_super, fiber, tol)
    if not sup.all_pass:
        raise HypothesisViolation(
            f"w fails the superharmonic check at {sup.total - sup.members} nodes "
            f"(worst margin {sup.worst_margin:.3e})"
        )
    grid = u_sub.grid
    mask = ~grid.interior_mask()
    gap = u_sub.values[mask] - w_super.values[mask]
    if float(np.max(gap)) > ordering_slack:
        raise HypothesisViolation(f"boundary ordering fails by {float(np.max(gap)):.3e}")
    diff = u_sub.values - w_super.values
    worst = float(np.max(diff))
    if worst > ordering_slack:
        node = np.unravel_index(int(np.argmax(diff)), diff.shape)
        return Verdict(ok=False, witness_node=tuple(node), margin=worst)
    return Verdict(ok=True, margin=worst)


def strict_approximator(M: MonotonicityCone, grid: Grid,
                        margin_target: float = 1e-3) -> Optional[GridFunction]:
    """A strictly M-subharmonic quadratic on the grid box, when one exists.

    The dichotomy: R infinite admits psi on every bounded box; R finite
    requires the box to fit inside a translate of the truncated cone
    (the directional cone intersected with the radius-R ball). Returns
    None, with the obstruction documented by the caller, when the box
    does not fit.
    """
    n = grid.d
    center = 0.5 * (grid.lo + grid.hi)
    halfdiag = 0.5 * float(np.linalg.norm(grid.hi - grid.lo))
    if math.isinf(M.R):
        x0 = center
        if M.D.kind is not ConeKind.FULL:
            # push the vertex far along -interior direction so the box
            # sits strictly inside the cone
            dirn = M.D.interior_direction(n)
            x0 = center - (halfdiag * 50.0 + 1.0) * dirn
    else:
        if M.D.kind is ConeKind.FULL:
            if halfdiag >= M.R * (1 - 1e-9):
                return None
            x0 = center
        else:
            dirn = M.D.interior_direction(n)
            # candidate vertices at increasing depth along -dirn; the box
            # must fit the ball (radius R around x0) and the cone
            x0 = None
            for depth in np.linspace(0.0, M.R, 200):
                cand = center - depth * dirn
                if float(np.linalg.norm(center - cand)) + halfdiag >= M.R:
                    break
                corners = _box_corners(grid)
                if all(M.D.functional(c - cand) > 1e-9 for c in corners):
                    x0 = cand
                    break
            if x0 is None:
                return None
    # psi = a(|x - x0|^2 - K)/2 with a, K making every jet interior
    corners = _box_corners(grid)
    pmax = max(float(np.linalg.norm(c - x0)) for c in corners)
    if math.isinf(M.R):
        a = 1.0
    else:
        # need a > a * pmax / R, i.e. pmax < R; scale for margin
        if pmax >= M.R * (1 - 1e-9):
            return None
        a = 1.0
    K = (pmax**2 + 2.0 * (M.gamma * pmax + 1.0) / a) + 1.0

    def psi(x):
        return 0.5 * a * (float(np.sum((x - x0) ** 2)) - K)

    out = GridFunction.from_callable(grid, psi)
    # validate strictness of the analytic jets on the grid
    oracle = cone_M(M, n)
    for node in out.grid.interior_nodes(1):
        x = grid.node_point(node)
        J = Jet2(psi(x), a * (x - x0), a * np.eye(n))
        if not oracle.classify(J, DEFAULT_TOL).is_interior:
            return None
    return out


def _box_corners(grid: Grid) -> list:
    import itertools as it

    return [
        np.array(c)
        for c in it.product(*[(grid.lo[i], grid.hi[i]) for i in range(grid.d)])
    ]


def zmp_experiment(
    M: MonotonicityCone,
    z: GridFunction,
    arity: Arity = Arity.FULL,
    tol: float = DEFAULT_TOL,
    slack: float = 1e-9,
) -> Verdict:
    """Zero maximum principle for dual-cone subharmonics on the grid box.

    Validates z as a discrete dual-M subharmonic with z <= 0 on the
    boundary layer, requires a strict approximator to exist for M on the
    box (otherwise returns a not-asserted verdict documenting the
    absence), then checks z <= 0 at every interior node. Reduced arities
    (pure second order, gradient free) always admit a quadratic
    approximator; the R-finite obstruction only arises for full jets.
    """
    from .catalog import reduced_cone

    grid = z.grid
    cone = reduced_cone(M, grid.d, arity)
    rep = check_subharmonic(z, dual_oracle(cone), tol)
    if not rep.all_pass:
        raise HypothesisViolation(
            f"z fails the dual-cone subharmonic check at {rep.total - rep.members} nodes"
        )
    mask = ~grid.interior_mask()
    bmax = float(np.max(z.values[mask]))
    if bmax > slack:
        raise HypothesisViolation(f"z > 0 on the boundary layer (max {bmax:.3e})")
    if arity is Arity.FULL:
        psi = strict_approximator(M, grid)
        if psi is None:
            return Verdict(
                ok=True,
                note="no strict approximator on this box (R-finite obstruction); "
                "zero maximum principle not asserted",
            )
    worst = float(np.max(z.values))
    if worst > slack:
        node = np.unravel_index(int(np.argmax(z.values)), z.values.shape)
        return Verdict(ok=False, witness_node=tuple(node), margin=worst)
    return Verdict(ok=True, margin=worst, note="strict approximator exists")


# ---------------------------------------------------------------------------
# Uniform translation probe
# ---------------------------------------------------------------------------


@dataclass
class TranslationReport:
    delta: float
    theta: float
    tested: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def uniform_translation_probe(
    u: GridFunction,
    theta_map: VariableFiberMap,
    psi: Optional[GridFunction],
    theta: float,
    max_shift: int = 3,
    tol: float = DEFAULT_TOL,
) -> TranslationReport:
    """Empirical radius delta of the uniform translation property.

    Grid translates tau_y u (|y| < delta) perturbed by theta * psi must
    stay subharmonic for the variable fiber on the shrunken grid. psi,
    when given, must be strictly M-subharmonic in the discrete sense.
    """
    grid = u.grid
    if psi is not None:
        rep = check_subharmonic(psi, cone_M(theta_map.monotonicity, grid.d), tol)
        if not rep.all_pass or rep.worst_margin <= 0:
            raise HypothesisViolation(
                f"psi is not strictly subharmonic for the declared cone "
                f"(worst margin {rep.worst_margin:.3e})"
            )
    offsets = []
    rng = range(-max_shift, max_shift + 1)
    import itertools as it

    for off in it.product(rng, repeat=grid.d):
        if any(off):
            offsets.append(off)
    offsets.sort(key=lambda o: sum(c * c for c in o))
    delta = 0.0
    tested = 0
    failures = []
    for off in offsets:
        shifted = np.roll(u.values, shift=off, axis=tuple(range(grid.d)))
        vals = shifted if psi is None or theta == 0 else shifted + theta * psi.values
        width = grid.layer_width + max(abs(c) for c in off)
        trial = GridFunction(grid, vals.copy(), boundary_data=vals.copy())
        rep = _check_on_width(trial, theta_map, width, tol)
        tested += 1
        ynorm = grid.h * math.sqrt(sum(c * c for c in off))
        if rep.all_pass:
            delta = max(delta, ynorm)
        else:
            failures.append((off, rep.worst_margin))
            break
    return TranslationReport(delta=delta, theta=theta, tested=tested, failures=failures)


def _check_on_width(u: GridFunction, fiber: VariableFiberMap, width: int,
                    tol: float) -> NodeReport:
    grid = u.grid
    total = members = 0
    worst = math.inf
    failures = []
    for node in grid.interior_nodes(width):
        J = u.discrete_jet(node)
        oracle = fiber.fiber_at(grid.node_point(node))
        r = oracle.classify(J, tol)
        total += 1
        m = r.margin if r.is_member else -r.margin
        worst = min(worst, m)
        if r.is_member:
            members += 1
        elif len(failures) < 8:
            failures.append((node, m))
    return NodeReport(total, members, worst, failures)
