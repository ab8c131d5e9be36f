"""Catalog of subequation fiber oracles.

Each oracle classifies a 2-jet against a closed constraint set F that is
positivity-monotone in the Hessian slot (and negativity-monotone in the
value slot when that slot is live). Classification goes through a single
scalar defining functional g with

    Interior  iff g(J) >  tol,
    Exterior  iff g(J) < -tol,
    Boundary  otherwise,

so every oracle documents its numerical slack through g's conditioning.
Membership means g >= 0 (the set is the closure of its interior).

Constant-coefficient cones live in FiberOracle; variable-coefficient
examples are VariableFiberMap (a fiber oracle per point of a box),
carrying their declared monotonicity cone and reference jet explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import (
    BadAlpha,
    BadParameters,
    DirectionalityViolation,
    IndexOutOfRange,
    NegativeSource,
    OddDimension,
    PhaseOutOfRange,
    ReferenceJetNotInterior,
)
from .jets import Jet2, SymMat, eigenvalues, projector

DEFAULT_TOL = 1e-8


class RegionKind(Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"


@dataclass(frozen=True)
class Region:
    """Classification with a nonnegative margin (0 on the boundary).

    The margin is the defining functional's distance estimate in the jet
    norm, exact up to that functional's conditioning.
    """

    kind: RegionKind
    margin: float

    @property
    def is_member(self) -> bool:
        return self.kind is not RegionKind.EXTERIOR

    @property
    def is_interior(self) -> bool:
        return self.kind is RegionKind.INTERIOR


def classify_value(g: float, tol: float = DEFAULT_TOL) -> Region:
    if g > tol:
        return Region(RegionKind.INTERIOR, g)
    if g < -tol:
        return Region(RegionKind.EXTERIOR, -g)
    return Region(RegionKind.BOUNDARY, 0.0)


class Arity(Enum):
    PURE_SECOND_ORDER = "PureSecondOrder"  # A only
    GRADIENT_FREE = "GradientFree"         # (r, A)
    FULL = "Full"                          # (r, p, A)


@dataclass(frozen=True)
class FiberOracle:
    """Membership classifier for a constraint fiber in jet space.

    `functional` is the scalar defining functional g; classify() and
    margins derive from it. Oracles are immutable and classification is
    pure, so instances are safe to share between threads.
    """

    label: str
    n: int
    arity: Arity
    functional: Callable[[Jet2], float]
    key: Optional[str] = None

    def value(self, jet) -> float:
        return float(self.functional(_as_jet(jet, self.n)))

    def classify(self, jet, tol: float = DEFAULT_TOL) -> Region:
        return classify_value(self.value(jet), tol)

    def contains(self, jet, tol: float = DEFAULT_TOL) -> bool:
        return self.classify(jet, tol).is_member


def _as_jet(j, n: int) -> Jet2:
    if isinstance(j, Jet2):
        return j
    if isinstance(j, SymMat):
        return Jet2.from_matrix(j)
    a = np.asarray(j, dtype=float)
    if a.ndim == 2:
        return Jet2.from_matrix(SymMat(a))
    raise TypeError(f"cannot interpret {type(j)} as a jet in dimension {n}")


# ---------------------------------------------------------------------------
# Constant-coefficient cones
# ---------------------------------------------------------------------------

def cone_P(n: int) -> FiberOracle:
    """Convexity cone {A : lambda_min(A) >= 0}."""
    return FiberOracle(
        label="P (convexity): lambda_min(A) >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=lambda J: float(eigenvalues(J.A)[0]),
        key="P",
    )


def cone_P_dual(n: int) -> FiberOracle:
    """Subaffine cone {A : lambda_max(A) >= 0}, the dual of P."""
    return FiberOracle(
        label="P~ (subaffine): lambda_max(A) >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=lambda J: float(eigenvalues(J.A)[-1]),
        key="P~",
    )


def branch(n: int, k: int) -> FiberOracle:
    """k-th eigenvalue branch {A : lambda_k(A) >= 0}, 1-indexed."""
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"branch index k={k} outside 1..{n}")
    return FiberOracle(
        label=f"branch k={k}: lambda_{k}(A) >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=lambda J: float(eigenvalues(J.A)[k - 1]),
        key=f"branch:k={k}",
    )


def cone_pfold(n: int, p: int) -> FiberOracle:
    """Truncated-trace cone {A : lambda_1 + ... + lambda_p >= 0}.

    The functional is the smallest p-fold eigenvalue sum, which equals
    the minimum over all p-subsets of eigenvalue sums.
    """
    if not 1 <= p <= n:
        raise IndexOutOfRange(f"pfold index p={p} outside 1..{n}")
    return FiberOracle(
        label=f"pfold p={p}: lambda_1(A)+...+lambda_{p}(A) >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=lambda J: float(np.sum(eigenvalues(J.A)[:p])),
        key=f"pfold:p={p}",
    )


def elementary_symmetric(lam: np.ndarray, k: int) -> float:
    """sigma_k of the entries of lam, by the generating-polynomial recurrence."""
    e = np.zeros(k + 1)
    e[0] = 1.0
    for x in lam:
        upper = min(k, len(e) - 1)
        for j in range(upper, 0, -1):
            e[j] += x * e[j - 1]
    return float(e[k])


def cone_sigma_k(n: int, k: int) -> FiberOracle:
    """Closed Garding cone of the k-Hessian: sigma_j(lambda(A)) >= 0, j <= k."""
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"sigma index k={k} outside 1..{n}")

    def g(J: Jet2) -> float:
        lam = eigenvalues(J.A)
        return min(elementary_symmetric(lam, j) for j in range(1, k + 1))

    return FiberOracle(
        label=f"sigma k={k}: sigma_j(lambda(A)) >= 0 for j=1..{k}",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=g,
        key=f"sigma:k={k}",
    )


def cone_pucci(n: int, lam: float, Lam: float) -> FiberOracle:
    """Pucci cone {A : lam * tr A+ + Lam * tr A- >= 0}, 0 < lam < Lam."""
    if not 0 < lam < Lam:
        raise BadParameters(f"need 0 < lam < Lam, got lam={lam}, Lam={Lam}")

    def g(J: Jet2) -> float:
        ev = eigenvalues(J.A)
        return float(lam * np.sum(ev[ev > 0]) + Lam * np.sum(ev[ev < 0]))

    return FiberOracle(
        label=f"pucci ({lam},{Lam}): {lam}*tr A+ + {Lam}*tr A- >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=g,
        key=f"pucci:{_fmt(lam)},{_fmt(Lam)}",
    )


def cone_quasiconvex(n: int, shift: float) -> FiberOracle:
    """Quasiconvexity cone P_shift = {A : A + shift*I >= 0}, shift >= 0."""
    if shift < 0:
        raise BadParameters(f"quasiconvexity shift must be >= 0, got {shift}")
    return FiberOracle(
        label=f"quasiconvex shift={shift}: lambda_min(A) + {shift} >= 0",
        n=n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=lambda J: float(eigenvalues(J.A)[0]) + shift,
        key=f"quasiconvex:{_fmt(shift)}",
    )


def complex_structure(two_n: int) -> np.ndarray:
    """Standard complex structure on R^{2n}: (x, y) -> (-y, x)."""
    n = two_n // 2
    J = np.zeros((two_n, two_n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def skew_hermitian_mu(A: SymMat) -> np.ndarray:
    """Nonnegative eigenvalues mu_1..mu_n of the anti-commuting part of A.

    A splits into a part commuting with the complex structure and a part
    anti-commuting with it; the latter has spectrum {+-mu_j}.
    """
    Jc = complex_structure(A.n)
    sk = 0.5 * (A.entries + Jc @ A.entries @ Jc)
    ev = np.sort(np.linalg.eigvalsh(sk))
    # spectrum is symmetric {+-mu}; the top n entries are the mu_j >= 0
    return ev[A.n // 2 :]


def cone_lagrangian(two_n: int) -> FiberOracle:
    """Lagrangian plurisubharmonicity cone on S(2n).

    Membership: tr(A)/2 - mu_1 - ... - mu_n >= 0, where +-mu_j are the
    eigenvalues of the part of A anti-commuting with the standard
    complex structure. Equals the polar cone of the Lagrangian n-planes.
    """
    if two_n % 2 != 0:
        raise OddDimension(f"Lagrangian cone needs even ambient dimension, got {two_n}")

    def g(J: Jet2) -> float:
        mu = skew_hermitian_mu(J.A)
        return 0.5 * float(np.trace(J.A.entries)) - float(np.sum(mu))

    return FiberOracle(
        label="lagrangian: tr(A)/2 - mu_1 - ... - mu_n >= 0",
        n=two_n,
        arity=Arity.PURE_SECOND_ORDER,
        functional=g,
        key="lagrangian",
    )


def cone_Q(n: int) -> FiberOracle:
    """Gradient-free cone Q = {(r, A) : r <= 0 and A >= 0}."""
    return FiberOracle(
        label="Q: r <= 0 and A >= 0",
        n=n,
        arity=Arity.GRADIENT_FREE,
        functional=lambda J: min(-J.r, float(eigenvalues(J.A)[0])),
        key="Q",
    )


def cone_Q_dual(n: int) -> FiberOracle:
    """Dual of Q: {(r, A) : r <= 0 or lambda_max(A) >= 0}."""
    return FiberOracle(
        label="Q~: r <= 0 or lambda_max(A) >= 0",
        n=n,
        arity=Arity.GRADIENT_FREE,
        functional=lambda J: max(-J.r, float(eigenvalues(J.A)[-1])),
        key="Q~",
    )


# ---------------------------------------------------------------------------
# Monotonicity cones
# ---------------------------------------------------------------------------

class ConeKind(Enum):
    FULL = "full"
    HALFSPACE = "half"
    ORTHANT = "orth"


@dataclass(frozen=True)
class DirectionalCone:
    """Closed convex gradient cone with nonempty interior.

    full: all of R^n; half: {<p, d> >= 0}; orth: {p_j >= 0, j in axes}.
    """

    kind: ConeKind
    direction: Optional[np.ndarray] = None   # halfspace normal, unit
    axes: Optional[tuple] = None             # orthant coordinate set, 0-based

    @staticmethod
    def full() -> "DirectionalCone":
        return DirectionalCone(ConeKind.FULL)

    @staticmethod
    def halfspace(d) -> "DirectionalCone":
        d = np.asarray(d, dtype=float)
        nrm = np.linalg.norm(d)
        if nrm == 0:
            raise BadParameters("halfspace direction must be nonzero")
        d = d / nrm
        d.flags.writeable = False
        return DirectionalCone(ConeKind.HALFSPACE, direction=d)

    @staticmethod
    def orthant(axes) -> "DirectionalCone":
        return DirectionalCone(ConeKind.ORTHANT, axes=tuple(sorted(set(int(a) for a in axes))))

    def functional(self, p: np.ndarray) -> float:
        """Signed slack of p in the cone (>= 0 inside, jet-norm scale)."""
        if self.kind is ConeKind.FULL:
            return math.inf
        if self.kind is ConeKind.HALFSPACE:
            return float(p @ self.direction)
        return float(min(p[a] for a in self.axes))

    def interior_direction(self, n: int) -> np.ndarray:
        """A unit vector strictly inside the cone (origin for full space)."""
        if self.kind is ConeKind.FULL:
            return np.zeros(n)
        if self.kind is ConeKind.HALFSPACE:
            return self.direction.copy()
        v = np.zeros(n)
        for a in self.axes:
            v[a] = 1.0
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class MonotonicityCone:
    """Fundamental-family cone M(gamma, D, R).

    Membership: r <= -gamma*|p|, p in D, A >= (|p|/R) I. R = +inf (a
    structural value, checked with isinf) relaxes the last condition to
    A >= 0.
    """

    gamma: float
    D: DirectionalCone
    R: float

    def __post_init__(self):
        if self.gamma < 0:
            raise BadParameters(f"gamma must be >= 0, got {self.gamma}")
        if not (self.R > 0):
            raise BadParameters(f"R must be positive or inf, got {self.R}")

    def functional(self, J: Jet2) -> float:
        pn = float(np.linalg.norm(J.p))
        g1 = -J.r - self.gamma * pn
        g2 = self.D.functional(J.p)
        lam1 = float(eigenvalues(J.A)[0])
        g3 = lam1 if math.isinf(self.R) else lam1 - pn / self.R
        return min(g1, g2, g3)

    def interior_jet(self, n: int) -> Jet2:
        """Canonical jet strictly inside the cone (margin about 1)."""
        p = self.D.interior_direction(n)
        pn = float(np.linalg.norm(p))
        a = 1.0 + (0.0 if math.isinf(self.R) else pn / self.R)
        r = -(self.gamma * pn + 1.0)
        return Jet2(r, p, SymMat(a * np.eye(n)))

    def key(self) -> str:
        return f"M:gamma={_fmt(self.gamma)},D={_fmt_cone(self.D)},R={_fmt_R(self.R)}"


def cone_M(M: MonotonicityCone, n: int) -> FiberOracle:
    return FiberOracle(
        label=f"M(gamma={M.gamma}, D={_fmt_cone(M.D)}, R={_fmt_R(M.R)}): "
        "r <= -gamma|p|, p in D, A >= (|p|/R) I",
        n=n,
        arity=Arity.FULL,
        functional=M.functional,
        key=M.key(),
    )


def cone_M0(n: int) -> FiberOracle:
    """Minimal monotonicity cone N x {0} x P (empty interior)."""

    def g(J: Jet2) -> float:
        return min(-J.r, -float(np.linalg.norm(J.p)), float(eigenvalues(J.A)[0]))

    return FiberOracle(
        label="M0: r <= 0, p = 0, A >= 0 (empty interior)",
        n=n,
        arity=Arity.FULL,
        functional=g,
        key="M0",
    )


def reduced_cone(M: MonotonicityCone, n: int, arity: Arity) -> FiberOracle:
    """Reduction of M to a silent-variable arity (P-like or Q-like)."""
    if arity is Arity.PURE_SECOND_ORDER:
        return cone_P(n)
    if arity is Arity.GRADIENT_FREE:
        return cone_Q(n)
    return cone_M(M, n)


# ---------------------------------------------------------------------------
# Comparison-failure example (gradient slot is live, value slot silent)
# ---------------------------------------------------------------------------

def failure_matrix(p: np.ndarray, A: SymMat, alpha: float) -> SymMat:
    """A + |p|^((alpha-1)/n) (P_perp + alpha P_p), with the p=0 limit A."""
    n = A.n
    pn = float(np.linalg.norm(p))
    if pn == 0.0:
        return A
    Pp = projector(p)
    Pperp = np.eye(n) - Pp
    w = pn ** ((alpha - 1.0) / n)
    return SymMat(A.entries + w * (Pperp + alpha * Pp))


def fiber_failure_example(n: int, alpha: float, which: str = "min") -> FiberOracle:
    """Operators whose maximal monotonicity cone has empty interior.

    Classifies by the sign of lambda_min (or lambda_max) of the
    gradient-coupled matrix above. The value slot is silent.
    """
    if not alpha > 1:
        raise BadAlpha(f"alpha must be > 1, got {alpha}")
    if which not in ("min", "max"):
        raise BadParameters(f"which must be 'min' or 'max', got {which!r}")
    idx = 0 if which == "min" else -1

    def g(J: Jet2) -> float:
        return float(eigenvalues(failure_matrix(J.p, J.A, alpha))[idx])

    return FiberOracle(
        label=f"failure alpha={alpha} ({which}): lambda_{which} of gradient-coupled matrix >= 0",
        n=n,
        arity=Arity.FULL,
        functional=g,
        key=f"failure:alpha={_fmt(alpha)},which={which}",
    )


# ---------------------------------------------------------------------------
# Variable-coefficient fiber maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the domain of a variable fiber map."""

    lo: np.ndarray
    hi: np.ndarray

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise BadParameters("box needs lo < hi componentwise")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def circumradius(self) -> float:
        return 0.5 * float(np.linalg.norm(self.hi - self.lo))

    def grid(self, per_side: int) -> np.ndarray:
        axes = [np.linspace(self.lo[i], self.hi[i], per_side) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))


@dataclass(frozen=True)
class VariableFiberMap:
    """Fiber oracle per point of a box, with declared monotonicity data.

    The reference jet must lie in the interior of the declared cone; the
    choice is free, so it is pinned explicitly rather than inferred.
    Evaluators must be re-entrant.
    """

    label: str
    domain: Box
    fiber_at: Callable[[np.ndarray], FiberOracle]
    monotonicity: MonotonicityCone
    reference_jet: Jet2
    arity: Arity
    key: Optional[str] = None

    @property
    def n(self) -> int:
        return self.reference_jet.n


def fiber_perturbed_MA(
    domain: Box,
    M_field: Callable[[np.ndarray], SymMat],
    f_field: Callable[[np.ndarray], float],
    n: Optional[int] = None,
) -> VariableFiberMap:
    """Perturbed Monge-Ampere fibers.

    F_x = {A : A + M(x) >= 0 and det(A + M(x)) - f(x) >= 0}, f >= 0.
    """
    n = n if n is not None else M_field(domain.center).n

    def fiber(x: np.ndarray) -> FiberOracle:
        Mx = M_field(x)
        fx = float(f_field(x))
        if fx < 0:
            raise NegativeSource(f"f({x}) = {fx} < 0")

        def g(J: Jet2) -> float:
            B = J.A.entries + Mx.entries
            lam1 = float(np.linalg.eigvalsh(B)[0])
            return min(lam1, float(np.linalg.det(B)) - fx)

        return FiberOracle(
            label=f"perturbed-MA fiber at {np.round(x, 6).tolist()}",
            n=n,
            arity=Arity.PURE_SECOND_ORDER,
            functional=g,
        )

    mono = MonotonicityCone(0.0, DirectionalCone.full(), math.inf)
    return VariableFiberMap(
        label="perturbed Monge-Ampere: A + M(x) >= 0 and det(A + M(x)) >= f(x)",
        domain=domain,
        fiber_at=fiber,
        monotonicity=mono,
        reference_jet=Jet2.from_matrix(SymMat.identity(n)),
        arity=Arity.PURE_SECOND_ORDER,
        key="pma",
    )


def phase_intervals(n: int) -> np.ndarray:
    """Special phase values (n-2k)*pi/2, k = 1..n-1, descending."""
    return np.array([(n - 2 * k) * np.pi / 2 for k in range(1, n)])


def phase_interval_index(n: int, theta: float) -> int:
    """1-based index k of the open interval containing theta.

    Interval k sits between the special values theta_k and theta_{k-1}
    (with theta_0 = n*pi/2 and theta_n = -n*pi/2); k = 1 is the top,
    convex-adjacent interval.
    """
    cuts = phase_intervals(n)
    k = 1
    for c in cuts:
        if theta < c:
            k += 1
    return k


def fiber_special_lagrangian(
    domain: Box,
    theta_field: Callable[[np.ndarray], float],
    n: int,
    special_tol: float = 1e-9,
) -> VariableFiberMap:
    """Gradient-of-graph phase fibers {A : sum_k arctan(lambda_k(A)) >= theta(x)}.

    theta must take values in (-n*pi/2, n*pi/2). The fiber label records
    which phase interval contains theta(x) and flags special values.
    """
    bound = n * np.pi / 2

    def fiber(x: np.ndarray) -> FiberOracle:
        th = float(theta_field(x))
        if not -bound < th < bound:
            raise PhaseOutOfRange(f"theta({x}) = {th} outside (-{bound}, {bound})")
        cuts = phase_intervals(n)
        special = bool(np.any(np.abs(cuts - th) <= special_tol))
        k = phase_interval_index(n, th)
        tag = f"interval I_{k}" + (" [special value]" if special else "")

        def g(J: Jet2) -> float:
            return float(np.sum(np.arctan(eigenvalues(J.A)))) - th

        return FiberOracle(
            label=f"special-Lagrangian fiber at {np.round(x, 6).tolist()}, theta={th:.6g}, {tag}",
            n=n,
            arity=Arity.PURE_SECOND_ORDER,
            functional=g,
        )

    mono = MonotonicityCone(0.0, DirectionalCone.full(), math.inf)
    return VariableFiberMap(
        label="special Lagrangian: sum arctan(lambda_k(A)) >= theta(x)",
        domain=domain,
        fiber_at=fiber,
        monotonicity=mono,
        reference_jet=Jet2.from_matrix(SymMat.identity(n)),
        arity=Arity.PURE_SECOND_ORDER,
        key="slag",
    )


def fiber_affine_sphere(
    domain: Box,
    f_field: Callable[[np.ndarray], float],
    n: int,
) -> VariableFiberMap:
    """Gradient-free fibers {(r, A) in N x P : (-r)^(n+2) det A >= f(x)}."""

    def fiber(x: np.ndarray) -> FiberOracle:
        fx = float(f_field(x))
        if fx < 0:
            raise NegativeSource(f"f({x}) = {fx} < 0")

        def g(J: Jet2) -> float:
            lam1 = float(eigenvalues(J.A)[0])
            head = min(-J.r, lam1)
            det = float(np.linalg.det(J.A.entries))
            return min(head, (max(-J.r, 0.0)) ** (n + 2) * max(det, 0.0) - fx)

        return FiberOracle(
            label=f"affine-sphere fiber at {np.round(x, 6).tolist()}",
            n=n,
            arity=Arity.GRADIENT_FREE,
            functional=g,
        )

    mono = MonotonicityCone(0.0, DirectionalCone.full(), math.inf)
    return VariableFiberMap(
        label="hyperbolic affine sphere: (-r)^(n+2) det A >= f(x) on N x P",
        domain=domain,
        fiber_at=fiber,
        monotonicity=mono,
        reference_jet=Jet2(-1.0, np.zeros(n), SymMat.identity(n)),
        arity=Arity.GRADIENT_FREE,
        key="affine-sphere",
    )


def check_directionality(
    g: Callable[[np.ndarray], float],
    D: DirectionalCone,
    n: int,
    samples: int = 512,
    seed: int = 7,
    tol: float = 1e-10,
):
    """Sampled check of g(p+q) >= g(p) for p, q in D; returns a witness or None."""
    rng = np.random.default_rng(seed)

    def draw() -> np.ndarray:
        v = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
        if D.kind is ConeKind.FULL:
            return v
        if D.kind is ConeKind.HALFSPACE:
            s = v @ D.direction
            return v if s >= 0 else v - 2 * s * D.direction
        w = v.copy()
        for a in D.axes:
            w[a] = abs(w[a])
        return w

    for _ in range(samples):
        p, q = draw(), draw()
        if g(p + q) < g(p) - tol:
            return (p, q)
    return None


def fiber_optimal_transport(
    domain: Box,
    g_density: Callable[[np.ndarray], float],
    D: DirectionalCone,
    f_field: Callable[[np.ndarray], float],
    n: int,
    verify_directionality: bool = True,
    directionality_samples: int = 512,
) -> VariableFiberMap:
    """Gradient-coupled fibers {(r,p,A) : p in D, A >= 0, g(p) det A >= f(x)}.

    The target density g must satisfy the directionality inequality
    g(p+q) >= g(p) on D x D; the sampled check runs at construction and
    raises DirectionalityViolation with a witness pair when it fails.
    """
    if verify_directionality:
        witness = check_directionality(g_density, D, n, samples=directionality_samples)
        if witness is not None:
            p, q = witness
            raise DirectionalityViolation(
                f"g(p+q) < g(p) at p={np.round(p, 6).tolist()}, q={np.round(q, 6).tolist()}",
                witness=witness,
            )

    def fiber(x: np.ndarray) -> FiberOracle:
        fx = float(f_field(x))
        if fx < 0:
            raise NegativeSource(f"f({x}) = {fx} < 0")

        def gg(J: Jet2) -> float:
            lam1 = float(eigenvalues(J.A)[0])
            head = min(D.functional(J.p), lam1)
            det = float(np.linalg.det(J.A.entries))
            gp = float(g_density(J.p))
            return min(head, gp * max(det, 0.0) - fx)

        return FiberOracle(
            label=f"optimal-transport fiber at {np.round(x, 6).tolist()}",
            n=n,
            arity=Arity.FULL,
            functional=gg,
        )

    mono = MonotonicityCone(0.0, D, math.inf)
    return VariableFiberMap(
        label="optimal transport: p in D, A >= 0, g(p) det A >= f(x)",
        domain=domain,
        fiber_at=fiber,
        monotonicity=mono,
        reference_jet=Jet2(
            -1.0,
            D.interior_direction(n) if D.kind is not ConeKind.FULL else np.zeros(n),
            SymMat.identity(n),
        ),
        arity=Arity.FULL,
        key="ot",
    )


# ---------------------------------------------------------------------------
# Fiberegularity probe
# ---------------------------------------------------------------------------

@dataclass
class FiberegReport:
    """Outcome of the sampled uniform-inclusion probe Theta(x) + eta*J0 in Theta(y).

    delta is the largest sampled radius below which every tested pair
    passed (the first violating distance, or the domain diameter when
    none violate); resolution is the smallest tested pair distance. The
    probe passes when delta strictly exceeds the resolution: violations
    confined to larger distances are consistent with fiber continuity,
    a witness at the sample resolution is not.
    """

    eta: float
    delta: float
    resolution: float
    diameter: float
    pairs_checked: int
    jets_checked: int
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.witness is None or self.delta > self.resolution * (1 + 1e-9)


def shift_to_boundary(
    oracle: FiberOracle,
    J: Jet2,
    J0: Jet2,
    margin: float = 1e-6,
    tol: float = 1e-9,
    max_expand: int = 60,
) -> Optional[Jet2]:
    """Move J along J0 onto the membership boundary, then step inside.

    Membership is monotone along J0 when J0 is interior to a cone the
    fiber is monotone for, so bisection applies. Returns None when no
    crossing is bracketed.
    """
    t_in, t_out = None, None
    t = 0.0
    if oracle.contains(J, tol):
        t_in = 0.0
        step = -1.0
        for _ in range(max_expand):
            t += step
            if not oracle.contains(J + t * J0, tol):
                t_out = t
                break
            t_in = t
            step *= 2.0
    else:
        t_out = 0.0
        step = 1.0
        for _ in range(max_expand):
            t += step
            if oracle.contains(J + t * J0, tol):
                t_in = t
                break
            t_out = t
            step *= 2.0
    if t_in is None or t_out is None:
        return None
    for _ in range(60):
        mid = 0.5 * (t_in + t_out)
        if oracle.contains(J + mid * J0, tol):
            t_in = mid
        else:
            t_out = mid
        if abs(t_in - t_out) < tol:
            break
    return J + (t_in + margin) * J0


def _fiber_jet_samples(
    theta: VariableFiberMap,
    x: np.ndarray,
    J0: Jet2,
    rng: np.random.Generator,
    count: int,
) -> list:
    """Jets in Theta(x) near its boundary, with heavy-tailed Hessians."""
    from .jets import heavy_tail_symmetric, random_jet

    oracle = theta.fiber_at(x)
    out = []
    n = theta.n
    for i in range(count):
        if i % 2 == 0:
            base = Jet2(
                rng.standard_normal(),
                rng.standard_normal(n),
                heavy_tail_symmetric(rng, n),
            )
        else:
            base = random_jet(rng, n, scale=1.5)
        J = shift_to_boundary(oracle, base, J0)
        if J is not None and oracle.contains(J):
            out.append(J)
    return out


def check_fiberegularity(
    theta: VariableFiberMap,
    M: MonotonicityCone,
    omega: Optional[Box] = None,
    eta: float = 0.1,
    grid_per_side: int = 16,
    anchors: int = 120,
    jets_per_point: int = 12,
    seed: int = 11,
    tol: float = DEFAULT_TOL,
) -> FiberegReport:
    """Sampled probe of the uniform fiber-continuity inclusion.

    Tests Theta(x) + eta*J0 subset-of Theta(y) with jets drawn near the
    boundary of Theta(x). Anchor points pair with neighbors on a ladder
    of grid distances (1, 2, 4, ... steps plus the diagonals), so the
    smallest violating distance is located relative to the sample
    resolution; see FiberegReport for the pass semantics.
    """
    omega = omega or theta.domain
    J0 = theta.reference_jet
    # interiority is judged in the reduced jet space matching the arity
    cone = reduced_cone(M, theta.n, theta.arity)
    if not cone.classify(J0, tol).is_interior:
        raise ReferenceJetNotInterior(
            "reference jet is not interior to the declared monotonicity cone"
        )
    rng = np.random.default_rng(seed)
    d = omega.dim
    axes = [np.linspace(omega.lo[i], omega.hi[i], grid_per_side) for i in range(d)]
    idx_all = list(np.ndindex(*(grid_per_side,) * d))
    if len(idx_all) > anchors:
        sel = rng.choice(len(idx_all), size=anchors, replace=False)
        anchor_idx = [idx_all[s] for s in sel]
    else:
        anchor_idx = idx_all

    def point(ix):
        return np.array([axes[k][ix[k]] for k in range(d)])

    # ladder of integer offsets: unit axis steps, unit diagonal, then
    # doubling axis steps out to the grid size
    offsets = []
    for k in range(d):
        off = [0] * d
        off[k] = 1
        offsets.append(tuple(off))
    offsets.append((1,) * d)
    step = 2
    while step < grid_per_side:
        off = [0] * d
        off[0] = step
        offsets.append(tuple(off))
        offsets.append(tuple([step] * d))
        step *= 2

    pairs = []
    for ix in anchor_idx:
        for off in offsets:
            jy = tuple(ix[k] + off[k] for k in range(d))
            if all(0 <= jy[k] < grid_per_side for k in range(d)):
                pairs.append((ix, jy))
    pairs.sort(key=lambda p: np.linalg.norm(point(p[0]) - point(p[1])))

    jet_cache: dict = {}

    def jets_at(ix):
        if ix not in jet_cache:
            jet_cache[ix] = _fiber_jet_samples(theta, point(ix), J0, rng, jets_per_point)
        return jet_cache[ix]

    shifted = eta * J0
    delta = omega.diameter
    resolution = math.inf
    witness = None
    jets_checked = 0
    for ix, jy in pairs:
        x, y = point(ix), point(jy)
        dist = float(np.linalg.norm(x - y))
        if witness is not None and dist >= delta:
            break
        resolution = min(resolution, dist)
        oy = theta.fiber_at(y)
        bad = None
        for J in jets_at(ix):
            jets_checked += 1
            if not oy.contains(J + shifted, tol):
                bad = J
                break
        if bad is not None and dist < delta:
            delta = dist
            witness = {
                "x": x.tolist(),
                "y": y.tolist(),
                "distance": dist,
                "jet": bad.to_json_dict(),
            }
    return FiberegReport(
        eta=eta,
        delta=delta,
        resolution=resolution if math.isfinite(resolution) else omega.diameter,
        diameter=omega.diameter,
        pairs_checked=len(pairs),
        jets_checked=jets_checked,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# Sampled structural checks (positivity / negativity / cone axioms)
# ---------------------------------------------------------------------------

def check_positivity(oracle: FiberOracle, samples: int = 200, seed: int = 3,
                     tol: float = DEFAULT_TOL):
    """Sampled (P): membership survives A -> A + P for P >= 0."""
    from .jets import random_jet, random_psd

    rng = np.random.default_rng(seed)
    for _ in range(samples):
        J = random_jet(rng, oracle.n, scale=1.5)
        if not oracle.contains(J, tol):
            continue
        P = random_psd(rng, oracle.n)
        J2 = Jet2(J.r, J.p, J.A + P)
        if not oracle.contains(J2, 10 * tol):
            return (J, P)
    return None


def check_negativity(oracle: FiberOracle, samples: int = 200, seed: int = 4,
                     tol: float = DEFAULT_TOL):
    """Sampled (N): membership survives r -> r + s for s <= 0."""
    from .jets import random_jet

    if oracle.arity is Arity.PURE_SECOND_ORDER:
        return None
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        J = random_jet(rng, oracle.n, scale=1.5)
        if not oracle.contains(J, tol):
            continue
        s = -abs(rng.standard_normal())
        J2 = Jet2(J.r + s, J.p, J.A)
        if not oracle.contains(J2, 10 * tol):
            return (J, s)
    return None


# ---------------------------------------------------------------------------
# Key grammar and registry
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if x == int(x):
        return str(int(x))
    return repr(x)


def _fmt_cone(D: DirectionalCone) -> str:
    if D.kind is ConeKind.FULL:
        return "full"
    if D.kind is ConeKind.HALFSPACE:
        d = D.direction
        axes = np.nonzero(np.abs(d) > 1e-12)[0]
        if len(axes) == 1 and abs(d[axes[0]] - 1.0) < 1e-12:
            return f"half:e{axes[0] + 1}"
        return "half:" + ",".join(_fmt(v) for v in d)
    return "orth:" + ",".join(str(a + 1) for a in D.axes)


def _fmt_R(R: float) -> str:
    return "inf" if math.isinf(R) else _fmt(R)


def parse_directional_cone(text: str, n: int) -> DirectionalCone:
    from .errors import ParseError

    if text == "full":
        return DirectionalCone.full()
    if text.startswith("half:"):
        body = text[len("half:"):]
        if body.startswith("e"):
            i = int(body[1:]) - 1
            d = np.zeros(n)
            d[i] = 1.0
            return DirectionalCone.halfspace(d)
        return DirectionalCone.halfspace([float(v) for v in body.split(",")])
    if text.startswith("orth:"):
        axes = [int(a) - 1 for a in text[len("orth:"):].split(",")]
        return DirectionalCone.orthant(axes)
    raise ParseError(f"bad directional cone spec {text!r}")


def parse_key(key: str) -> tuple[str, dict, list]:
    """Split 'name:params' into (name, kv-params, positional params).

    Grammar (see README): key = name [":" item {"," item}] where item is
    either ident "=" value or a bare value. Values may themselves carry
    colons (directional cones).
    """
    from .errors import ParseError

    key = key.strip()
    if not key:
        raise ParseError("empty key")
    if ":" in key:
        name, rest = key.split(":", 1)
    else:
        name, rest = key, ""
    kv: dict = {}
    pos: list = []
    if rest:
        for item in rest.split(","):
            if "=" in item:
                k, v = item.split("=", 1)
                # rejoin cone values split on their own commas: handled below
                kv[k.strip()] = v.strip()
            else:
                if kv:
                    # continuation of the previous kv value (e.g. half:0.5,0.5)
                    last = list(kv)[-1]
                    kv[last] = kv[last] + "," + item.strip()
                else:
                    pos.append(item.strip())
    return name, kv, pos


class CatalogEntry:
    """Factory for a fiber oracle family, addressable by key."""

    def __init__(self, name, build, describe, needs_even=False, variable=False):
        self.name = name
        self.build = build
        self.describe = describe
        self.needs_even = needs_even
        self.variable = variable


def _demo_pma(n: int) -> VariableFiberMap:
    box = Box(-np.ones(n), np.ones(n))

    def M_field(x):
        m = np.eye(n)
        m[0, 0] = 1.0 + float(x @ x)
        return SymMat(m)

    return fiber_perturbed_MA(box, M_field, lambda x: 1.0, n=n)


def _demo_slag(n: int, theta0: float = 0.5, slope: float = 0.25) -> VariableFiberMap:
    box = Box(-np.ones(n), np.ones(n))
    return fiber_special_lagrangian(box, lambda x: theta0 + slope * float(x[0]), n=n)


def _demo_affine_sphere(n: int) -> VariableFiberMap:
    box = Box(-np.ones(n), np.ones(n))
    return fiber_affine_sphere(box, lambda x: 0.5 * (1.0 + float(x @ x)), n=n)


def _demo_ot(n: int) -> VariableFiberMap:
    box = Box(-np.ones(n), np.ones(n))
    k = min(2, n)
    D = DirectionalCone.orthant(range(k))

    def g(p):
        return float(np.prod(p[:k]))

    return fiber_optimal_transport(box, g, D, lambda x: 1.0, n=n)


def _registry() -> dict:
    reg = {}

    def add(name, build, describe, **kw):
        reg[name] = CatalogEntry(name, build, describe, **kw)

    add("P", lambda n, kv, pos: cone_P(n),
        "convexity cone: lambda_min(A) >= 0")
    add("P~", lambda n, kv, pos: cone_P_dual(n),
        "subaffine cone (dual of P): lambda_max(A) >= 0")
    add("Q", lambda n, kv, pos: cone_Q(n),
        "negativity-convexity cone: r <= 0 and A >= 0")
    add("Q~", lambda n, kv, pos: cone_Q_dual(n),
        "dual of Q: r <= 0 or lambda_max(A) >= 0")
    add("branch", lambda n, kv, pos: branch(n, int(kv.get("k", pos[0] if pos else 1))),
        "eigenvalue branch: lambda_k(A) >= 0; params k=1..n")
    add("pfold", lambda n, kv, pos: cone_pfold(n, int(kv.get("p", pos[0] if pos else 1))),
        "truncated trace cone: lambda_1+...+lambda_p >= 0; params p=1..n")
    add("sigma", lambda n, kv, pos: cone_sigma_k(n, int(kv.get("k", pos[0] if pos else 1))),
        "closed k-Hessian cone: sigma_j(lambda(A)) >= 0 for j <= k; params k=1..n")
    add("pucci", lambda n, kv, pos: cone_pucci(
        n, float(kv.get("lam", pos[0] if pos else 1.0)),
        float(kv.get("Lam", pos[1] if len(pos) > 1 else 2.0))),
        "extremal cone: lam*tr A+ + Lam*tr A- >= 0; params lam,Lam with 0 < lam < Lam")
    add("quasiconvex", lambda n, kv, pos: cone_quasiconvex(
        n, float(kv.get("shift", pos[0] if pos else 0.0))),
        "shifted convexity cone: A + shift*I >= 0; params shift >= 0")
    add("lagrangian", lambda n, kv, pos: cone_lagrangian(n),
        "Lagrangian plurisubharmonicity cone on S(2n): tr(A)/2 - sum mu_j >= 0",
        needs_even=True)
    add("M0", lambda n, kv, pos: cone_M0(n),
        "minimal monotonicity cone: r <= 0, p = 0, A >= 0 (empty interior)")
    add("M", lambda n, kv, pos: cone_M(MonotonicityCone(
        float(kv.get("gamma", 0.0)),
        parse_directional_cone(kv.get("D", "full"), n),
        float(kv.get("R", "inf"))), n),
        "fundamental-family cone: r <= -gamma|p|, p in D, A >= (|p|/R)I; "
        "params gamma, D in {full, half:e1, half:v1,..,vn, orth:1,2,..}, R (number or inf)")
    add("failure", lambda n, kv, pos: fiber_failure_example(
        n, float(kv.get("alpha", pos[0] if pos else 2.0)), kv.get("which", "min")),
        "comparison-failure operator: lambda_min/max of A + |p|^((alpha-1)/n)"
        "(P_perp + alpha P_p); params alpha > 1, which in {min, max}")
    add("pma", lambda n, kv, pos: _demo_pma(n),
        "variable fiber, perturbed Monge-Ampere demo: A + M(x) >= 0, det(A+M(x)) >= 1, "
        "M(x) = diag(1+|x|^2, 1, ..)",
        variable=True)
    add("slag", lambda n, kv, pos: _demo_slag(
        n, float(kv.get("theta0", 0.5)), float(kv.get("slope", 0.25))),
        "variable fiber, phase demo: sum arctan lambda_k(A) >= theta0 + slope*x1",
        variable=True)
    add("affine-sphere", lambda n, kv, pos: _demo_affine_sphere(n),
        "variable fiber, affine-sphere demo: (-r)^(n+2) det A >= (1+|x|^2)/2 on N x P",
        variable=True)
    add("ot", lambda n, kv, pos: _demo_ot(n),
        "variable fiber, transport demo: p in first orthant, A >= 0, p1*p2*det A >= 1",
        variable=True)
    return reg


REGISTRY = _registry()


def catalog_names() -> list:
    return sorted(REGISTRY)


def make_oracle(key: str, n: int):
    """Build the oracle (or variable fiber map) addressed by a catalog key."""
    from .errors import UnknownKey

    name, kv, pos = parse_key(key)
    if name not in REGISTRY:
        raise UnknownKey(f"unknown catalog key {key!r}")
    entry = REGISTRY[name]
    if entry.needs_even and n % 2 != 0:
        raise OddDimension(f"{name} needs even ambient dimension, got {n}")
    return entry.build(n, kv, pos)


def describe_key(key: str) -> str:
    from .errors import UnknownKey

    name, _, _ = parse_key(key)
    if name not in REGISTRY:
        raise UnknownKey(f"unknown catalog key {key!r}")
    return REGISTRY[name].describe
