"""Core 2-jet data structures and symmetric-matrix spectral tools.

A 2-jet is a triple (r, p, A): function value, gradient, Hessian. The
jet space in dimension n is R x R^n x S(n), with S(n) the symmetric
n x n matrices. Everything downstream (cone membership, duality, the
solver's discrete jets) is built on the three operations here:
spectral decomposition, the jet norm, and traces on subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonOrthonormalBasis

SPECTRAL_TOL = 1e-12
GRAM_PRE_TOL = 1e-10
GRAM_ERR_TOL = 1e-8

# Desk-scale cap: brute-force oracles (char-poly bisection, subset sums,
# 2^n vertex sets) must stay tractable.
MAX_DIM = 8


def _as_symmetric(entries, tol=1e-12):
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.T)) if a.size else 0.0
    scale = 1.0 + (np.max(np.abs(a)) if a.size else 0.0)
    if dev > tol * scale:
        raise ValueError(f"matrix not symmetric: max asymmetry {dev:.3e}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class SymMat:
    """Symmetric n x n matrix; storage enforces exact symmetry."""

    entries: np.ndarray

    def __init__(self, entries):
        a = _as_symmetric(entries)
        if a.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {a.shape[0]} exceeds supported cap {MAX_DIM}")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other):
        return SymMat(self.entries + _mat(other))

    def __sub__(self, other):
        return SymMat(self.entries - _mat(other))

    def __neg__(self):
        return SymMat(-self.entries)

    def __mul__(self, t: float):
        return SymMat(self.entries * t)

    __rmul__ = __mul__

    @staticmethod
    def identity(n: int) -> "SymMat":
        return SymMat(np.eye(n))

    @staticmethod
    def zero(n: int) -> "SymMat":
        return SymMat(np.zeros((n, n)))

    @staticmethod
    def diag(*vals) -> "SymMat":
        if len(vals) == 1 and np.ndim(vals[0]) == 1:
            vals = tuple(vals[0])
        return SymMat(np.diag(np.asarray(vals, dtype=float)))


def _mat(x) -> np.ndarray:
    return x.entries if isinstance(x, SymMat) else np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Jet2:
    """Point of the 2-jet space: value r, gradient p, Hessian A."""

    r: float
    p: np.ndarray
    A: SymMat

    def __init__(self, r, p, A):
        if not isinstance(A, SymMat):
            A = SymMat(A)
        p = np.asarray(p, dtype=float).reshape(-1)
        if len(p) != A.n:
            raise ValueError(f"gradient length {len(p)} != matrix dimension {A.n}")
        p.flags.writeable = False
        object.__setattr__(self, "r", float(r))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.n

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(self.r + other.r, self.p + other.p, self.A + other.A)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.r, -self.p, -self.A)

    def __mul__(self, t: float) -> "Jet2":
        return Jet2(t * self.r, t * self.p, t * self.A)

    __rmul__ = __mul__

    @staticmethod
    def from_matrix(A) -> "Jet2":
        A = A if isinstance(A, SymMat) else SymMat(A)
        return Jet2(0.0, np.zeros(A.n), A)

    @staticmethod
    def zero(n: int) -> "Jet2":
        return Jet2(0.0, np.zeros(n), SymMat.zero(n))

    def to_json_dict(self) -> dict:
        return {"r": self.r, "p": self.p.tolist(), "A": self.A.entries.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "Jet2":
        # Full symmetric matrix required, both triangles present and equal.
        return Jet2(d["r"], d["p"], SymMat(d["A"]))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted ascending with an orthonormal eigenframe."""

    lambdas: np.ndarray
    frame: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.lambdas)


def spectrum(A: SymMat) -> Spectrum:
    """Eigendecomposition with deterministic ordering and sign convention.

    Eigenvalues ascending; each eigenvector's first component of
    magnitude above 1e-12 * ||v||_inf is made positive, so repeated runs
    produce identical frames.
    """
    a = _mat(A)
    lam, vec = np.linalg.eigh(a)
    for j in range(vec.shape[1]):
        col = vec[:, j]
        thresh = 1e-12 * np.max(np.abs(col))
        for x in col:
            if abs(x) > thresh:
                if x < 0:
                    vec[:, j] = -col
                break
    lam.flags.writeable = False
    vec.flags.writeable = False
    return Spectrum(lambdas=lam, frame=vec)


def eigenvalues(A) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (no frame)."""
    return np.linalg.eigvalsh(_mat(A))


def jet_norm(J: Jet2) -> float:
    """max(|r|, |p|_2, max_k |lambda_k(A)|); zero iff J is the zero jet."""
    lam = eigenvalues(J.A)
    lam_max = float(np.max(np.abs(lam))) if lam.size else 0.0
    return max(abs(J.r), float(np.linalg.norm(J.p)), lam_max)


def matrix_sup_norm(A) -> float:
    """max_k |lambda_k(A)|, the Hessian part of the jet norm."""
    lam = eigenvalues(A)
    return float(np.max(np.abs(lam))) if lam.size else 0.0


def trace_on_subspace(A: SymMat, W, tol: float = GRAM_ERR_TOL) -> float:
    """Trace of A restricted to the span of the orthonormal columns W.

    Equals <A, P_W> for the orthogonal projection P_W. Raises
    NonOrthonormalBasis when the Gram matrix deviates from the identity
    by more than tol.
    """
    w = np.asarray(W, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    gram_dev = np.max(np.abs(w.T @ w - np.eye(w.shape[1])))
    if gram_dev > tol:
        raise NonOrthonormalBasis(f"Gram deviation {gram_dev:.3e} > {tol:.1e}")
    a = _mat(A)
    return float(np.einsum("ij,ik,jk->", a, w, w))


def projector(e: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the line through e (e need not be unit)."""
    e = np.asarray(e, dtype=float)
    return np.outer(e, e) / float(e @ e)


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> SymMat:
    g = rng.standard_normal((n, n)) * scale
    return SymMat(0.5 * (g + g.T))


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_psd(rng: np.random.Generator, n: int, scale: float = 1.0) -> SymMat:
    g = rng.standard_normal((n, n)) * scale
    return SymMat(g @ g.T / n)


def random_jet(rng: np.random.Generator, n: int, scale: float = 1.0) -> Jet2:
    return Jet2(
        rng.standard_normal() * scale,
        rng.standard_normal(n) * scale,
        random_symmetric(rng, n, scale),
    )


def heavy_tail_symmetric(rng: np.random.Generator, n: int, angle_margin: float = 0.05) -> SymMat:
    """Random symmetric matrix with tan-distributed eigenvalues.

    Eigenvalues tan(u) with u uniform on (-pi/2 + margin, pi/2 - margin)
    give the large dynamic range needed to probe fibers whose level sets
    run off to infinity (arctan-type fibers especially).
    """
    u = rng.uniform(-np.pi / 2 + angle_margin, np.pi / 2 - angle_margin, size=n)
    q = random_orthogonal(rng, n)
    return SymMat(q @ np.diag(np.tan(u)) @ q.T)
