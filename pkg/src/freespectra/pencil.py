"""Monic linear pencils and their free spectrahedra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ShapeMismatch, UnboundedDirection, VariableMismatch
from .nc_core import as_tuple
from .util import complex_gaussian, herm, make_rng, psd_sqrt

BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class Pencil:
    """L_A(x) = I + sum A_j x_j + sum A_j* x_j*."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ShapeMismatch(f"pencil coefficients must be a (g, d, d) array, got {A.shape}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def g(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def lam(self, X) -> np.ndarray:
        """Lambda_A(X) = sum A_j (x) X_j."""
        X = as_tuple(X)
        if X.shape[0] != self.g:
            raise VariableMismatch(f"pencil has g={self.g}, tuple has {X.shape[0]} matrices")
        return sum(np.kron(self.A[j], X[j]) for j in range(self.g))

    def __call__(self, X) -> np.ndarray:
        return eval_pencil(self, X)


def eval_pencil(P: Pencil, X) -> np.ndarray:
    X = as_tuple(X)
    n = X.shape[1]
    lam = P.lam(X)
    L = np.eye(P.d * n, dtype=complex) + lam + lam.conj().T
    H = herm(L)
    assert np.abs(H - L).max() < 1e-12
    return H


@dataclass(frozen=True)
class Membership:
    status: str
    min_eig: float


def membership(P: Pencil, X, tol: float = BOUNDARY_TOL) -> Membership:
    lmin = float(np.linalg.eigvalsh(eval_pencil(P, X))[0])
    if lmin > tol:
        status = "interior"
    elif lmin >= -tol:
        status = "boundary"
    else:
        status = "outside"
    return Membership(status, lmin)


def boundary_point(P: Pencil, direction, tol: float = BOUNDARY_TOL, t_max: float = 1e8,
                   rel_width: float = 1e-12):
    """Find t > 0 with L_A(t D) singular and PSD; return (t, t D).

    Brackets by doubling, then bisects to relative width rel_width.
    """
    D = as_tuple(direction, P.g)
    if not np.any(D):
        raise InputError("direction must be nonzero")

    def lmin(t):
        return np.linalg.eigvalsh(eval_pencil(P, t * D))[0]

    lo, hi = 0.0, 1.0
    while lmin(hi) >= 0:
        lo, hi = hi, 2 * hi
        if hi > t_max:
            raise UnboundedDirection(f"ray stays in the spectrahedron up to t={t_max:g}", D)
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if lmin(mid) >= 0:
            lo = mid
        else:
            hi = mid
    # lo is the last point known to be inside
    t = lo
    if abs(lmin(t)) > tol:
        raise RuntimeError(f"bisection ended with lambda_min={lmin(t):.3e} above tol")
    return t, t * D


def random_directions(rng, g: int, n: int, count: int) -> np.ndarray:
    Z = complex_gaussian(rng, (count, g, n, n))
    norms = np.sqrt((np.abs(Z) ** 2).sum(axis=(1, 2, 3)))
    return Z / norms[:, None, None, None]


def sample_boundary(P: Pencil, n: int, count: int, rng) -> list[np.ndarray]:
    """Boundary points of D_A(n) along random directions (unbounded rays skipped)."""
    pts = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > 50 * count:
            raise UnboundedDirection("could not find enough bounded rays")
        D = random_directions(rng, P.g, n, 1)[0]
        try:
            pts.append(boundary_point(P, D)[1])
        except UnboundedDirection:
            continue
    return pts


def sample_interior(P: Pencil, n: int, count: int, rng, shrink: float = 0.9) -> list[np.ndarray]:
    out = []
    for _ in range(count):
        D = random_directions(rng, P.g, n, 1)[0]
        try:
            t, _ = boundary_point(P, D)
        except UnboundedDirection:
            t = 1.0
        out.append(shrink * rng.uniform() * t * D)
    return out


@dataclass
class BoundednessReport:
    verdict: str
    samples: int
    passed: int
    counterexample: np.ndarray | None = None
    min_margin: float = field(default=np.inf)

    def to_dict(self):
        d = {"verdict": self.verdict, "samples": self.samples, "passed": self.passed,
             "min_margin": self.min_margin}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        return d


def boundedness_evidence(P: Pencil, samples: int = 1000, seed=0, tol: float = 1e-12) -> BoundednessReport:
    """Check that Lambda_A(a) + Lambda_A(a)* is indefinite for random unit a in C^g.

    A semidefinite sample proves D_A(1) unbounded along a ray. Passing every
    sample is only evidence of boundedness.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = make_rng(seed)
    passed = 0
    worst = np.inf
    for _ in range(samples):
        a = complex_gaussian(rng, P.g)
        a /= np.linalg.norm(a)
        lam = np.tensordot(a, P.A, axes=1)
        ev = np.linalg.eigvalsh(herm(lam + lam.conj().T))
        margin = min(-ev[0], ev[-1])
        worst = min(worst, margin)
        if margin > tol:
            passed += 1
        else:
            return BoundednessReport("unbounded", samples, passed, a, float(worst))
    return BoundednessReport("bounded-evidence", samples, passed, None, float(worst))


@dataclass(frozen=True)
class AffineMap:
    """l(x) = (x - b) M^{-1} acting on row tuples; inverse y -> y M + b."""

    b: np.ndarray
    M: np.ndarray

    @property
    def Minv(self):
        return np.linalg.inv(self.M)

    def __call__(self, X) -> np.ndarray:
        X = as_tuple(X)
        n = X.shape[1]
        Y = X - self.b[:, None, None] * np.eye(n)
        return np.einsum("ik,iab->kab", self.Minv, Y)

    def inverse(self) -> "AffineMap":
        # y -> y M + b  equals  (y - c) K^{-1} with K = M^{-1}, c = -b M^{-1}
        return AffineMap(-self.b @ self.Minv, self.Minv)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self o other."""
        # other(x) = (x - b2) K2, self(y) = (y - b1) K1 with K = M^{-1}
        K = other.Minv @ self.Minv
        c = other.b + self.b @ other.M
        return AffineMap(c, np.linalg.inv(K))


def affine_normalize(B: Pencil, b, M, check_samples: int = 5, seed=0):
    """Return (F, l, l_inv) with L_F(l(X)) = (H^{-1} x I) L_B(X) (H^{-1} x I).

    H is the positive square root of L_B(b), and F_i = H^{-1}(MB)_i H^{-1}.
    """
    b = np.asarray(b, dtype=complex).reshape(-1)
    M = np.asarray(M, dtype=complex)
    if b.shape[0] != B.g or M.shape != (B.g, B.g):
        raise ShapeMismatch("b must be length g and M must be g x g")
    if abs(np.linalg.det(M)) < 1e-14:
        raise InputError("M must be invertible")
    LB = eval_pencil(B, b)
    if np.linalg.eigvalsh(LB)[0] <= 0:
        raise InputError("L_B(b) is not positive definite")
    H = psd_sqrt(LB)
    Hi = np.linalg.inv(H)
    MB = np.einsum("ij,jab->iab", M, B.A)
    F = Pencil(Hi @ MB @ Hi)
    ell = AffineMap(b, M)
    # sanity check of the conjugation identity
    rng = make_rng(seed)
    for _ in range(check_samples):
        X = random_directions(rng, B.g, 2, 1)[0]
        lhs = eval_pencil(F, ell(X))
        K = np.kron(Hi, np.eye(2))
        rhs = K @ eval_pencil(B, X) @ K
        if np.abs(lhs - rhs).max() > 1e-10 * max(1.0, np.abs(rhs).max()):
            raise AssertionError("affine normalization identity failed")
    return F, ell, ell.inverse()
