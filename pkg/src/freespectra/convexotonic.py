"""Convexotonic tuples, structure matrices and the birational maps p and q.

A tuple Xi of g x g matrices is convexotonic when

    Xi_k Xi_j = sum_s (Xi_j)[k, s] Xi_s      for all j, k.

The associated map is p(x) = x (I - Lambda_Xi(x))^{-1} in row form, with
inverse q(x) = x (I + Lambda_Xi(x))^{-1}.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DependentBasisError, NotAModuleError, OutsideDomainError, ShapeMismatch
from .nc_core import (FreeSeries, as_tuple, compose, identity_row, row_diff, word_products)
from .util import complex_gaussian, make_rng

CONVEX_TOL = 1e-12
INDEPENDENCE_TOL = 1e-8


def as_xi(Xi) -> np.ndarray:
    Xi = np.asarray(Xi, dtype=complex)
    if Xi.ndim != 3 or Xi.shape[0] != Xi.shape[1] or Xi.shape[1] != Xi.shape[2]:
        raise ShapeMismatch(f"a convexotonic tuple is g matrices of size g x g, got {Xi.shape}")
    return Xi


def convexotonic_residual(Xi) -> float:
    Xi = as_xi(Xi)
    lhs = np.einsum("kab,jbc->kjac", Xi, Xi)
    rhs = np.einsum("jks,sab->kjab", Xi, Xi)
    return float(np.abs(lhs - rhs).max()) if Xi.size else 0.0


@dataclass(frozen=True)
class ConvexReport:
    passed: bool
    max_residual: float


def is_convexotonic(Xi, tol: float = CONVEX_TOL) -> ConvexReport:
    r = convexotonic_residual(Xi)
    return ConvexReport(r <= tol, r)


def module_residual(Xi, depth: int = 4) -> float:
    """max over |a| <= depth of ||Xi_k Xi^a - sum_s (Xi^a)[k, s] Xi_s||."""
    Xi = as_xi(Xi)
    worst = 0.0
    for lvl in word_products(Xi, depth):
        lhs = np.einsum("kab,wbc->wkac", Xi, lvl)
        rhs = np.einsum("wks,sab->wkab", lvl, Xi)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


# ---------------------------------------------------------------------------
# structure matrices


def structure_matrices(E, R, tol: float = INDEPENDENCE_TOL, residual_tol: float | None = None) -> np.ndarray:
    """Solve E_k R_j = sum_s (Xi_j)[k, s] E_s for Xi by least squares."""
    E = np.asarray(E, dtype=complex)
    R = np.asarray(R, dtype=complex)
    g = E.shape[0]
    if R.shape[0] != g:
        raise ShapeMismatch("E and R must have the same number of matrices")
    V = E.reshape(g, -1).T
    sv = np.linalg.svd(V, compute_uv=False)
    if sv[-1] <= tol * sv[0]:
        raise DependentBasisError(f"basis is numerically dependent (sigma_min/sigma_max={sv[-1] / sv[0]:.2e})")
    prods = np.einsum("kab,jbc->jkac", E, R).reshape(g * g, -1).T
    coef, *_ = np.linalg.lstsq(V, prods, rcond=None)
    resid = np.abs(V @ coef - prods).max()
    scale = max(1.0, np.abs(E).max() * np.abs(R).max())
    rtol = tol if residual_tol is None else residual_tol
    if resid > rtol * scale:
        raise NotAModuleError(f"products leave the span (residual {resid:.2e})")
    # coef[s, j*g + k] = (Xi_j)[k, s]
    return coef.T.reshape(g, g, g)


def embed_tuple(Xi) -> np.ndarray:
    """R_j = [[0, e_j^T], [0, Xi_j]] on C + C^g."""
    Xi = as_xi(Xi)
    g = Xi.shape[0]
    R = np.zeros((g, g + 1, g + 1), dtype=complex)
    for j in range(g):
        R[j, 0, j + 1] = 1.0
        R[j, 1:, 1:] = Xi[j]
    return R


# ---------------------------------------------------------------------------
# maps


def map_series(Xi, N: int = 8, check: bool = True):
    """Degree-N truncations (p, q), each a list of g scalar series."""
    Xi = as_xi(Xi)
    if check and not is_convexotonic(Xi, 1e-9).passed:
        warnings.warn("map_series called on a tuple that is not convexotonic", stacklevel=2)
    g = Xi.shape[0]
    P = word_products(Xi, max(N - 1, 0))
    p_lv = [[np.zeros((g**k, 1, 1), dtype=complex) for k in range(N + 1)] for _ in range(g)]
    q_lv = [[np.zeros((g**k, 1, 1), dtype=complex) for k in range(N + 1)] for _ in range(g)]
    for k in range(N):
        sign = (-1) ** k
        for i in range(g):
            # coefficient of x_j a in p^i is (Xi^a)[j, i]
            block = P[k][:, :, i].T.reshape(-1)
            p_lv[i][k + 1][:, 0, 0] = block
            q_lv[i][k + 1][:, 0, 0] = sign * block
    p = [FreeSeries.from_levels(g, lv) for lv in p_lv]
    q = [FreeSeries.from_levels(g, lv) for lv in q_lv]
    return p, q


def map_eval(Xi, X, inverse: bool = False, cond_max: float = 1e12) -> np.ndarray:
    """Evaluate p (or q when inverse) at a matrix tuple via the block resolvent."""
    Xi = as_xi(Xi)
    g = Xi.shape[0]
    X = as_tuple(X, g)
    n = X.shape[1]
    s = 1.0 if inverse else -1.0
    # block (j, i) = delta_ji I + s sum_k (Xi_k)[j, i] X_k
    B = np.eye(g * n, dtype=complex) + s * sum(np.kron(Xi[k], X[k]) for k in range(g))
    c = np.linalg.cond(B)
    if not np.isfinite(c) or c > cond_max:
        raise OutsideDomainError(f"resolvent is singular (condition number {c:.2e})")
    row = np.concatenate(list(X), axis=1)
    out = np.linalg.solve(B.T, row.T).T
    return np.stack([out[:, i * n:(i + 1) * n] for i in range(g)])


@dataclass
class InversePairReport:
    passed: bool
    series_residual: float
    roundtrip_residual: float
    degree: int
    samples: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": self.passed, "series_residual": self.series_residual,
                "roundtrip_residual": self.roundtrip_residual, "degree": self.degree,
                "samples": self.samples}


def random_small_tuple(rng, g: int, n: int, norm: float) -> np.ndarray:
    X = complex_gaussian(rng, (g, n, n))
    scale = norm * rng.uniform(0.0, 1.0, size=g) / np.linalg.norm(X, ord=2, axis=(1, 2))
    return X * scale[:, None, None]


def verify_inverse_pair(Xi, N: int = 8, samples: int = 100, seed=0, level: int = 3,
                        norm: float = 0.1, series_tol: float = 1e-10,
                        roundtrip_tol: float = 1e-8) -> InversePairReport:
    """Check p o q = q o p = id as series through degree N and by evaluation."""
    Xi = as_xi(Xi)
    g = Xi.shape[0]
    p, q = map_series(Xi, N)
    ident = identity_row(g, N)
    pq = [compose(f, q, N) for f in p]
    qp = [compose(f, p, N) for f in q]
    s_res = max(row_diff(pq, ident), row_diff(qp, ident))
    rng = make_rng(seed)
    r_res = 0.0
    for _ in range(samples):
        X = random_small_tuple(rng, g, level, norm)
        Y = map_eval(Xi, X)
        r_res = max(r_res, float(np.abs(map_eval(Xi, Y, inverse=True) - X).max()))
        Z = map_eval(Xi, X, inverse=True)
        r_res = max(r_res, float(np.abs(map_eval(Xi, Z) - X).max()))
    ok = s_res < series_tol and r_res < roundtrip_tol
    return InversePairReport(ok, s_res, r_res, N, samples)


@dataclass(frozen=True)
class NilpotencyReport:
    nilpotent: bool
    order: int | None
    degree_p: int | None


def nilpotency_order(mats, max_order: int, tol: float = 1e-12) -> int | None:
    """Smallest k with every length-k product zero, or None if none <= max_order."""
    mats = np.asarray(mats, dtype=complex)
    scale = max(1.0, float(np.abs(mats).max()))
    lvl = np.eye(mats.shape[1], dtype=complex)[None]
    for k in range(1, max_order + 1):
        lvl = np.einsum("wab,jbc->wjac", lvl, mats).reshape(-1, *mats.shape[1:])
        if np.abs(lvl).max() <= tol * scale**k:
            return k
        # drop zero products to keep the frontier small
        keep = np.abs(lvl).reshape(lvl.shape[0], -1).max(axis=1) > tol * scale**k
        lvl = lvl[keep]
    return None


def nilpotency_and_degree(Xi) -> NilpotencyReport:
    Xi = as_xi(Xi)
    g = Xi.shape[0]
    nu = nilpotency_order(Xi, g + 1)
    if nu is None:
        return NilpotencyReport(False, None, None)
    p, _ = map_series(Xi, g + 2, check=False)
    deg = max(f.degree(1e-12) for f in p)
    if nu > g:
        raise AssertionError(f"nilpotency order {nu} exceeds g={g}")
    if deg != nu:
        raise AssertionError(f"degree of p ({deg}) differs from nilpotency order ({nu})")
    return NilpotencyReport(True, nu, deg)


# ---------------------------------------------------------------------------
# constructions


def direct_sum_xi(Xi1, Xi2) -> np.ndarray:
    Xi1, Xi2 = as_xi(Xi1), as_xi(Xi2)
    g1, g2 = Xi1.shape[0], Xi2.shape[0]
    g = g1 + g2
    out = np.zeros((g, g, g), dtype=complex)
    out[:g1, :g1, :g1] = Xi1
    out[g1:, g1:, g1:] = Xi2
    return out


def change_basis(Xi, M) -> np.ndarray:
    """Xi~_j = M (sum_k M[j, k] Xi_k) M^{-1}."""
    Xi = as_xi(Xi)
    M = np.asarray(M, dtype=complex)
    if M.shape != Xi.shape[1:]:
        raise ShapeMismatch("M must be g x g")
    if np.linalg.matrix_rank(M) < M.shape[0]:
        raise ShapeMismatch("M must be invertible")
    Mi = np.linalg.inv(M)
    comb = np.einsum("jk,kab->jab", M, Xi)
    return M @ comb @ Mi


def linear_substitution(ps, M, N: int | None = None):
    """Series of y -> p(yM) M^{-1}."""
    M = np.asarray(M, dtype=complex)
    g = M.shape[0]
    N = ps[0].max_degree if N is None else N
    ys = identity_row(g, N)
    hs = [sum((M[i, k] * ys[i] for i in range(g)), FreeSeries.zero(g, N=N)) for k in range(g)]
    comp = [compose(f, hs, N) for f in ps]
    Mi = np.linalg.inv(M)
    return [sum((Mi[i, k] * comp[i] for i in range(g)), FreeSeries.zero(g, N=N)) for k in range(g)]


def ball_tuple(v) -> np.ndarray:
    """(Xi_j)[a, b] = conj(v_a) delta_{jb}, so Lambda_Xi(x) = v* x."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    g = v.shape[0]
    Xi = np.zeros((g, g, g), dtype=complex)
    for j in range(g):
        Xi[j, :, j] = v.conj()
    return Xi


def shift_matrix(g: int) -> np.ndarray:
    return np.eye(g, k=1, dtype=complex)


def example_shift_tuple(g: int) -> np.ndarray:
    """Xi_j = S^j with S the g x g upper shift; nilpotent of order g."""
    S = shift_matrix(g)
    return np.array([np.linalg.matrix_power(S, j) for j in range(1, g + 1)])


# ---------------------------------------------------------------------------
# composition probe


@dataclass
class CompositionReport:
    convexotonic: bool
    degree: int | None
    polynomial: bool
    reason: str
    composite: list
    Xi_c: np.ndarray
    mismatch: float

    def to_dict(self):
        return {"convexotonic": self.convexotonic, "degree": self.degree,
                "polynomial": self.polynomial, "reason": self.reason, "mismatch": self.mismatch}


def composition_probe(Xi_a, Xi_b, N: int = 8, tol: float = 1e-10) -> CompositionReport:
    """Compose p_a o p_b and test whether the result is itself convexotonic."""
    Xi_a, Xi_b = as_xi(Xi_a), as_xi(Xi_b)
    g = Xi_a.shape[0]
    pa, _ = map_series(Xi_a, N, check=False)
    pb, _ = map_series(Xi_b, N, check=False)
    comp = [compose(f, pb, N) for f in pa]
    deg = max(f.degree(tol) for f in comp)
    polynomial = deg < N
    # read Xi_c off the quadratic part: coefficient of x_j x_k in comp^i is (Xi_k)[j, i]
    Xi_c = np.zeros((g, g, g), dtype=complex)
    for i in range(g):
        for j in range(g):
            for k in range(g):
                Xi_c[k, j, i] = comp[i].coeff((j + 1, k + 1))[0, 0]
    lin_ok = row_diff([f.truncate(1) for f in comp], identity_row(g, 1)) < tol
    pc, _ = map_series(Xi_c, N, check=False)
    mismatch = row_diff(pc, comp)
    cvx = is_convexotonic(Xi_c, tol).passed
    if polynomial and deg > g:
        reason = f"not convexotonic, degree {deg} > g={g}"
        ok = False
    elif not lin_ok:
        reason = "not convexotonic, linear part is not the identity"
        ok = False
    elif not cvx or mismatch > tol:
        reason = f"not convexotonic, composite differs from the map of its quadratic part (max {mismatch:.2e})"
        ok = False
    else:
        reason = "convexotonic"
        ok = True
    return CompositionReport(ok, deg if polynomial else None, polynomial, reason, comp, Xi_c, float(mismatch))
