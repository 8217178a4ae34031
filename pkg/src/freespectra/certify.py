"""One-term and hereditary Positivstellensatz certificates.

A certificate is built from a pencil tuple A (g matrices, d x d), a unitary C
and an isometry W0.  With R = (C - I) A it consists of the series

    W(x) = (I - Lambda_R(x))^{-1} W0,   W_a = R^a W0,
    G(x) = W0* C Lambda_A(x) W(x),      G_{x_j a} = W0* C A_j R^a W0,

and the identity I + G(X) + G(X)* = W(X)* L_A(X) W(X) holds on nilpotent
tuples (and near 0).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .convexotonic import (is_convexotonic, map_series, module_residual, nilpotency_order,
                           structure_matrices)
from .errors import InputError, InvalidCertificate, NotAModuleError, DependentBasisError, ShapeMismatch
from .nc_core import (FreeSeries, HereditaryPoly, eval_series, fock_shift_tuple, random_nilpotent_tuple,
                      word_products, word_str, words)
from .pencil import Pencil, eval_pencil, sample_interior
from .util import herm, make_rng, max_abs

UNITARY_TOL = 1e-11


@dataclass(frozen=True)
class Certificate:
    A: np.ndarray
    C: np.ndarray
    W0: np.ndarray
    N: int
    R: np.ndarray
    W: FreeSeries
    G: FreeSeries

    @property
    def g(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def e(self):
        return self.W0.shape[1]

    @property
    def B(self) -> np.ndarray:
        return self.W0.conj().T @ self.C @ self.A @ self.W0

    def with_W(self, W: FreeSeries) -> "Certificate":
        return replace(self, W=W)

    def with_G(self, G: FreeSeries) -> "Certificate":
        return replace(self, G=G)

    def to_dict(self):
        return {"A": self.A, "C": self.C, "W0": self.W0, "N": self.N, "B": self.B}


def _check_unitary(C, tol=UNITARY_TOL):
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ShapeMismatch("C must be square")
    err = np.abs(C.conj().T @ C - np.eye(C.shape[0])).max()
    if err > tol:
        raise InputError(f"C is not unitary (||C*C - I|| = {err:.2e})")
    return C


def build_certificate(A, C, W0=None, N: int = 5) -> Certificate:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ShapeMismatch("A must be a (g, d, d) array")
    g, d = A.shape[0], A.shape[1]
    C = _check_unitary(C)
    if C.shape[0] != d:
        raise ShapeMismatch("C must be d x d")
    W0 = np.eye(d, dtype=complex) if W0 is None else np.asarray(W0, dtype=complex)
    if W0.ndim != 2 or W0.shape[0] != d:
        raise ShapeMismatch("W0 must be d x e")
    err = np.abs(W0.conj().T @ W0 - np.eye(W0.shape[1])).max()
    if err > UNITARY_TOL:
        raise InputError(f"W0 is not an isometry (||W0*W0 - I|| = {err:.2e})")
    R = (C - np.eye(d)) @ A
    P = word_products(R, N)
    W_lv = [lv @ W0 for lv in P]
    e = W0.shape[1]
    CA = C @ A
    G_lv = [np.zeros((1, e, e), dtype=complex)]
    for k in range(N):
        # G_{x_j a} sits at index j * g**k + idx(a)
        blk = np.einsum("ab,jbc,wcd,de->jwae", W0.conj().T, CA, P[k], W0)
        G_lv.append(blk.reshape(-1, e, e))
    W = FreeSeries.from_levels(g, W_lv)
    G = FreeSeries.from_levels(g, G_lv)
    return Certificate(A, C, W0, N, R, W, G)


# ---------------------------------------------------------------------------
# coefficient identities


@dataclass
class RelationReport:
    passed: bool
    max_residual: float
    residuals: dict
    worst: dict
    degree: int

    def to_dict(self):
        return {"passed": self.passed, "max_residual": self.max_residual, "residuals": self.residuals,
                "worst": self.worst, "degree": self.degree}


def _stack(series: FreeSeries, ws) -> np.ndarray:
    return np.array([series.coeff(w) for w in ws])


def verify_relations(cert: Certificate, N: int | None = None, tol: float = 1e-10) -> RelationReport:
    """Check the three coefficient relation families on all words of length <= N.

    (1) W_b* A_k* W_{x_j a} + W_{x_k b}* A_j W_a + W_{x_k b}* W_{x_j a} = 0
    (2) W_0* (A_k W_a + W_{x_k a}) = G_{x_k a}
    (3) W_0* W_0 = I
    """
    N = cert.N if N is None else N
    if N > cert.N:
        raise InputError(f"certificate only carries degree {cert.N}")
    g, A, W = cert.g, cert.A, cert.W
    short = list(words(g, N - 1))
    Ws = _stack(W, short)
    Wx = [_stack(W, [(j,) + a for a in short]) for j in range(1, g + 1)]
    W0 = W.coeff(())
    scale = max(1.0, W.max_coeff_norm(), max_abs(A))
    res1, worst1 = 0.0, {}
    for k in range(g):
        for j in range(g):
            t1 = np.einsum("bie,aif->baef", Ws.conj(), A[k].conj().T @ Wx[j])
            t2 = np.einsum("bie,aif->baef", Wx[k].conj(), A[j] @ Ws)
            t3 = np.einsum("bie,aif->baef", Wx[k].conj(), Wx[j])
            r = np.abs(t1 + t2 + t3)
            m = float(r.max()) if r.size else 0.0
            if m > res1:
                b, a = np.unravel_index(int(r.reshape(r.shape[0], r.shape[1], -1).max(axis=2).argmax()),
                                        r.shape[:2])
                res1, worst1 = m, {"family": 1, "j": j + 1, "k": k + 1,
                                   "alpha": list(short[a]), "beta": list(short[b])}
    res2, worst2 = 0.0, {}
    for k in range(g):
        Gk = _stack(cert.G, [(k + 1,) + a for a in short])
        lhs = np.einsum("ie,aif->aef", W0.conj(), A[k] @ Ws + Wx[k])
        r = np.abs(lhs - Gk).reshape(len(short), -1).max(axis=1)
        if r.size and r.max() > res2:
            res2 = float(r.max())
            worst2 = {"family": 2, "k": k + 1, "alpha": list(short[int(r.argmax())])}
    res3 = float(np.abs(W0.conj().T @ W0 - np.eye(W0.shape[1])).max())
    total = max(res1, res2, res3)
    worst = max([(res1, worst1), (res2, worst2), (res3, {"family": 3})], key=lambda t: t[0])[1]
    return RelationReport(total <= tol * scale, total,
                          {"family1": res1, "family2": res2, "family3": res3}, worst, N)


@dataclass
class CoefficientReport:
    passed: bool
    w_recursion: float
    w_closed_form: float
    g_closed_form: float
    degree: int

    @property
    def max_residual(self) -> float:
        return max(self.w_recursion, self.w_closed_form, self.g_closed_form)

    def to_dict(self):
        return {**self.__dict__, "max_residual": self.max_residual}


def check_coefficients(cert: Certificate, depth: int | None = None, tol: float = 1e-12) -> CoefficientReport:
    """W_{x_j a} = (C - I) A_j W_a, W_a = R^a W0 and G_{x_j a} = W0* C A_j R^a W0 for |a| <= depth."""
    depth = cert.N - 1 if depth is None else depth
    if depth + 1 > cert.N:
        raise InputError(f"certificate degree {cert.N} is too small for depth {depth}")
    g, d = cert.g, cert.d
    CmI = cert.C - np.eye(d)
    rec = closed = gco = 0.0
    W0 = cert.W0
    for a in words(g, depth):
        Ra = np.eye(d, dtype=complex)
        for letter in a:
            Ra = Ra @ cert.R[letter - 1]
        Wa = cert.W.coeff(a)
        closed = max(closed, max_abs(Wa - Ra @ W0))
        for j in range(g):
            Wxa = cert.W.coeff((j + 1,) + a)
            rec = max(rec, max_abs(Wxa - CmI @ cert.A[j] @ Wa))
            Gxa = cert.G.coeff((j + 1,) + a)
            gco = max(gco, max_abs(Gxa - W0.conj().T @ cert.C @ cert.A[j] @ Ra @ W0))
    scale = max(1.0, max_abs(cert.A)) ** (depth + 1)
    ok = max(rec, closed, gco) <= tol * scale
    return CoefficientReport(ok, rec, closed, gco, depth)


# ---------------------------------------------------------------------------
# evaluation checks


@dataclass
class EvalReport:
    passed: bool
    max_residual: float
    checked: int
    skipped: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"passed": self.passed, "max_residual": self.max_residual, "checked": self.checked,
                "skipped": self.skipped, **self.details}


def identity_residual(cert: Certificate, X, W_X=None, G_X=None) -> float:
    """|| I + G(X) + G(X)* - W(X)* L_A(X) W(X) || normalised by max(1, ||rhs||)."""
    n = X.shape[1]
    W_X = eval_series(cert.W, X) if W_X is None else W_X
    G_X = eval_series(cert.G, X) if G_X is None else G_X
    L = eval_pencil(Pencil(cert.A), X)
    rhs = W_X.conj().T @ L @ W_X
    lhs = np.eye(cert.e * n) + G_X + G_X.conj().T
    return max_abs(lhs - rhs) / max(1.0, max_abs(rhs))


def verify_on_nilpotents(cert: Certificate, fock_order: int, random_tuples: int = 20, seed=0,
                         tol: float = 1e-10) -> EvalReport:
    """Evaluate the identity at the Fock shifts on words of length <= fock_order,
    and at random strictly upper-triangular tuples of size fock_order + 1.

    Both kinds of tuple are nilpotent of order fock_order + 1, so the stored
    series are evaluated exactly when the certificate degree is at least fock_order.
    """
    if fock_order > cert.N:
        raise InputError(f"certificate degree {cert.N} is below the Fock order {fock_order}")
    S = fock_shift_tuple(cert.g, fock_order)
    fock = identity_residual(cert, S)
    rng = make_rng(seed)
    rand = 0.0
    for _ in range(random_tuples):
        X = random_nilpotent_tuple(cert.g, fock_order + 1, rng, scale=0.5)
        rand = max(rand, identity_residual(cert, X))
    worst = max(fock, rand)
    return EvalReport(worst <= tol, worst, 1 + random_tuples,
                      details={"fock_residual": fock, "random_residual": rand, "fock_order": fock_order,
                               "fock_dimension": S.shape[1]})


def resolvent_radius(cert: Certificate) -> float:
    nr = max(np.linalg.norm(r, 2) for r in cert.R)
    return np.inf if nr == 0 else 1.0 / (nr * cert.g)


def verify_on_samples(cert: Certificate, samples: int = 100, radius: float = 0.05, seed=0, level: int = 3,
                      tol: float = 1e-8) -> EvalReport:
    """Check the identity at random small tuples, W(X) computed by a linear solve."""
    rng = make_rng(seed)
    g, d, n = cert.g, cert.d, level
    worst, skipped = 0.0, 0
    I_dn = np.eye(d * n)
    W0n = np.kron(cert.W0, np.eye(n))
    CA = cert.C @ cert.A
    for _ in range(samples):
        X = rng.standard_normal((g, n, n)) + 1j * rng.standard_normal((g, n, n))
        X *= (radius * rng.uniform(0.0, 1.0, size=g) / np.linalg.norm(X, ord=2, axis=(1, 2)))[:, None, None]
        M = I_dn - sum(np.kron(cert.R[j], X[j]) for j in range(g))
        if np.linalg.cond(M) > 1e12:
            skipped += 1
            continue
        W_X = np.linalg.solve(M, W0n)
        G_X = np.kron(cert.W0.conj().T, np.eye(n)) @ sum(np.kron(CA[j], X[j]) for j in range(g)) @ W_X
        worst = max(worst, identity_residual(cert, X, W_X, G_X))
    return EvalReport(worst <= tol, worst, samples - skipped, skipped,
                      details={"radius": radius, "resolvent_radius": resolvent_radius(cert)})


# ---------------------------------------------------------------------------
# extraction of the convexotonic tuple


@dataclass
class ExtractionResult:
    ok: bool
    Xi: np.ndarray | None
    B: np.ndarray | None
    p: list | None
    residual: float
    module_residual: float
    message: str = ""

    def to_dict(self):
        return {"ok": self.ok, "Xi": self.Xi, "B": self.B, "residual": self.residual,
                "module_residual": self.module_residual, "message": self.message}


def extract_convexotonic(A, C, tol: float = 1e-8, U=None, N: int = 8) -> ExtractionResult:
    """Solve A_k (C - I) A_j = sum_s (Xi_j)[k, s] A_s and return Xi, B = C A and p."""
    A = np.asarray(A, dtype=complex)
    C = _check_unitary(C)
    d = A.shape[1]
    R = (C - np.eye(d)) @ A
    scale = max(1.0, float(np.linalg.norm(A.reshape(A.shape[0], -1))))
    try:
        Xi = structure_matrices(A, R, tol=1e-8, residual_tol=tol * scale)
    except (NotAModuleError, DependentBasisError) as e:
        return ExtractionResult(False, None, None, None, np.inf, np.inf, str(e))
    lhs = np.einsum("kab,jbc->jkac", A, R)
    rhs = np.einsum("jks,sab->jkab", Xi, A)
    resid = max_abs(lhs - rhs)
    cvx = is_convexotonic(Xi, 1e-9)
    if not cvx.passed:
        return ExtractionResult(False, Xi, None, None, resid, np.inf,
                                f"extracted tuple is not convexotonic ({cvx.max_residual:.2e})")
    # A_k R^a = sum_t (Xi^a)[k, t] A_t for |a| <= 4
    mod = 0.0
    for RP, XP in zip(word_products(R, 4), word_products(Xi, 4)):
        l2 = np.einsum("kab,wbc->wkac", A, RP)
        r2 = np.einsum("wkt,tab->wkab", XP, A)
        mod = max(mod, max_abs(l2 - r2))
    if mod > tol * scale:
        return ExtractionResult(False, Xi, None, None, resid, mod, "module identity fails")
    B = C @ A
    if U is not None:
        U = np.asarray(U, dtype=complex)
        B = U.conj().T @ B @ U
    p, _ = map_series(Xi, N)
    return ExtractionResult(True, Xi, B, p, resid, mod, "ok")


def annihilation_implies(R, Xi, depth: int) -> bool:
    """True when R^a = 0 forces Xi^a = 0 for every word with |a| <= depth."""
    for RP, XP in zip(word_products(R, depth), word_products(Xi, depth)):
        rz = np.abs(RP).reshape(RP.shape[0], -1).max(axis=1) <= 1e-12
        xz = np.abs(XP).reshape(XP.shape[0], -1).max(axis=1) <= 1e-10
        if np.any(rz & ~xz):
            return False
    return True


@dataclass
class PolynomialReport:
    R_nilpotent: bool
    mu: int | None
    W_degree: int | None
    G_degree: int | None
    W_polynomial: bool
    consistent: bool
    nu: int | None = None
    p_degree: int | None = None

    def to_dict(self):
        return self.__dict__.copy()


def check_polynomial_iff_nilpotent(cert: Certificate) -> PolynomialReport:
    """R nilpotent exactly when the truncated W (and G) stop growing."""
    d = cert.d
    mu = nilpotency_order(cert.R, d + 1)
    wdeg, gdeg = cert.W.degree(1e-12), cert.G.degree(1e-12)
    stabilized = wdeg < cert.N
    nu = pdeg = None
    if mu is not None:
        ext = extract_convexotonic(cert.A, cert.C)
        if ext.ok:
            nu = nilpotency_order(ext.Xi, ext.Xi.shape[0] + 1)
            if nu is not None:
                pdeg = max(f.degree(1e-12) for f in map_series(ext.Xi, nu + 2, check=False)[0])
                if not (nu <= mu <= nu + 1):
                    raise AssertionError(f"nilpotency orders violate nu <= mu <= nu + 1 (mu={mu}, nu={nu})")
            if not annihilation_implies(cert.R, ext.Xi, min(cert.N, 5)):
                raise AssertionError("R^a = 0 does not force Xi^a = 0")
    consistent = (mu is not None) == stabilized if cert.N > d else True
    if mu is not None:
        consistent = consistent and wdeg == mu - 1
    return PolynomialReport(mu is not None, mu, wdeg if stabilized else None,
                            gdeg if stabilized else None, stabilized, consistent, nu, pdeg)


# ---------------------------------------------------------------------------
# hereditary certificates


@dataclass(frozen=True)
class HereditaryCertificate:
    A: np.ndarray
    h: HereditaryPoly
    squares: tuple = ()
    weights: tuple = ()


def expand_certificate(cert: HereditaryCertificate) -> HereditaryPoly:
    """sum_k h_k* h_k + sum_j f_j* L_A f_j as a hereditary polynomial."""
    A = np.asarray(cert.A, dtype=complex)
    nu = cert.h.size
    out: dict = {}

    def add(key, m):
        out[key] = out[key] + m if key in out else m

    for hk in cert.squares:
        for v, a in hk.items():
            for w, b in hk.items():
                add((v, w), a.conj().T @ b)
    for f in cert.weights:
        if f.rows != A.shape[1]:
            raise ShapeMismatch(f"weight has {f.rows} rows, pencil has size {A.shape[1]}")
        for v, a in f.items():
            for w, b in f.items():
                add((v, w), a.conj().T @ b)
                for i in range(A.shape[0]):
                    # Lambda_A f contributes A_i f_w x_i w; its adjoint gives (x_i v)* w
                    add((v, (i + 1,) + w), a.conj().T @ A[i] @ b)
                    add(((i + 1,) + v, w), a.conj().T @ A[i].conj().T @ b)
    return HereditaryPoly(cert.h.g, nu, out)


@dataclass
class HereditaryReport:
    valid: bool
    max_residual: float
    worst_term: tuple | None
    min_eig_samples: float
    reason: str

    def to_dict(self):
        wt = None if self.worst_term is None else [list(self.worst_term[0]), list(self.worst_term[1])]
        return {"valid": self.valid, "max_residual": self.max_residual, "worst_term": wt,
                "min_eig_samples": self.min_eig_samples, "reason": self.reason}


def verify_hereditary(cert: HereditaryCertificate, tol: float = 1e-12, samples: int = 20, seed=0,
                      level: int = 2) -> HereditaryReport:
    h = cert.h
    D = h.degree()
    for k, hk in enumerate(cert.squares):
        if hk.degree() > D + 1:
            return HereditaryReport(False, np.inf, None, np.nan, f"square {k} has degree {hk.degree()} > {D + 1}")
        if hk.cols != h.size:
            raise ShapeMismatch(f"square {k} has {hk.cols} columns, expected {h.size}")
    for k, f in enumerate(cert.weights):
        if f.degree() > D + 1:
            return HereditaryReport(False, np.inf, None, np.nan, f"weight {k} has degree {f.degree()} > {D + 1}")
        if f.cols != h.size:
            raise ShapeMismatch(f"weight {k} has {f.cols} columns, expected {h.size}")
    rhs = expand_certificate(cert)
    keys = set(h.coeffs) | set(rhs.coeffs)
    worst, worst_key = 0.0, None
    for key in sorted(keys, key=lambda t: (len(t[0]) + len(t[1]), t)):
        r = max_abs(h.coeff(*key) - rhs.coeff(*key))
        if r > worst:
            worst, worst_key = r, key
    scale = max(1.0, max((max_abs(m) for m in h.coeffs.values()), default=0.0))
    # sanity layer: h should be positive semidefinite on the spectrahedron
    rng = make_rng(seed)
    P = Pencil(np.asarray(cert.A, dtype=complex))
    min_eig = np.inf
    for X in sample_interior(P, level, samples, rng):
        min_eig = min(min_eig, float(np.linalg.eigvalsh(herm(h.evaluate(X)))[0]))
    if worst > tol * scale:
        v, w = worst_key
        reason = f"coefficient mismatch {worst:.3e} at ({word_str(v)})* {word_str(w)}"
        return HereditaryReport(False, worst, worst_key, min_eig, reason)
    return HereditaryReport(True, worst, None, min_eig, "ok")
