"""Example families: spectrahedral pairs from algebras and the P-Q family.

The P-Q family uses 2 x 2 blocks

    A_1 = [[0, P12], [P21, P22]],   A_2 = [[0, 0], [0, Q]],   P21 P12 = -2 Q,

and the unitaries V_gamma = diag(gamma I, I).  For |gamma| = 1 the pair
(D_A, D_{V_gamma A}) is related by p_gamma = (x1, x2 + 2 (1 - gamma) x1^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .certify import build_certificate, extract_convexotonic, verify_on_nilpotents
from .convexotonic import structure_matrices
from .errors import InvalidParameter
from .nc_core import FreeSeries, compose_polynomial, eval_series
from .pencil import Pencil, boundedness_evidence, eval_pencil, sample_boundary
from .util import lambda_min, make_rng, max_abs, random_unitary

# Example blocks as printed; this Q does not satisfy P21 P12 = -2 Q.
EXAMPLE_Q_PRINTED = np.array([[0, 2], [0.5, 0]], dtype=complex)
EXAMPLE_P12 = np.array([[1, 1], [1, 0]], dtype=complex)
EXAMPLE_P21 = np.array([[2, -2], [0, 1]], dtype=complex)
EXAMPLE_P22 = np.eye(2, dtype=complex)
# Q determined by the constraint from the printed P12, P21.
EXAMPLE_Q = -0.5 * EXAMPLE_P21 @ EXAMPLE_P12


# ---------------------------------------------------------------------------
# pairs from algebras


@dataclass
class PairSpec:
    A: np.ndarray
    C: np.ndarray
    B: np.ndarray
    Xi: np.ndarray
    U: np.ndarray | None = None
    provenance: str = ""

    @property
    def W0(self):
        return np.eye(self.A.shape[1], dtype=complex) if self.U is None else self.U

    def to_dict(self):
        return {"A": self.A, "C": self.C, "B": self.B, "Xi": self.Xi, "U": self.U,
                "provenance": self.provenance}


def unitary_with_margin(rng, d: int, margin: float = 0.1, max_tries: int = 1000) -> np.ndarray:
    """Haar unitary whose spectrum stays at distance > margin from 1."""
    for _ in range(max_tries):
        C = random_unitary(rng, d)
        if np.abs(1 - np.linalg.eigvals(C)).min() > margin:
            return C
    raise RuntimeError("could not sample a unitary with the requested margin")


def build_pair(R, C, U=None, margin: float = 0.1, provenance: str = "", check: bool = True) -> PairSpec:
    """A_j = (C - I)^{-1} R_j and B = C A (or U* C A U)."""
    R = np.asarray(R, dtype=complex)
    C = np.asarray(C, dtype=complex)
    d = R.shape[1]
    Xi = structure_matrices(R, R)
    gap = np.abs(1 - np.linalg.eigvals(C)).min()
    if gap <= margin:
        raise InvalidParameter(f"C has an eigenvalue within {gap:.3g} of 1 (margin {margin})")
    A = np.linalg.solve(C - np.eye(d), R.transpose(1, 0, 2).reshape(d, -1)).reshape(d, R.shape[0], d)
    A = A.transpose(1, 0, 2)
    U = None if U is None else np.asarray(U, dtype=complex)
    B = C @ A if U is None else U.conj().T @ C @ A @ U
    spec = PairSpec(A, C, B, Xi, U, provenance)
    if check:
        cert = build_certificate(A, C, spec.W0, N=3)
        rep = verify_on_nilpotents(cert, 3, random_tuples=2)
        if not rep.passed:
            raise AssertionError(f"pair certificate failed on nilpotents ({rep.max_residual:.2e})")
    return spec


# ---------------------------------------------------------------------------
# the P-Q family


@dataclass(frozen=True)
class PQFamily:
    Q: np.ndarray
    P12: np.ndarray
    P21: np.ndarray
    P22: np.ndarray

    @property
    def A(self) -> np.ndarray:
        Z = np.zeros_like(self.Q)
        return np.array([np.block([[Z, self.P12], [self.P21, self.P22]]),
                         np.block([[Z, Z], [Z, self.Q]])])

    def V(self, gamma) -> np.ndarray:
        k = self.Q.shape[0]
        return np.diag(np.r_[np.full(k, complex(gamma)), np.ones(k)])

    def to_dict(self):
        return {"Q": self.Q, "P12": self.P12, "P21": self.P21, "P22": self.P22, "A": self.A}


def pq_build(Q, P12, P21, P22, tol: float = 1e-12, samples: int = 200, seed=0) -> PQFamily:
    mats = {name: np.asarray(m, dtype=complex) for name, m in
            (("Q", Q), ("P12", P12), ("P21", P21), ("P22", P22))}
    shapes = {m.shape for m in mats.values()}
    if len(shapes) != 1 or len(next(iter(shapes))) != 2 or mats["Q"].shape[0] != mats["Q"].shape[1]:
        raise InvalidParameter("Q, P12, P21, P22 must be square matrices of one size")
    problems = []
    for name, m in mats.items():
        if np.linalg.cond(m) > 1e12:
            problems.append(f"{name} is not invertible")
    defect = max_abs(mats["P21"] @ mats["P12"] + 2 * mats["Q"])
    scale = max(1.0, max_abs(mats["Q"]))
    if defect > tol * scale:
        problems.append(f"P21 P12 + 2 Q = 0 fails (max entry {defect:.3g})")
    if not problems:
        rep = boundedness_evidence(Pencil(mats["Q"][None]), samples, seed)
        if rep.verdict != "bounded-evidence":
            problems.append("D_Q(1) is unbounded")
    if problems:
        raise InvalidParameter("; ".join(problems))
    return PQFamily(**mats)


def example_family(p22: str = "identity") -> PQFamily:
    """Example blocks with Q fixed by the constraint. p22 is 'identity' or 'span'."""
    if p22 == "identity":
        P22 = EXAMPLE_P22
    elif p22 == "span":
        P22 = EXAMPLE_P12.conj().T @ EXAMPLE_P12 + EXAMPLE_P21 @ EXAMPLE_P21.conj().T
    else:
        raise InvalidParameter("p22 must be 'identity' or 'span'")
    return pq_build(EXAMPLE_Q, EXAMPLE_P12, EXAMPLE_P21, P22)


def pq_xi(gamma) -> np.ndarray:
    Xi = np.zeros((2, 2, 2), dtype=complex)
    Xi[0, 0, 1] = -2 * (gamma - 1)
    return Xi


def pq_polynomial(gamma, N: int = 4) -> list[FreeSeries]:
    """p_gamma = (x1, x2 + 2 (1 - gamma) x1^2)."""
    return [FreeSeries(2, 1, 1, N, {(1,): 1}),
            FreeSeries(2, 1, 1, N, {(2,): 1, (1, 1): 2 * (1 - gamma)})]


def _unimodular(z, name):
    z = complex(z)
    if abs(abs(z) - 1) > 1e-12:
        raise InvalidParameter(f"{name} must be unimodular, got |{name}| = {abs(z):.6g}")
    return z


@dataclass
class PQMap:
    gamma: complex
    p: list
    B: np.ndarray
    Xi: np.ndarray
    extraction_residual: float
    boundary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"gamma": self.gamma, "p": self.p, "B": self.B, "Xi": self.Xi,
                "extraction_residual": self.extraction_residual, "boundary": self.boundary}


def pq_map(fam: PQFamily, gamma, boundary_points: int = 0, levels=(1, 2, 3), seed=0) -> PQMap:
    gamma = _unimodular(gamma, "gamma")
    A, V = fam.A, fam.V(gamma)
    Xi = pq_xi(gamma)
    ext = extract_convexotonic(A, V)
    if not ext.ok:
        raise AssertionError(f"extraction failed: {ext.message}")
    resid = max_abs(ext.Xi - Xi)
    if resid > 1e-10:
        raise AssertionError(f"extracted Xi differs from the formula ({resid:.2e})")
    out = PQMap(gamma, pq_polynomial(gamma), V @ A, Xi, resid)
    if boundary_points:
        out.boundary = pq_boundary_check(fam, gamma, boundary_points, levels, seed)
    return out


def pq_boundary_check(fam: PQFamily, gamma, points: int = 50, levels=(1, 2, 3), seed=0) -> dict:
    """|lambda_min(L_B(p(X)))| over sampled boundary points X of D_A."""
    gamma = _unimodular(gamma, "gamma")
    PA, PB = Pencil(fam.A), Pencil(fam.V(gamma) @ fam.A)
    p = pq_polynomial(gamma)
    rng = make_rng(seed)
    worst = {}
    for n in levels:
        w = 0.0
        for X in sample_boundary(PA, n, points, rng):
            Y = np.array([eval_series(f, X) for f in p])
            w = max(w, abs(lambda_min(eval_pencil(PB, Y))))
        worst[n] = w
    return {"max_abs_lambda_min": max(worst.values()), "per_level": worst, "points": points}


def pq_span_coefficients(fam: PQFamily, tol: float = 1e-10) -> tuple[complex, complex]:
    """alpha1, alpha3 with P22 = alpha1 Q + alpha3 (P12* P12 + P21 P21*)."""
    Pi = fam.P12.conj().T @ fam.P12 + fam.P21 @ fam.P21.conj().T
    M = np.stack([fam.Q.ravel(), Pi.ravel()], axis=1)
    coef, *_ = np.linalg.lstsq(M, fam.P22.ravel(), rcond=None)
    resid = max_abs(M @ coef - fam.P22.ravel())
    if resid > tol * max(1.0, max_abs(fam.P22)):
        raise InvalidParameter(f"P22 is not in span{{Q, P12*P12 + P21 P21*}} (residual {resid:.2e})")
    return complex(coef[0]), complex(coef[1])


def pq_automorphism(fam: PQFamily, phi, N: int = 4) -> list[FreeSeries]:
    """The polynomial automorphism s_phi of D_A (requires P22 in the admissible span)."""
    phi = _unimodular(phi, "phi")
    a1, a3 = pq_span_coefficients(fam)
    return automorphism_formula(phi, a1, a3, N)


def automorphism_formula(phi, a1, a3, N: int = 4) -> list[FreeSeries]:
    c3 = np.conj(a3)
    delta = c3 * (1 - phi)
    s1 = FreeSeries(2, 1, 1, N, {(): delta, (1,): phi})
    s2 = FreeSeries(2, 1, 1, N, {
        (): -delta * (2 * delta + a1),
        (1,): -(1 - phi) * (4 * c3 * phi - a1),
        (2,): 1.0,
        (1, 1): 2 * (1 - phi**2),
    })
    return [s1, s2]


def compose_maps(s, t, N: int = 4) -> list[FreeSeries]:
    """Coefficients of s o t for polynomial maps (constant terms allowed)."""
    return [compose_polynomial(f, t, N) for f in s]


def automorphism_boundary_check(fam: PQFamily, phi, points: int = 20, levels=(1, 2), seed=0) -> float:
    s = pq_automorphism(fam, phi)
    PA = Pencil(fam.A)
    rng = make_rng(seed)
    worst = 0.0
    for n in levels:
        for X in sample_boundary(PA, n, points, rng):
            Y = np.array([eval_series(f, X) for f in s])
            worst = max(worst, abs(lambda_min(eval_pencil(PA, Y))))
    return worst


def c_condition(fam: PQFamily, tol: float = 1e-9) -> dict:
    """Look for c != 0 with P21* + c P12 singular and P21 - c P12 invertible."""
    cands = -np.linalg.eigvals(np.linalg.solve(fam.P12, fam.P21.conj().T))
    found = []
    for c in cands:
        if abs(c) < tol:
            continue
        smin = np.linalg.svd(fam.P21 - c * fam.P12, compute_uv=False)[-1]
        found.append({"c": complex(c), "sigma_min_minus": float(smin), "holds": bool(smin > tol)})
    return {"holds": any(f["holds"] for f in found), "candidates": found}


# ---------------------------------------------------------------------------
# affine non-equivalence evidence


def _unitary_invariants(T: np.ndarray, depth: int = 3) -> np.ndarray:
    """Traces of words in T and T* up to the given length (unitary invariants)."""
    mats = list(T) + [t.conj().T for t in T]
    vals, frontier = [], [np.eye(T.shape[1], dtype=complex)]
    for _ in range(depth):
        frontier = [f @ m for f in frontier for m in mats]
        vals.extend(np.trace(f) for f in frontier)
    return np.array(vals)


def affine_equivalence_search(A, B, trials: int = 8, seed=0, depth: int = 3) -> dict:
    """Seeded search for an affine l with L_A(l(X)) unitarily equivalent to a congruence of L_B.

    For each candidate (M, b) the normalized pencil F = H^{-1} (M B) H^{-1} with
    H = L_B(b)^{1/2} is compared with A through trace invariants of words in
    (F, F*).  A large minimum residual is evidence of non-equivalence, not a proof.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    g = A.shape[0]
    target = _unitary_invariants(A, depth)
    PB = Pencil(B)
    rng = make_rng(seed)

    def unpack(z):
        M = (z[: g * g] + 1j * z[g * g: 2 * g * g]).reshape(g, g)
        b = z[2 * g * g: 2 * g * g + g] + 1j * z[2 * g * g + g:]
        return M, b

    def loss(z):
        M, b = unpack(z)
        L = eval_pencil(PB, b)
        w, V = np.linalg.eigh(L)
        if w[0] <= 1e-9:
            return 1e6
        Hi = (V / np.sqrt(w)) @ V.conj().T
        F = Hi @ np.einsum("ij,jab->iab", M, B) @ Hi
        diff = _unitary_invariants(F, depth) - target
        return float(np.sum(np.abs(diff) ** 2)) / (1 + float(np.sum(np.abs(target) ** 2)))

    best = np.inf
    for _ in range(trials):
        z0 = np.r_[np.eye(g).ravel() + 0.3 * rng.standard_normal(g * g), 0.3 * rng.standard_normal(g * g),
                   0.1 * rng.standard_normal(2 * g)]
        res = minimize(loss, z0, method="BFGS", options={"maxiter": 400})
        best = min(best, float(res.fun))
    return {"min_residual": best, "trials": trials, "invariant_depth": depth}
