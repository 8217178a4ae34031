"""Randomized witnesses for the genericity conditions on a pencil tuple A.

A probe is a tuple alpha (scalars or matrices) rescaled so that
||Lambda_A(alpha)|| = 1.  Its top right singular vector u spans the kernel of
I - T*T, T = Lambda_A(alpha), and splits as u = sum_a u_a (x) e_a.

All searches are witness searches: "witnessed" comes with the vectors that
prove the condition, while "not witnessed" only means the budget ran out.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth

from .errors import DegenerateProbe, InputError
from .nc_core import as_tuple
from .pencil import Pencil
from .util import complex_gaussian, make_rng, parallel_map, spawn

GAP_TOL = 1e-6
INDEP_TOL = 1e-6
PROBE_BATCH = 16


@dataclass
class Probe:
    alpha: np.ndarray
    T: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gap: float

    @property
    def level(self) -> int:
        return self.alpha.shape[1]

    @property
    def components(self) -> np.ndarray:
        """Columns u_a with u = sum_a u_a (x) e_a, shape (d, n)."""
        return self.u.reshape(-1, self.level)

    @property
    def left_components(self) -> np.ndarray:
        return self.v.reshape(-1, self.level)

    def kernel_residual(self) -> float:
        M = np.eye(self.T.shape[0]) - self.T.conj().T @ self.T
        return float(np.linalg.norm(M @ self.u))

    def pairing_residual(self) -> float:
        """|| J ((-T u) + u) || for J = [[I, T], [T*, I]]."""
        m = self.T.shape[0]
        J = np.block([[np.eye(m), self.T], [self.T.conj().T, np.eye(m)]])
        return float(np.linalg.norm(J @ np.r_[-self.T @ self.u, self.u]))


def _fix_phase(x: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k])


def top_singular_probe(A, alpha, gap_tol: float = GAP_TOL) -> Probe:
    P = Pencil(np.asarray(A, dtype=complex))
    alpha = as_tuple(alpha, P.g)
    T = P.lam(alpha)
    s = np.linalg.norm(T, 2)
    if s == 0:
        raise InputError("Lambda_A(alpha) vanishes")
    T, alpha = T / s, alpha / s
    w, V = np.linalg.eigh(T.conj().T @ T)
    gap = float(w[-1] - w[-2]) if w.size > 1 else 1.0
    if gap < gap_tol:
        raise DegenerateProbe(f"top singular value is not simple (gap {gap:.2e})")
    u = _fix_phase(V[:, -1])
    v = T @ u
    v = _fix_phase(v / np.linalg.norm(v))
    return Probe(alpha, T, u, v, gap)


def _probe_or_none(A, alpha):
    try:
        return top_singular_probe(A, alpha)
    except DegenerateProbe:
        return None


def _probe_stream(A, draw, budget: int):
    """Probes (None when rejected) in draw order; each batch is evaluated in parallel.

    Alphas are drawn sequentially, so the stream does not depend on the batch
    size or the number of workers.
    """
    k = 0
    while k < budget:
        alphas = [draw(k + i) for i in range(min(PROBE_BATCH, budget - k))]
        k += len(alphas)
        yield from parallel_map(lambda a: _probe_or_none(A, a), alphas)


@dataclass
class HyperbasisResult:
    ok: bool
    min_sigma: float
    worst_subset: tuple | None

    def __bool__(self):
        return self.ok


def _unit(vs):
    return [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in vs]


def hyperbasis_check(vectors, tol: float = INDEP_TOL, dim: int | None = None) -> HyperbasisResult:
    """True when every dim-subset of the vectors is a basis of C^dim."""
    vs = _unit(vectors)
    if not vs:
        return HyperbasisResult(False, 0.0, None)
    dim = vs[0].size if dim is None else dim
    if len(vs) < dim:
        return HyperbasisResult(False, 0.0, None)
    worst, worst_sub = np.inf, None
    for sub in itertools.combinations(range(len(vs)), dim):
        sig = np.linalg.svd(np.stack([vs[i] for i in sub], axis=1), compute_uv=False)[-1]
        if sig < worst:
            worst, worst_sub = float(sig), sub
    return HyperbasisResult(worst > tol, worst, worst_sub)


def _general_position_with(selected, cand, dim, tol) -> bool:
    """Every subset of size <= dim containing cand stays independent."""
    pool = selected
    for k in range(0, min(len(pool), dim - 1) + 1):
        for sub in itertools.combinations(range(len(pool)), k):
            M = np.stack([pool[i] for i in sub] + [cand], axis=1)
            if np.linalg.svd(M, compute_uv=False)[-1] <= tol:
                return False
    return True


def _rank(vs, tol=INDEP_TOL) -> int:
    if not vs:
        return 0
    s = np.linalg.svd(np.stack(_unit(vs), axis=1), compute_uv=False)
    return int((s > tol * max(1.0, s[0])).sum())


@dataclass
class GenericityReport:
    condition: str
    verdict: str
    probes_used: int
    rejected: int
    witness: dict = field(default_factory=dict)
    explanation: str = ""

    @property
    def witnessed(self) -> bool:
        return self.verdict == "witnessed"

    def to_dict(self):
        return {"condition": self.condition, "verdict": self.verdict, "probes_used": self.probes_used,
                "rejected": self.rejected, "witness": self.witness, "explanation": self.explanation}


def check_sv_generic(A, probe_budget: int = 500, seed=0, tol: float = INDEP_TOL) -> GenericityReport:
    """Search scalar probes for d+1 right vectors in general position and d independent left vectors."""
    A = np.asarray(A, dtype=complex)
    g, d = A.shape[0], A.shape[1]
    if not np.any(A):
        raise InputError("A must be nonzero")
    rng = make_rng(seed)
    right, left, alphas_r, alphas_l = [], [], [], []
    seen_u = []
    used = rejected = 0
    for pr in _probe_stream(A, lambda k: complex_gaussian(rng, g), probe_budget):
        if len(right) == d + 1 and len(left) == d:
            break
        used += 1
        if pr is None:
            rejected += 1
            continue
        u, v = pr.u, pr.v
        seen_u.append(u)
        if len(right) < d + 1 and _general_position_with(right, u, d, tol):
            right.append(u)
            alphas_r.append(pr.alpha[:, 0, 0])
        if len(left) < d and _general_position_with(left, v, d, tol):
            left.append(v)
            alphas_l.append(pr.alpha[:, 0, 0])
    if len(right) == d + 1 and len(left) == d:
        hb = hyperbasis_check(right, tol)
        basis_sigma = float(np.linalg.svd(np.stack(left, axis=1), compute_uv=False)[-1])
        if hb.ok and basis_sigma > tol:
            return GenericityReport("sv-generic", "witnessed", used, rejected,
                                    {"right_vectors": np.array(right), "left_vectors": np.array(left),
                                     "right_probes": np.array(alphas_r), "left_probes": np.array(alphas_l),
                                     "hyperbasis_min_sigma": hb.min_sigma, "left_basis_min_sigma": basis_sigma},
                                    f"{d + 1} right vectors in general position and {d} independent left vectors")
    r = _rank(seen_u, tol)
    expl = f"collected right singular vectors span a {r}-dimensional subspace of C^{d}"
    if r == 1 and seen_u:
        u0 = np.round(seen_u[0], 12)
        shown = u0.real.tolist() if not np.any(u0.imag) else u0.tolist()
        expl += f"; every probe returned the same vector u = {shown}"
    return GenericityReport("sv-generic", "not witnessed within budget", used, rejected,
                            {"right_found": len(right), "left_found": len(left)}, expl)


def _basis(M) -> np.ndarray:
    return orth(M) if np.any(M) else np.zeros((M.shape[0], 0))


def kernel_complement(A) -> np.ndarray:
    """Orthonormal basis of ker(A)^perp = span of the ranges of the A_j*."""
    A = np.asarray(A, dtype=complex)
    K = null_space(A.reshape(-1, A.shape[2]))
    if K.shape[1] == 0:
        return np.eye(A.shape[2], dtype=complex)
    return null_space(K.conj().T)


def range_basis(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return _basis(np.concatenate(list(A), axis=1))


def remark_probe_pair(A, alpha1, rng=None, tol: float = INDEP_TOL):
    """Build a second probe T alpha1 T* from one probe whose components contain a basis.

    T is unitary with first row supported exactly on the chosen basis indices,
    so the new first component is a combination of the basis with nonzero
    weights.  Returns (vectors, probes) or None when alpha1 is unsuitable.
    """
    rng = make_rng(0) if rng is None else rng
    p1 = top_singular_probe(A, alpha1)
    Q = kernel_complement(A)
    r = Q.shape[1]
    comps = [Q.conj().T @ p1.components[:, a] for a in range(p1.level)]
    idx = None
    for sub in itertools.combinations(range(len(comps)), r):
        M = np.stack([comps[i] for i in sub], axis=1)
        if np.linalg.svd(M, compute_uv=False)[-1] > tol:
            idx = sub
            break
    if idx is None:
        return None
    n = p1.level
    row = np.zeros(n, dtype=complex)
    row[list(idx)] = np.exp(2j * np.pi * rng.uniform(size=r))
    row /= np.linalg.norm(row)
    Mq = np.column_stack([row.conj(), complex_gaussian(rng, (n, n - 1))]) if n > 1 else row.conj()[:, None]
    Qm, _ = np.linalg.qr(Mq)
    Tm = Qm.conj().T
    Tm[0] *= row[idx[0]] / Tm[0, idx[0]]  # fix the phase of the first row
    alpha2 = Tm @ p1.alpha @ Tm.conj().T
    p2 = top_singular_probe(A, alpha2)
    vecs = [comps[i] for i in idx] + [Q.conj().T @ p2.components[:, 0]]
    return vecs, (p1, p2), idx


def check_eig_star_generic(A, probes=None, levels=(1, 2), budget: int = 200, seed=0,
                           tol: float = INDEP_TOL, remark_level: int | None = None) -> GenericityReport:
    """Assemble decomposed kernel vectors from matrix-level probes.

    eig: the components u^j_a contain a hyperbasis of ker(A)^perp.
    star: the left components span C^d (strict) or range(A) (weak).
    """
    A = np.asarray(A, dtype=complex)
    g, d = A.shape[0], A.shape[1]
    rng, rng_remark = spawn(seed, 2)
    Q = kernel_complement(A)
    r = Q.shape[1]
    Rg = range_basis(A)
    U_sel, M_all = [], []
    used = rejected = 0
    if probes is not None:
        probe_list = [as_tuple(a, g) for a in probes]
        draw, total = (lambda k: probe_list[k]), len(probe_list)
    else:
        def draw(k):
            n = levels[k % len(levels)]
            return complex_gaussian(rng, (g, n, n))
        total = budget
    pairing = 0.0
    for pr in _probe_stream(A, draw, total):
        used += 1
        if pr is None:
            rejected += 1
            continue
        pairing = max(pairing, pr.pairing_residual())
        for a in range(pr.level):
            c = Q.conj().T @ pr.components[:, a]
            if np.linalg.norm(c) > tol and len(U_sel) < r + 1 and _general_position_with(U_sel, c / np.linalg.norm(c), r, tol):
                U_sel.append(c / np.linalg.norm(c))
            M_all.append(pr.left_components[:, a])
        if len(U_sel) == r + 1 and _rank(M_all, tol) == d:
            break
    eig_ok = len(U_sel) == r + 1 and hyperbasis_check(U_sel, tol).ok
    route = "sampled probes"
    witness = {}
    if not eig_ok:
        lvl = remark_level or max(r, 1)
        for _ in range(max(1, budget // 10)):
            res = remark_probe_pair(A, complex_gaussian(rng_remark, (g, lvl, lvl)), rng_remark, tol)
            used += 2
            if res is None:
                continue
            vecs, _, idx = res
            if hyperbasis_check(vecs, tol).ok:
                eig_ok, U_sel, route = True, vecs, "single probe with a unitary conjugate"
                witness["basis_indices"] = list(idx)
                break
    span_rank = _rank(M_all, tol)
    range_rank = Rg.shape[1]
    weak_rank = _rank([Rg.conj().T @ m for m in M_all], tol) if M_all else 0
    witness.update({"ker_complement_dim": r, "range_dim": range_rank, "left_span_rank": span_rank,
                    "pairing_residual": pairing, "route": route})
    if eig_ok:
        witness["hyperbasis"] = np.array(U_sel)
        witness["hyperbasis_min_sigma"] = hyperbasis_check(U_sel, tol).min_sigma
    star_strict = span_rank == d
    star_weak = weak_rank == range_rank
    witness["star_strict"] = star_strict
    witness["star_weak"] = star_weak
    verdict = "witnessed" if eig_ok else "not witnessed within budget"
    expl = (f"eig: {'hyperbasis of ker(A)^perp found' if eig_ok else 'no hyperbasis found'}; "
            f"star: left components span a {span_rank}-dimensional space "
            f"(range(A) has dimension {range_rank})")
    return GenericityReport("eig-generic", verdict, used, rejected, witness, expl)


def check_star_generic(A, **kw) -> GenericityReport:
    rep = check_eig_star_generic(A, **kw)
    ok = rep.witness.get("star_strict", False)
    return GenericityReport("star-generic", "witnessed" if ok else "not witnessed within budget",
                            rep.probes_used, rep.rejected, rep.witness, rep.explanation)
