"""Words, matrix tuples and truncated free (noncommutative) power series.

Words are tuples of 1-based letter indices, so ``(1, 2)`` is ``x1 x2`` and
``()`` is the empty word.  Matrix tuples are arrays of shape ``(g, n, n)``.

A :class:`FreeSeries` stores a sparse map from words to ``rows x cols``
coefficient matrices.  Evaluation puts the coefficient on the left of the
Kronecker product: ``f(X) = sum_w f_w (x) X^w``.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ShapeMismatch, VariableMismatch

Word = tuple


# ---------------------------------------------------------------------------
# words


def word_count(g: int, N: int) -> int:
    """Number of words of length <= N in g letters."""
    if g == 1:
        return N + 1
    return (g ** (N + 1) - 1) // (g - 1)


def level_offset(g: int, L: int) -> int:
    """Index of the first word of length L in graded-lex order."""
    return word_count(g, L - 1) if L > 0 else 0


def words_of_length(g: int, L: int) -> Iterator[Word]:
    return itertools.product(range(1, g + 1), repeat=L)


def words(g: int, N: int) -> Iterator[Word]:
    """All words of length <= N, graded lexicographic with x1 < ... < xg."""
    for L in range(N + 1):
        yield from words_of_length(g, L)


def index_in_level(w: Word, g: int) -> int:
    i = 0
    for a in w:
        i = i * g + (a - 1)
    return i


def word_index(w: Word, g: int) -> int:
    return level_offset(g, len(w)) + index_in_level(w, g)


def word_str(w: Word) -> str:
    if not w:
        return "1"
    return "".join(f"x{a}" for a in w)


def _check_word(w: Word, g: int) -> None:
    for a in w:
        if not 1 <= a <= g:
            raise VariableMismatch(f"letter {a} outside 1..{g} in word {w}")


# ---------------------------------------------------------------------------
# matrix tuples


def as_tuple(X, g: int | None = None) -> np.ndarray:
    """Validate and return a (g, n, n) complex array."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        # scalar point in C^g, level 1
        X = X.reshape(-1, 1, 1)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ShapeMismatch(f"expected a tuple of square matrices, got shape {X.shape}")
    if g is not None and X.shape[0] != g:
        raise VariableMismatch(f"expected {g} matrices, got {X.shape[0]}")
    return X


def direct_sum(X, Y) -> np.ndarray:
    X, Y = as_tuple(X), as_tuple(Y, X.shape[0])
    n, m = X.shape[1], Y.shape[1]
    Z = np.zeros((X.shape[0], n + m, n + m), dtype=complex)
    Z[:, :n, :n] = X
    Z[:, n:, n:] = Y
    return Z


def conjugate(X, U) -> np.ndarray:
    """U* X U applied levelwise."""
    X = as_tuple(X)
    U = np.asarray(U, dtype=complex)
    return U.conj().T @ X @ U


def eval_word(w: Word, X) -> np.ndarray:
    X = as_tuple(X)
    _check_word(w, X.shape[0])
    out = np.eye(X.shape[1], dtype=complex)
    for a in w:
        out = out @ X[a - 1]
    return out


def word_products(X, N: int) -> list[np.ndarray]:
    """Level arrays P[k] of shape (g**k, n, n) holding X^w in graded-lex order."""
    X = as_tuple(X)
    g, n = X.shape[0], X.shape[1]
    levels = [np.eye(n, dtype=complex)[None]]
    for _ in range(N):
        prev = levels[-1]
        # word w*j sits at index idx(w)*g + j
        nxt = np.einsum("wab,jbc->wjac", prev, X).reshape(-1, n, n)
        levels.append(nxt)
    return levels


def joint_spectral_radius(X, N: int) -> float:
    """Finite-depth estimate max_{|a|=N} ||X^a||^(1/N).

    This is an upper-biased proxy for the joint spectral radius.
    """
    if N < 1:
        raise ValueError("depth must be >= 1")
    top = word_products(X, N)[-1]
    norms = np.linalg.norm(top, ord=2, axis=(1, 2))
    return float(norms.max() ** (1.0 / N))


def fock_shift_tuple(g: int, N: int) -> np.ndarray:
    """Creation shifts S_j w = x_j w on words of length <= N.

    The tuple is jointly nilpotent of order N + 1.
    """
    if g < 1 or N < 1:
        raise ValueError("need g >= 1 and N >= 1")
    dim = word_count(g, N)
    S = np.zeros((g, dim, dim), dtype=complex)
    for L in range(N):
        src0, dst0, span = level_offset(g, L), level_offset(g, L + 1), g**L
        for j in range(g):
            for i in range(span):
                S[j, dst0 + j * span + i, src0 + i] = 1.0
    return S


def random_nilpotent_tuple(g: int, n: int, rng, scale: float = 1.0) -> np.ndarray:
    """Random strictly upper-triangular tuple, jointly nilpotent of order <= n."""
    Z = rng.standard_normal((g, n, n)) + 1j * rng.standard_normal((g, n, n))
    return scale * np.triu(Z, 1)


# ---------------------------------------------------------------------------
# series


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class FreeSeries:
    """Truncated free power series with matrix coefficients.

    Instances are treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("g", "rows", "cols", "max_degree", "_c")

    def __init__(self, g: int, rows: int, cols: int, max_degree: int,
                 coeffs: Mapping[Word, object] | None = None):
        self.g, self.rows, self.cols, self.max_degree = int(g), int(rows), int(cols), int(max_degree)
        c = {}
        for w, m in (coeffs or {}).items():
            w = tuple(int(a) for a in w)
            _check_word(w, self.g)
            if len(w) > self.max_degree:
                continue
            m = np.asarray(m, dtype=complex).reshape(self.rows, self.cols)
            if not np.any(m):
                continue
            c[w] = _freeze(m)
        self._c = c

    # construction helpers
    @classmethod
    def zero(cls, g, rows=1, cols=1, N=8):
        return cls(g, rows, cols, N)

    @classmethod
    def constant(cls, g, M, N=8):
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(g, M.shape[0], M.shape[1], N, {(): M})

    @classmethod
    def variable(cls, g, j, N=8, coeff=1.0):
        M = np.atleast_2d(np.asarray(coeff, dtype=complex))
        return cls(g, M.shape[0], M.shape[1], N, {(j,): M})

    @classmethod
    def linear(cls, mats, N=8):
        """Lambda(x) = sum_j mats[j] x_j."""
        mats = np.asarray(mats, dtype=complex)
        return cls(mats.shape[0], mats.shape[1], mats.shape[2], N,
                   {(j + 1,): mats[j] for j in range(mats.shape[0])})

    # access
    def coeff(self, w: Word) -> np.ndarray:
        m = self._c.get(tuple(w))
        if m is None:
            return np.zeros((self.rows, self.cols), dtype=complex)
        return m

    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def items(self):
        """Terms in graded-lex order."""
        return sorted(self._c.items(), key=lambda t: (len(t[0]), t[0]))

    def __len__(self):
        return len(self._c)

    def degree(self, tol: float = 0.0) -> int:
        """Largest word length with a coefficient above tol (-1 for zero)."""
        d = -1
        for w, m in self._c.items():
            if len(w) > d and np.abs(m).max() > tol:
                d = len(w)
        return d

    def homogeneous(self, k: int) -> "FreeSeries":
        return FreeSeries(self.g, self.rows, self.cols, self.max_degree,
                          {w: m for w, m in self._c.items() if len(w) == k})

    def truncate(self, N: int) -> "FreeSeries":
        return FreeSeries(self.g, self.rows, self.cols, min(N, self.max_degree), self._c)

    def with_degree(self, N: int) -> "FreeSeries":
        """Same coefficients, new truncation order (drops longer words)."""
        return FreeSeries(self.g, self.rows, self.cols, N, self._c)

    def adjoint_coeffs(self) -> "FreeSeries":
        """Series with coefficientwise conjugate transpose (same words)."""
        return FreeSeries(self.g, self.cols, self.rows, self.max_degree,
                          {w: m.conj().T for w, m in self._c.items()})

    def map_coeffs(self, fn, rows=None, cols=None) -> "FreeSeries":
        out = {w: fn(m) for w, m in self._c.items()}
        r = rows if rows is not None else self.rows
        c = cols if cols is not None else self.cols
        return FreeSeries(self.g, r, c, self.max_degree, out)

    # arithmetic
    def _compatible(self, other: "FreeSeries"):
        if self.g != other.g:
            raise VariableMismatch(f"g mismatch {self.g} vs {other.g}")

    def __add__(self, other):
        if not isinstance(other, FreeSeries):
            other = FreeSeries.constant(self.g, np.eye(self.rows) * other if np.isscalar(other) else other,
                                        self.max_degree)
        self._compatible(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeMismatch("coefficient shapes differ")
        N = min(self.max_degree, other.max_degree)
        out = {w: m for w, m in self._c.items() if len(w) <= N}
        for w, m in other._c.items():
            if len(w) <= N:
                out[w] = out[w] + m if w in out else m
        return FreeSeries(self.g, self.rows, self.cols, N, out)

    __radd__ = __add__

    def __neg__(self):
        return self.map_coeffs(lambda m: -m)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, FreeSeries):
            return series_mul(self, other)
        return self.map_coeffs(lambda m: m * other)

    def __rmul__(self, other):
        return self.map_coeffs(lambda m: other * m)

    def __matmul__(self, other):
        """Right multiplication of every coefficient by a constant matrix."""
        other = np.asarray(other, dtype=complex)
        return self.map_coeffs(lambda m: m @ other, cols=other.shape[1])

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=complex)
        return self.map_coeffs(lambda m: other @ m, rows=other.shape[0])

    def max_abs_diff(self, other: "FreeSeries", N: int | None = None) -> float:
        N = min(self.max_degree, other.max_degree) if N is None else N
        keys = {w for w in self._c if len(w) <= N} | {w for w in other._c if len(w) <= N}
        if not keys:
            return 0.0
        return float(max(np.abs(self.coeff(w) - other.coeff(w)).max() for w in keys))

    def max_coeff_norm(self) -> float:
        if not self._c:
            return 0.0
        return float(max(np.abs(m).max() for m in self._c.values()))

    def __repr__(self):
        terms = ", ".join(f"{word_str(w)}" for w, _ in self.items()[:6])
        more = "..." if len(self._c) > 6 else ""
        return f"FreeSeries(g={self.g}, {self.rows}x{self.cols}, N={self.max_degree}, [{terms}{more}])"

    # dense level arrays
    def levels(self, N: int | None = None) -> list[np.ndarray]:
        """Dense arrays L[k] of shape (g**k, rows, cols), k = 0..N."""
        N = self.max_degree if N is None else N
        out = [np.zeros((self.g**k, self.rows, self.cols), dtype=complex) for k in range(N + 1)]
        for w, m in self._c.items():
            if len(w) <= N:
                out[len(w)][index_in_level(w, self.g)] = m
        return out

    @classmethod
    def from_levels(cls, g: int, levels: Sequence[np.ndarray], tol: float = 0.0) -> "FreeSeries":
        N = len(levels) - 1
        rows, cols = levels[0].shape[1], levels[0].shape[2]
        out = {}
        for k, arr in enumerate(levels):
            arr = np.array(arr, dtype=complex)
            arr.setflags(write=False)
            nz = np.nonzero(np.abs(arr).reshape(arr.shape[0], -1).max(axis=1) > tol)[0]
            for i in nz:
                out[_word_from_index(int(i), k, g)] = arr[i]
        obj = cls.__new__(cls)
        obj.g, obj.rows, obj.cols, obj.max_degree, obj._c = int(g), int(rows), int(cols), int(N), out
        return obj


def _word_from_index(i: int, k: int, g: int) -> Word:
    letters = []
    for _ in range(k):
        i, r = divmod(i, g)
        letters.append(r + 1)
    return tuple(reversed(letters))


def series_mul(f: FreeSeries, h: FreeSeries) -> FreeSeries:
    """Cauchy product: (fh)_w = sum_{w=uv} f_u h_v, truncated at min degree."""
    if f.g != h.g:
        raise VariableMismatch(f"g mismatch {f.g} vs {h.g}")
    if f.cols != h.rows:
        raise ShapeMismatch(f"cannot multiply {f.rows}x{f.cols} by {h.rows}x{h.cols} coefficients")
    N = min(f.max_degree, h.max_degree)
    out: dict = {}
    hv = [(v, m) for v, m in h._c.items() if len(v) <= N]
    for u, a in f._c.items():
        room = N - len(u)
        if room < 0:
            continue
        for v, b in hv:
            if len(v) <= room:
                w = u + v
                p = a @ b
                out[w] = out[w] + p if w in out else p
    return FreeSeries(f.g, f.rows, h.cols, N, out)


def series_add_many(terms: Iterable[FreeSeries]) -> FreeSeries:
    terms = list(terms)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def geometric_inverse(lam: FreeSeries, N: int) -> FreeSeries:
    """Truncation of (I - Lambda)^{-1} for a homogeneous linear Lambda."""
    if lam.rows != lam.cols:
        raise ShapeMismatch("Lambda must have square coefficients")
    if any(len(w) != 1 for w in lam.coeffs):
        raise ValueError("geometric_inverse needs a homogeneous linear series")
    g, d = lam.g, lam.rows
    mats = np.array([lam.coeff((j,)) for j in range(1, g + 1)])
    levels = [np.eye(d, dtype=complex)[None]]
    for _ in range(N):
        levels.append(np.einsum("wab,jbc->wjac", levels[-1], mats).reshape(-1, d, d))
    return FreeSeries.from_levels(g, levels)


def eval_series(f: FreeSeries, X) -> np.ndarray:
    """sum_w f_w (x) X^w (the degree-N partial sum for genuine series)."""
    X = as_tuple(X)
    if X.shape[0] != f.g:
        raise VariableMismatch(f"series has g={f.g}, tuple has {X.shape[0]} matrices")
    n = X.shape[1]
    out = np.zeros((f.rows * n, f.cols * n), dtype=complex)
    if not len(f):
        return out
    cache: dict = {(): np.eye(n, dtype=complex)}

    def power(w):
        if w in cache:
            return cache[w]
        head = power(w[:-1])
        p = None if head is None else head @ X[w[-1] - 1]
        if p is not None and not p.any():
            p = None  # every extension of w vanishes as well
        cache[w] = p
        return p

    coefs, pows = [], []
    for w, m in f.items():
        p = power(w)
        if p is not None:
            coefs.append(m)
            pows.append(p)
    if not coefs:
        return out
    F = np.array(coefs).reshape(len(coefs), -1)
    P = np.array(pows).reshape(len(pows), -1)
    T = (F.T @ P).reshape(f.rows, f.cols, n, n)
    return T.transpose(0, 2, 1, 3).reshape(f.rows * n, f.cols * n)


def eval_row(fs: Sequence[FreeSeries], X) -> np.ndarray:
    """Evaluate a row of scalar series, returning a (len(fs), n, n) tuple."""
    return np.array([eval_series(f, X) for f in fs])


def formal_radius_estimate(f: FreeSeries, N: int | None = None) -> float:
    """(sum_{|a|=N} ||f_a||)^(-1/N); inf when the degree-N part vanishes."""
    N = f.max_degree if N is None else N
    s = sum(np.linalg.norm(m, 2) for w, m in f.coeffs.items() if len(w) == N)
    return float("inf") if s == 0 else float(s ** (-1.0 / N))


# dense batched products used by composition ------------------------------


def _batched_scalar_product(h_levels, F_levels, N, g):
    """Product of a scalar series h with a batch of series F, truncated at N.

    h_levels[a] has shape (g**a,); F_levels[b] has shape (B, g**b, *cs).
    Returns list of (B, g**L, *cs) for L = 0..N.
    """
    B = F_levels[0].shape[0]
    cs = F_levels[0].shape[2:]
    out = []
    for L in range(N + 1):
        acc = np.zeros((B, g**L) + cs, dtype=complex)
        for a in range(L + 1):
            b = L - a
            if a >= len(h_levels) or b >= len(F_levels):
                continue
            ha = h_levels[a]
            if not np.any(ha):
                continue
            Fb = F_levels[b]
            prod = ha[None, :, None, ...].reshape((1, g**a, 1) + (1,) * len(cs)) * Fb[:, None]
            acc += prod.reshape((B, g**L) + cs)
        out.append(acc)
    return out


def compose(f: FreeSeries, hs: Sequence[FreeSeries], N: int | None = None) -> FreeSeries:
    """Substitute scalar series hs (no constant term) into f, truncated at N.

    Uses a Horner scheme over word prefixes with dense level arrays, which is
    fast for the desk-scale degrees used here (g**N up to a few thousand).
    """
    if len(hs) != f.g:
        raise VariableMismatch(f"need {f.g} substituted series, got {len(hs)}")
    g2 = hs[0].g
    for h in hs:
        if h.g != g2 or (h.rows, h.cols) != (1, 1):
            raise ShapeMismatch("substituted series must be scalar with a common g")
        if np.any(h.coeff(())):
            raise ValueError("substituted series must have zero constant term")
    if N is None:
        N = min([f.max_degree] + [h.max_degree for h in hs])
    gf = f.g
    cs = (f.rows, f.cols)
    hl = [[lv[:, 0, 0] for lv in h.levels(N)] for h in hs]
    fl = f.levels(min(N, f.max_degree))
    # F at depth k: batch over prefixes u (g**k), series of degree <= N-k
    depth = min(N, f.max_degree)
    F = [fl[depth][:, None]]  # degree-0 series per prefix
    for k in range(depth - 1, -1, -1):
        D = N - k
        batch = gf**k
        pad = [np.zeros((batch, g2**L) + cs, dtype=complex) for L in range(D + 1)]
        pad[0][:, 0] = fl[k]
        child = [lv.reshape((batch, gf) + lv.shape[1:]) for lv in F]
        for j in range(gf):
            Fj = [c[:, j] for c in child]
            prod = _batched_scalar_product(hl[j][: D + 1], Fj, D, g2)
            for L in range(D + 1):
                pad[L] += prod[L]
        F = pad
    levels = [lv[0] for lv in F]
    while len(levels) < N + 1:
        levels.append(np.zeros((g2 ** len(levels),) + cs, dtype=complex))
    return FreeSeries.from_levels(g2, levels)


def compose_row(fs: Sequence[FreeSeries], hs: Sequence[FreeSeries], N=None) -> list[FreeSeries]:
    return [compose(f, hs, N) for f in fs]


def identity_row(g: int, N: int) -> list[FreeSeries]:
    return [FreeSeries.variable(g, j, N) for j in range(1, g + 1)]


def row_diff(ps: Sequence[FreeSeries], qs: Sequence[FreeSeries], N=None) -> float:
    return max(p.max_abs_diff(q, N) for p, q in zip(ps, qs))


# ---------------------------------------------------------------------------
# hereditary polynomials


class HereditaryPoly:
    """Finite sum of terms c_{v,w} v* w with square matrix coefficients."""

    __slots__ = ("g", "size", "_c")

    def __init__(self, g: int, size: int, coeffs: Mapping[tuple, object] | None = None):
        self.g, self.size = int(g), int(size)
        c = {}
        for (v, w), m in (coeffs or {}).items():
            v, w = tuple(v), tuple(w)
            _check_word(v, self.g)
            _check_word(w, self.g)
            m = np.asarray(m, dtype=complex).reshape(self.size, self.size)
            if np.any(m):
                c[(v, w)] = _freeze(c[(v, w)] + m if (v, w) in c else m)
        self._c = c

    @classmethod
    def from_analytic(cls, f: FreeSeries) -> "HereditaryPoly":
        if f.rows != f.cols:
            raise ShapeMismatch("hereditary coefficients must be square")
        return cls(f.g, f.rows, {((), w): m for w, m in f.coeffs.items()})

    @classmethod
    def from_pencil(cls, A) -> "HereditaryPoly":
        """The hereditary polynomial L_A = I + sum A_j x_j + sum A_j* x_j*."""
        A = np.asarray(A, dtype=complex)
        g, d = A.shape[0], A.shape[1]
        c = {((), ()): np.eye(d)}
        for j in range(g):
            c[((), (j + 1,))] = A[j]
            c[((j + 1,), ())] = A[j].conj().T
        return cls(g, d, c)

    def coeff(self, v, w) -> np.ndarray:
        m = self._c.get((tuple(v), tuple(w)))
        return np.zeros((self.size, self.size), dtype=complex) if m is None else m

    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def items(self):
        return sorted(self._c.items(), key=lambda t: (len(t[0][0]) + len(t[0][1]), t[0]))

    def degree(self) -> int:
        return max((len(v) + len(w) for v, w in self._c), default=-1)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        keys = set(self._c) | {(w, v) for v, w in self._c}
        return all(np.abs(self.coeff(v, w) - self.coeff(w, v).conj().T).max() <= tol for v, w in keys)

    def __add__(self, other: "HereditaryPoly"):
        c = dict(self._c)
        for k, m in other._c.items():
            c[k] = c[k] + m if k in c else m
        return HereditaryPoly(self.g, self.size, c)

    def __sub__(self, other):
        return self + HereditaryPoly(other.g, other.size, {k: -m for k, m in other._c.items()})

    def evaluate(self, X) -> np.ndarray:
        X = as_tuple(X, self.g)
        n = X.shape[1]
        out = np.zeros((self.size * n, self.size * n), dtype=complex)
        for (v, w), m in self._c.items():
            out += np.kron(m, eval_word(v, X).conj().T @ eval_word(w, X))
        return out


def compose_polynomial(f: FreeSeries, hs: Sequence[FreeSeries], N: int) -> FreeSeries:
    """Substitute scalar polynomials hs (constant terms allowed) into f, truncated at N.

    Exact when f is a polynomial and deg(f) * max deg(hs) <= N.
    """
    if len(hs) != f.g:
        raise VariableMismatch(f"need {f.g} substituted series, got {len(hs)}")
    g2 = hs[0].g
    hs = [h.with_degree(N) for h in hs]
    one = FreeSeries.constant(g2, 1.0, N)
    cache: dict = {(): one}

    def power(w):
        p = cache.get(w)
        if p is None:
            p = series_mul(power(w[:-1]), hs[w[-1] - 1])
            cache[w] = p
        return p

    out = FreeSeries(g2, f.rows, f.cols, N)
    for w, m in f.items():
        out = out + power(w).map_coeffs(lambda c, m=m: m * c[0, 0], rows=f.rows, cols=f.cols)
    return out
