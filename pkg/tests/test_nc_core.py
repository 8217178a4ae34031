import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freespectra.errors import ShapeMismatch, VariableMismatch
from freespectra.nc_core import (FreeSeries, HereditaryPoly, as_tuple, compose, compose_polynomial,
                                 direct_sum, eval_series, eval_word, fock_shift_tuple, formal_radius_estimate,
                                 geometric_inverse, joint_spectral_radius, level_offset, random_nilpotent_tuple,
                                 series_mul, word_count, word_index, word_products, words)
from freespectra.util import make_rng

seeds = st.integers(0, 2**31 - 1)


def random_series(rng, g, N, rows=1, cols=1, density=0.6):
    coeffs = {}
    for w in words(g, N):
        if rng.uniform() < density:
            coeffs[w] = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return FreeSeries(g, rows, cols, N, coeffs)


def naive_eval(f, X):
    n = X.shape[1]
    out = np.zeros((f.rows * n, f.cols * n), dtype=complex)
    for w, m in f.coeffs.items():
        P = np.eye(n)
        for a in w:
            P = P @ X[a - 1]
        out += np.kron(m, P)
    return out


# words -------------------------------------------------------------------


def test_word_counts_and_order():
    assert word_count(2, 3) == 15
    assert word_count(1, 4) == 5
    ws = list(words(2, 2))
    assert ws == [(), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert [word_index(w, 2) for w in ws] == list(range(7))
    assert level_offset(3, 2) == 4


# eval_word ---------------------------------------------------------------


def test_eval_word_examples():
    X = np.array([[[0, 1], [0, 0]], [[0, 0], [1, 0]]], dtype=complex)
    assert np.array_equal(eval_word((), X), np.eye(2))
    assert np.array_equal(eval_word((1, 2), X), np.array([[1, 0], [0, 0]]))
    assert not eval_word((1, 1), X).any()


def test_eval_word_rejects_bad_letter():
    with pytest.raises(VariableMismatch):
        eval_word((3,), np.zeros((2, 2, 2)))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_eval_word_multiplicative(seed, g, n):
    rng = make_rng(seed)
    X = rng.standard_normal((g, n, n)) + 1j * rng.standard_normal((g, n, n))
    u = tuple(rng.integers(1, g + 1, size=rng.integers(0, 4)))
    v = tuple(rng.integers(1, g + 1, size=rng.integers(0, 4)))
    assert np.allclose(eval_word(u + v, X), eval_word(u, X) @ eval_word(v, X), atol=1e-12)


def test_word_products_match_eval_word():
    rng = make_rng(1)
    X = rng.standard_normal((2, 3, 3))
    P = word_products(X, 3)
    for k in range(4):
        for i, w in enumerate(w for w in words(2, 3) if len(w) == k):
            assert np.allclose(P[k][i], eval_word(w, X))


def test_as_tuple_shapes():
    assert as_tuple([1.0, 2.0]).shape == (2, 1, 1)
    with pytest.raises(ShapeMismatch):
        as_tuple(np.zeros((2, 2, 3)))
    with pytest.raises(VariableMismatch):
        as_tuple(np.zeros((2, 2, 2)), 3)


# eval_series ---------------------------------------------------------------


def test_eval_series_examples():
    rng = make_rng(2)
    X = rng.standard_normal((2, 2, 2))
    assert np.allclose(eval_series(FreeSeries.variable(2, 1), X), X[0])
    N1 = np.array([[0, 1], [0, 0]], dtype=complex)
    Xn = np.array([N1, rng.standard_normal((2, 2))])
    p2 = FreeSeries(2, 1, 1, 4, {(2,): 1, (1, 1): 1})
    assert np.allclose(eval_series(p2, Xn), Xn[1])
    f = FreeSeries(1, 1, 1, 2, {(): 1, (1,): 1})
    assert np.array_equal(eval_series(f, np.zeros((1, 2, 2))), np.eye(2))


def test_eval_series_variable_mismatch():
    with pytest.raises(VariableMismatch):
        eval_series(FreeSeries.variable(2, 1), np.zeros((3, 2, 2)))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 2), st.integers(1, 2))
def test_eval_series_matches_naive_kronecker_sum(seed, g, n, rows, cols):
    rng = make_rng(seed)
    f = random_series(rng, g, 3, rows, cols)
    X = rng.standard_normal((g, n, n)) + 1j * rng.standard_normal((g, n, n))
    assert np.allclose(eval_series(f, X), naive_eval(f, X), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_eval_series_linear(seed):
    rng = make_rng(seed)
    f, h = random_series(rng, 2, 3), random_series(rng, 2, 3)
    X = rng.standard_normal((2, 3, 3))
    c = 0.3 - 1.2j
    assert np.allclose(eval_series(f + c * h, X), eval_series(f, X) + c * eval_series(h, X), atol=1e-10)


# series_mul ----------------------------------------------------------------


def test_series_mul_examples():
    x1, x2 = FreeSeries.variable(2, 1, 3), FreeSeries.variable(2, 2, 3)
    assert series_mul(x1, x2).coeffs.keys() == {(1, 2)}
    one_x = FreeSeries(2, 1, 1, 3, {(): 1, (1,): 1})
    sq = series_mul(one_x, one_x)
    assert sq.max_abs_diff(FreeSeries(2, 1, 1, 3, {(): 1, (1,): 2, (1, 1): 1})) == 0


def test_series_mul_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        series_mul(FreeSeries.zero(2, 1, 2), FreeSeries.zero(2, 3, 1))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_series_mul_is_evaluation_product_on_nilpotents(seed, g):
    rng = make_rng(seed)
    N = 4
    f, h = random_series(rng, g, N, 2, 2), random_series(rng, g, N, 2, 1)
    X = random_nilpotent_tuple(g, N + 1, rng)
    lhs = eval_series(series_mul(f, h), X)
    rhs = eval_series(f, X) @ eval_series(h, X)
    assert np.abs(lhs - rhs).max() < 1e-12 * max(1.0, np.abs(rhs).max())


# geometric_inverse --------------------------------------------------------


def test_geometric_inverse_examples():
    zero = FreeSeries(2, 2, 2, 3, {})
    assert geometric_inverse(zero, 3).max_abs_diff(FreeSeries.constant(2, np.eye(2), 3)) == 0
    x = FreeSeries.variable(1, 1, 3)
    expect = FreeSeries(1, 1, 1, 3, {(): 1, (1,): 1, (1, 1): 1, (1, 1, 1): 1})
    assert geometric_inverse(x, 3).max_abs_diff(expect) == 0


def test_geometric_inverse_type_ii_product():
    from freespectra import catalog

    R = catalog.get("g2.II").R
    inv = geometric_inverse(FreeSeries.linear(R, 2), 2)
    assert np.allclose(inv.coeff((1, 2)), R[0] @ R[1])
    assert np.allclose(inv.coeff((1, 2)), R[1])


def test_geometric_inverse_rejects_nonlinear():
    with pytest.raises(ValueError):
        geometric_inverse(FreeSeries(1, 1, 1, 3, {(): 1, (1,): 1}), 3)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_geometric_inverse_inverts_on_nilpotents(seed):
    rng = make_rng(seed)
    mats = rng.standard_normal((2, 2, 2))
    N = 4
    inv = geometric_inverse(FreeSeries.linear(mats, N), N)
    X = random_nilpotent_tuple(2, N + 1, rng)
    lam = sum(np.kron(mats[j], X[j]) for j in range(2))
    assert np.allclose(eval_series(inv, X) @ (np.eye(lam.shape[0]) - lam), np.eye(lam.shape[0]), atol=1e-10)


# spectral radius ----------------------------------------------------------


def test_joint_spectral_radius_examples():
    rng = make_rng(3)
    X = random_nilpotent_tuple(2, 3, rng)
    assert joint_spectral_radius(X, 3) == 0
    assert joint_spectral_radius(np.array([[[2.5j]]]), 5) == pytest.approx(2.5)
    Y = np.array([[[0, 2], [0, 0]], [[0, 0], [2, 0]]], dtype=complex)
    assert joint_spectral_radius(Y, 4) == pytest.approx(2.0)


def test_formal_radius_estimate_geometric():
    x = FreeSeries.variable(1, 1, 6, coeff=0.5)
    f = geometric_inverse(x, 6)
    assert formal_radius_estimate(f) == pytest.approx(2.0)


# Fock shifts ---------------------------------------------------------------


def test_fock_examples():
    S = fock_shift_tuple(1, 1)
    assert np.array_equal(S[0], np.array([[0, 0], [1, 0]]))
    S = fock_shift_tuple(2, 1)
    assert S.shape == (2, 3, 3)
    assert all(not (S[j] @ S[k]).any() for j in range(2) for k in range(2))
    S = fock_shift_tuple(2, 2)
    e = np.eye(7)
    assert np.array_equal(S[0] @ e[:, word_index((), 2)], e[:, word_index((1,), 2)])
    assert np.array_equal(S[1] @ e[:, word_index((1,), 2)], e[:, word_index((2, 1), 2)])


@pytest.mark.parametrize("g,N", [(1, 3), (2, 2), (2, 3), (3, 2)])
def test_fock_nilpotent_of_exact_order(g, N):
    S = fock_shift_tuple(g, N)
    top = word_products(S, N + 1)
    assert any(np.any(P) for P in top[N])
    assert not np.any(top[N + 1])


@pytest.mark.parametrize("g,N", [(2, 3), (3, 2)])
def test_fock_vacuum_creates_words(g, N):
    S = fock_shift_tuple(g, N)
    e0 = np.eye(S.shape[1])[:, 0]
    for w in words(g, N):
        # S^w e_0 = e_w, so the vacuum column reads off every coefficient
        v = eval_word(w, S) @ e0
        assert v[word_index(w, g)] == 1 and np.abs(v).sum() == 1


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_fock_faithfulness(seed, g, N):
    rng = make_rng(seed)
    f = random_series(rng, g, N, 2, 1)
    S = fock_shift_tuple(g, N)
    dim = S.shape[1]
    F = eval_series(f, S)
    vac = np.kron(np.eye(f.cols), np.eye(dim)[:, :1])
    col = F @ vac  # reshape gives the coefficient list back
    rebuilt = col.reshape(f.rows, dim, f.cols)
    for w in words(g, N):
        assert np.allclose(rebuilt[:, word_index(w, g), :], f.coeff(w))
    if np.abs(col).max() <= 1e-12:
        assert f.max_coeff_norm() <= 1e-12


def test_fock_vacuum_zero_forces_zero_series():
    f = FreeSeries(2, 1, 1, 2, {})
    S = fock_shift_tuple(2, 2)
    assert not (eval_series(f, S)[:, 0]).any()


# composition ---------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_compose_matches_evaluation(seed, g):
    rng = make_rng(seed)
    N = 4
    f = random_series(rng, g, N)
    hs = [random_series(rng, g, N) for _ in range(g)]
    hs = [h - FreeSeries.constant(g, h.coeff(()), N) for h in hs]
    X = random_nilpotent_tuple(g, N + 1, rng, scale=0.7)
    Y = np.array([eval_series(h, X) for h in hs])
    lhs = eval_series(compose(f, hs, N), X)
    assert np.allclose(lhs, eval_series(f, Y), atol=1e-9)


def test_compose_rejects_constant_terms():
    x = FreeSeries.variable(1, 1, 3)
    with pytest.raises(ValueError):
        compose(x, [x + 1.0], 3)


def test_compose_polynomial_with_constants():
    x1, x2 = FreeSeries.variable(2, 1, 4), FreeSeries.variable(2, 2, 4)
    f = series_mul(x1, x2)
    out = compose_polynomial(f, [x1 + 1.0, x2 - 2.0], 4)
    expect = FreeSeries(2, 1, 1, 4, {(): -2, (2,): 1, (1,): -2, (1, 2): 1})
    assert out.max_abs_diff(expect) < 1e-14


# series arithmetic and structure --------------------------------------------


def test_series_drops_zero_and_high_degree_terms():
    f = FreeSeries(2, 1, 1, 2, {(1,): 0, (1, 2, 1): 5, (2,): 1})
    assert set(f.coeffs) == {(2,)}
    assert f.degree() == 1


def test_series_is_immutable():
    f = FreeSeries.variable(2, 1)
    with pytest.raises(ValueError):
        f.coeff((1,))[0, 0] = 7


def test_levels_roundtrip():
    rng = make_rng(4)
    f = random_series(rng, 2, 3, 2, 3)
    assert FreeSeries.from_levels(2, f.levels()).max_abs_diff(f) == 0


def test_direct_sum_blocks():
    rng = make_rng(5)
    X, Y = rng.standard_normal((2, 2, 2)), rng.standard_normal((2, 3, 3))
    Z = direct_sum(X, Y)
    assert np.array_equal(Z[:, :2, :2], X) and np.array_equal(Z[:, 2:, 2:], Y)
    assert not Z[:, :2, 2:].any()


# hereditary polynomials ----------------------------------------------------


def test_hereditary_symmetry_and_analytic_embedding():
    A = np.array([[[0, 1], [0, 0]]], dtype=complex)
    L = HereditaryPoly.from_pencil(A)
    assert L.is_symmetric()
    f = FreeSeries(1, 2, 2, 2, {(1,): np.eye(2)})
    h = HereditaryPoly.from_analytic(f)
    assert all(v == () for v, _ in h.coeffs)
    assert not h.is_symmetric()


def test_hereditary_evaluate_pencil():
    A = np.array([[[0, 1], [0, 0]]], dtype=complex)
    z = 0.4 + 0.3j
    out = HereditaryPoly.from_pencil(A).evaluate(np.array([[[z]]]))
    assert np.allclose(out, [[1, z], [np.conj(z), 1]])
