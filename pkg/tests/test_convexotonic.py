import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freespectra import catalog
from freespectra.errors import DependentBasisError, NotAModuleError, OutsideDomainError, ShapeMismatch
from freespectra.convexotonic import (ball_tuple, change_basis, composition_probe, direct_sum_xi, embed_tuple,
                                      example_shift_tuple, is_convexotonic, linear_substitution, map_eval,
                                      map_series, module_residual, nilpotency_and_degree, shift_matrix,
                                      structure_matrices, verify_inverse_pair)
from freespectra.nc_core import FreeSeries, eval_series, identity_row, random_nilpotent_tuple, row_diff, word_products
from freespectra.util import make_rng

TYPE_I = np.array([[[0, 1], [0, 0]], [[0, 0], [0, 0]]], dtype=complex)
seeds = st.integers(0, 2**31 - 1)
ALL_IDS = catalog.FIXED_IDS


def entry(eid):
    return catalog.get(eid, alpha=0.5) if eid == "g3.02" else catalog.get(eid)


def poly(g, terms, N=8):
    return FreeSeries(g, 1, 1, N, terms)


# is_convexotonic --------------------------------------------------------------


def test_is_convexotonic_examples():
    assert is_convexotonic(np.zeros((2, 2, 2))).max_residual == 0
    assert is_convexotonic(TYPE_I).passed
    assert is_convexotonic(ball_tuple([0.5, 0])).passed


def test_is_convexotonic_rejects_random_tuple():
    X = make_rng(0).standard_normal((2, 2, 2))
    assert not is_convexotonic(X).passed


def test_is_convexotonic_shape_error():
    with pytest.raises(ShapeMismatch):
        is_convexotonic(np.zeros((2, 3, 3)))


@pytest.mark.parametrize("eid", ALL_IDS)
def test_extended_identity_through_words_of_length_four(eid):
    assert module_residual(entry(eid).Xi, 4) < 1e-12


# structure matrices -------------------------------------------------------------


def test_structure_matrices_type_ii():
    R = np.array([[[1, 0], [0, 0]], [[0, 1], [0, 0]]], dtype=complex)
    Xi = structure_matrices(R, R)
    assert np.allclose(Xi, R)


def test_structure_matrices_shift_powers():
    S = shift_matrix(4)
    R = np.array([np.linalg.matrix_power(S, j) for j in (1, 2, 3)])
    Xi = structure_matrices(R, R)
    assert np.allclose(Xi, example_shift_tuple(3))


def test_structure_matrices_from_embedding():
    assert np.allclose(structure_matrices(embed_tuple(TYPE_I), embed_tuple(TYPE_I)), TYPE_I)


def test_structure_matrices_errors():
    R = np.array([[[1, 0], [0, 0]], [[2, 0], [0, 0]]], dtype=complex)
    with pytest.raises(DependentBasisError):
        structure_matrices(R, R)
    R = np.array([[[0, 1], [0, 0]], [[0, 0], [1, 0]]], dtype=complex)  # products leave the span
    with pytest.raises(NotAModuleError):
        structure_matrices(R, R)


def test_embed_zero_tuple():
    R = embed_tuple(np.zeros((2, 2, 2)))
    assert R.shape == (2, 3, 3)
    assert R[0, 0, 1] == 1 and R[1, 0, 2] == 1
    assert not np.einsum("iab,jbc->ijac", R, R).any()


@pytest.mark.parametrize("eid", ALL_IDS)
def test_embed_roundtrip_catalog(eid):
    Xi = entry(eid).Xi
    R = embed_tuple(Xi)
    assert np.abs(structure_matrices(R, R) - Xi).max() < 1e-12


def test_embed_roundtrip_ball():
    Xi = ball_tuple([0.3 + 0.1j, -0.2])
    R = embed_tuple(Xi)
    assert np.abs(structure_matrices(R, R) - Xi).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_structure_matrices_are_convexotonic(seed):
    # a random subalgebra: span of a random similarity of a catalog algebra
    rng = make_rng(seed)
    e = entry(ALL_IDS[rng.integers(len(ALL_IDS))])
    d = e.R.shape[1]
    T = rng.standard_normal((d, d)) + np.eye(d) * 3
    R = np.linalg.solve(T, e.R @ T)
    Xi = structure_matrices(R, R)
    assert is_convexotonic(Xi, 1e-9).passed
    assert np.abs(Xi - e.Xi).max() < 1e-8


# maps ----------------------------------------------------------------------------


def test_map_series_zero_tuple():
    p, q = map_series(np.zeros((2, 2, 2)), 4)
    assert row_diff(p, identity_row(2, 4)) == 0 and row_diff(q, identity_row(2, 4)) == 0


def test_map_series_type_i():
    p, q = map_series(TYPE_I, 6)
    assert row_diff(p, [poly(2, {(1,): 1}, 6), poly(2, {(2,): 1, (1, 1): 1}, 6)]) == 0
    assert row_diff(q, [poly(2, {(1,): 1}, 6), poly(2, {(2,): 1, (1, 1): -1}, 6)]) == 0


def test_map_series_type_iv_geometric_form():
    # p = (x1 (1-x1)^-1, (1-x1)^-1 x2 (1-x1)^-1)
    N = 5
    p, _ = map_series(catalog.get("g2.IV").Xi, N)
    p1 = poly(2, {(1,) * k: 1 for k in range(1, N + 1)}, N)
    p2 = poly(2, {(1,) * a + (2,) + (1,) * b: 1 for a in range(N) for b in range(N) if a + b + 1 <= N}, N)
    assert row_diff(p, [p1, p2]) == 0


def test_map_series_warns_on_non_convexotonic():
    with pytest.warns(UserWarning):
        map_series(make_rng(1).standard_normal((2, 2, 2)), 2)


def test_map_eval_examples():
    assert not map_eval(TYPE_I, np.zeros((2, 2, 2))).any()
    assert np.allclose(map_eval(TYPE_I, [1, 2]).ravel(), [1, 3])
    assert np.allclose(map_eval(catalog.get("g2.II").Xi, [0.5, 1]).ravel(), [1, 2])


def test_map_eval_outside_domain():
    with pytest.raises(OutsideDomainError):
        map_eval(catalog.get("g2.II").Xi, [1.0, 0.0])


@pytest.mark.parametrize("eid", ALL_IDS)
def test_series_and_resolvent_agree_on_nilpotents(eid):
    Xi = entry(eid).Xi
    g = Xi.shape[0]
    N = 5
    rng = make_rng(3)
    p, q = map_series(Xi, N)
    X = random_nilpotent_tuple(g, N + 1, rng, scale=0.6)
    assert np.abs(np.array([eval_series(f, X) for f in p]) - map_eval(Xi, X)).max() < 1e-12
    assert np.abs(np.array([eval_series(f, X) for f in q]) - map_eval(Xi, X, inverse=True)).max() < 1e-12


def test_verify_inverse_pair_examples():
    rep = verify_inverse_pair(np.zeros((2, 2, 2)), N=4, samples=5)
    assert rep.passed and rep.series_residual == 0
    for eid in ("g2.I", "g2.II", "g2.III", "g2.IV"):
        assert verify_inverse_pair(catalog.get(eid).Xi, N=8, samples=20).passed
    assert verify_inverse_pair(ball_tuple([0.5, 0]), N=8, samples=20).passed


# nilpotency ---------------------------------------------------------------------


def test_nilpotency_examples():
    rep = nilpotency_and_degree(TYPE_I)
    assert (rep.nilpotent, rep.order, rep.degree_p) == (True, 2, 2)
    rep = nilpotency_and_degree(example_shift_tuple(3))
    assert (rep.order, rep.degree_p) == (3, 3)
    assert not nilpotency_and_degree(catalog.get("g2.II").Xi).nilpotent


@pytest.mark.parametrize("eid", ALL_IDS)
def test_annihilation_transfers_to_xi(eid):
    e = entry(eid)
    for RP, XP in zip(word_products(e.R, 4), word_products(e.Xi, 4)):
        dead = np.abs(RP).reshape(RP.shape[0], -1).max(axis=1) < 1e-14
        assert np.abs(XP[dead]).max(initial=0) < 1e-12


# direct sums and change of basis -----------------------------------------------


def test_direct_sum_type_i():
    Xi = direct_sum_xi(TYPE_I, TYPE_I)
    assert is_convexotonic(Xi).passed
    p, _ = map_series(Xi, 4)
    expect = [poly(4, {(1,): 1}, 4), poly(4, {(2,): 1, (1, 1): 1}, 4),
              poly(4, {(3,): 1}, 4), poly(4, {(4,): 1, (3, 3): 1}, 4)]
    assert row_diff(p, expect) == 0


def test_direct_sum_with_zero_pads_identity():
    Xi = direct_sum_xi(catalog.get("g2.II").Xi, np.zeros((1, 1, 1)))
    p, _ = map_series(Xi, 4)
    assert p[2].max_abs_diff(poly(3, {(3,): 1}, 4)) == 0


def test_direct_sum_commutes_with_map_series():
    a, b = catalog.get("g2.IV").Xi, catalog.get("g2.III").Xi
    p, _ = map_series(direct_sum_xi(a, b), 4)
    pa, _ = map_series(a, 4)
    pb, _ = map_series(b, 4)
    relabel = {1: 3, 2: 4}
    shifted = [FreeSeries(4, 1, 1, 4, {tuple(relabel[x] for x in w): m for w, m in f.coeffs.items()}) for f in pb]
    lifted = [FreeSeries(4, 1, 1, 4, f.coeffs) for f in pa]
    assert row_diff(p, lifted + shifted) == 0


def test_change_basis_examples():
    assert np.allclose(change_basis(TYPE_I, np.eye(2)), TYPE_I)
    swap = np.array([[0, 1], [1, 0]])
    p, _ = map_series(change_basis(TYPE_I, swap), 4)
    assert row_diff(p, [poly(2, {(1,): 1, (2, 2): 1}, 4), poly(2, {(2,): 1}, 4)]) == 0
    Xi = catalog.get("g2.IV").Xi
    assert np.allclose(change_basis(Xi, 2.5 * np.eye(2)), 2.5 * Xi)
    with pytest.raises(ShapeMismatch):
        change_basis(Xi, np.ones((2, 2)))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_change_basis_matches_substitution(seed):
    rng = make_rng(seed)
    e = entry(ALL_IDS[rng.integers(len(ALL_IDS))])
    g = e.g
    M = rng.standard_normal((g, g)) + 2 * np.eye(g)
    Xt = change_basis(e.Xi, M)
    assert is_convexotonic(Xt, 1e-9).passed
    N = 4
    p, _ = map_series(e.Xi, N)
    pt, _ = map_series(Xt, N)
    assert row_diff(pt, linear_substitution(p, M, N)) < 1e-9


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_change_basis_group_action(seed):
    rng = make_rng(seed)
    Xi = entry(ALL_IDS[rng.integers(len(ALL_IDS))]).Xi
    g = Xi.shape[0]
    M1 = rng.standard_normal((g, g)) + 2 * np.eye(g)
    M2 = rng.standard_normal((g, g)) + 2 * np.eye(g)
    lhs = change_basis(change_basis(Xi, M1), M2)
    assert np.abs(lhs - change_basis(Xi, M2 @ M1)).max() < 1e-12 * max(1, np.abs(lhs).max())


# composition ------------------------------------------------------------------


def test_composition_of_zero_tuples_is_identity():
    rep = composition_probe(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), 4)
    assert rep.convexotonic and row_diff(rep.composite, identity_row(2, 4)) == 0


def test_composition_ball_is_report_only():
    v = ball_tuple([0.3, 0.1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = composition_probe(v, v, 6)
    assert isinstance(rep.convexotonic, bool) and rep.reason
