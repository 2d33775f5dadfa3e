import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxlinf import (
    project_l1_ball,
    project_simplex,
    prox_linf_dc,
    prox_linf_moreau,
    prox_linf_sort,
    psi_eval,
    sigma_t,
    simplex_threshold,
)
from proxlinf.prox import PROX_ALGORITHMS

from .oracles import golden_min, objective_at, simplex_qp

finite = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 30), elements=finite)
alphas = st.floats(0, 30, allow_nan=False)


@pytest.mark.parametrize("x_k,t,want", [(3.0, 2.0, 2.0), (-3.0, 2.0, -2.0), (1.0, 2.0, 1.0)])
def test_sigma_examples(x_k, t, want):
    assert sigma_t(x_k, t) == want


@pytest.mark.parametrize("x_k,t", [(1.0, -1.0), (math.nan, 1.0), (1.0, math.inf)])
def test_sigma_rejects(x_k, t):
    with pytest.raises(ValueError):
        sigma_t(x_k, t)


def test_psi_examples():
    assert psi_eval([3, -1], 1, 2) == (2.0, 2.5, 0.0, 1)
    assert psi_eval([3, -1], 1, 0) == (0.0, 5.0, -3.0, 2)


@given(vectors, alphas, st.floats(0, 10))
def test_psi_beyond_max_is_linear(x, alpha, extra):
    t = float(np.abs(x).max()) + 1 + extra
    r = psi_eval(x, alpha, t)
    assert r.value == pytest.approx(alpha * t) and r.derivative == alpha and r.active_count == 0


@given(vectors, alphas, st.floats(0, 25))
def test_psi_value_matches_clip_objective(x, alpha, t):
    t = min(t, float(np.abs(x).max()))
    assert psi_eval(x, alpha, t).value == pytest.approx(float(objective_at(x, alpha, t)), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("algorithm", sorted(PROX_ALGORITHMS))
@pytest.mark.parametrize(
    "x,alpha,prox,tau",
    [
        ([3.0, -1.0], 1.0, [2.0, -1.0], 2.0),
        ([1.0, 1.0, 1.0], 4.0, [0.0, 0.0, 0.0], 0.0),
        ([2.0, -2.0], 1.0, [1.5, -1.5], 1.5),
    ],
)
def test_prox_examples(algorithm, x, alpha, prox, tau):
    r = PROX_ALGORITHMS[algorithm](np.array(x), alpha)
    assert r.tau == tau
    np.testing.assert_array_equal(r.prox, prox)


def test_prox_examples_match_golden_section():
    for x, alpha in [([3.0, -1.0], 1.0), ([2.0, -2.0], 1.0)]:
        x = np.array(x)
        r = prox_linf_sort(x, alpha)
        ref = golden_min(x, alpha, 0.0, float(np.abs(x).max()))
        assert float(objective_at(x, alpha, r.tau)) <= ref + 1e-12


def test_dc_zero_vector():
    r = prox_linf_dc(np.zeros(3), 0.5)
    assert r.tau == 0.0 and not r.prox.any()


def test_alpha_zero_is_identity():
    x = np.array([1.5, -4.0, 2.0])
    for f in (prox_linf_sort, prox_linf_dc):
        r = f(x, 0.0)
        np.testing.assert_array_equal(r.prox, x)
        assert r.tau == 4.0


@pytest.mark.parametrize("f", [prox_linf_sort, prox_linf_dc, prox_linf_moreau])
@pytest.mark.parametrize(
    "x,alpha,err",
    [([], 1.0, ValueError), ([1.0, math.nan], 1.0, ValueError), ([1.0], -1.0, ValueError), ([[1.0]], 1.0, ValueError)],
)
def test_prox_rejects(f, x, alpha, err):
    with pytest.raises(err):
        f(x, alpha)


def test_moreau_rejects_zero_alpha():
    with pytest.raises(ValueError):
        prox_linf_moreau([1.0], 0.0)


def test_inputs_not_mutated():
    x = np.array([3.0, -1.0, 0.5])
    keep = x.copy()
    for f in PROX_ALGORITHMS.values():
        r = f(x, 1.0)
        r.prox[:] = 0
    np.testing.assert_array_equal(x, keep)


@given(vectors, alphas)
def test_prox_result_invariants(x, alpha):
    r = prox_linf_sort(x, alpha)
    a = np.abs(x)
    assert r.tau >= 0
    assert r.tau <= a.max()
    assert abs(r.tau - np.abs(r.prox).max()) <= 1e-12 * max(1.0, r.tau)
    assert (np.abs(r.prox) <= r.tau).all()
    assert ((np.sign(r.prox) == np.sign(x)) | (r.prox == 0)).all()


@given(vectors, alphas)
def test_first_order_condition(x, alpha):
    r = prox_linf_sort(x, alpha)
    if r.tau > 0:
        assert abs(psi_eval(x, alpha, r.tau).derivative) <= 1e-9 * max(1.0, float(np.abs(x).sum()))


@given(vectors, alphas)
def test_zero_iff_small(x, alpha):
    assert (prox_linf_sort(x, alpha).tau == 0) == (float(np.abs(x).sum()) <= alpha)


@given(vectors, alphas, st.randoms(use_true_random=False))
def test_permutation_invariance(x, alpha, rnd):
    perm = list(range(x.size))
    rnd.shuffle(perm)
    assert prox_linf_sort(x[perm], alpha).tau == prox_linf_sort(x, alpha).tau


@given(vectors, alphas, st.integers(0, 2**32 - 1))
def test_dc_matches_sort(x, alpha, seed):
    a, b = prox_linf_sort(x, alpha), prox_linf_dc(x, alpha, seed=seed)
    assert a.tau == b.tau
    np.testing.assert_array_equal(a.prox, b.prox)


@given(vectors, st.floats(0.01, 30))
def test_moreau_matches_sort(x, alpha):
    a, b = prox_linf_sort(x, alpha), prox_linf_moreau(x, alpha)
    np.testing.assert_allclose(b.prox, a.prox, rtol=0, atol=1e-12 * max(1.0, float(np.abs(x).max())))


def test_duplicate_magnitudes():
    x = np.array([2.0, -2.0, 2.0, 1.0, -1.0, 0.5])
    for alpha in (0.5, 1.0, 3.0, 4.0, 5.5):
        taus = {f(x, alpha).tau for f in (prox_linf_sort, prox_linf_dc)}
        assert len(taus) == 1
        t = taus.pop()
        ref = golden_min(x, alpha, 0.0, 2.0)
        assert float(objective_at(x, alpha, t)) <= ref + 1e-12


@pytest.mark.parametrize(
    "x,alpha,want", [([0.5, 0.5], 1.0, [0.5, 0.5]), ([2.0, 0.0], 1.0, [1.0, 0.0]), ([3.0, 1.0], 2.0, [2.0, 0.0])]
)
def test_simplex_examples(x, alpha, want):
    np.testing.assert_allclose(project_simplex(x, alpha), want, atol=1e-15)
    np.testing.assert_allclose(simplex_qp(x, alpha), want, atol=1e-15)


@given(arrays(np.float64, st.integers(1, 4), elements=finite), st.floats(0.01, 20))
def test_simplex_matches_active_set_qp(v, alpha):
    np.testing.assert_allclose(project_simplex(v, alpha), simplex_qp(v, alpha), atol=1e-10)


@given(vectors, st.floats(0.01, 30))
def test_simplex_feasible(x, alpha):
    y = project_simplex(x, alpha)
    assert (y >= 0).all()
    assert y.sum() == pytest.approx(alpha, rel=1e-12, abs=1e-12)


def test_simplex_threshold_value():
    assert simplex_threshold([3.0, 1.0], 2.0) == 1.0


@pytest.mark.parametrize(
    "x,alpha,want", [([0.2, -0.3], 1.0, [0.2, -0.3]), ([3.0, 1.0], 2.0, [2.0, 0.0]), ([-3.0, 1.0], 2.0, [-2.0, 0.0])]
)
def test_l1_ball_examples(x, alpha, want):
    np.testing.assert_allclose(project_l1_ball(x, alpha), want, atol=1e-15)


@pytest.mark.parametrize("f", [project_simplex, project_l1_ball])
def test_projections_reject_nonpositive_alpha(f):
    with pytest.raises(ValueError):
        f([1.0, 2.0], 0.0)


@given(vectors, alphas)
@settings(max_examples=50)
def test_psi_derivative_monotone(x, alpha):
    s1 = float(np.abs(x).max())
    d = [psi_eval(x, alpha, t).derivative for t in np.linspace(0, s1, 101)]
    assert all(b >= a - 1e-12 * max(1.0, float(np.abs(x).sum())) for a, b in zip(d, d[1:]))
