import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from simdiag import rng
from simdiag.errors import AlignmentError
from simdiag.metrics import align_factors, cosine_matrix, greedy_matching
from simdiag.synthesis import haar_orthogonal

from oracles import best_permutation


def unit_columns(seed, d=6, k=4):
    x = rng.stream(seed, 50).standard_normal((d, k))
    return x / np.linalg.norm(x, axis=0)


def test_permuted_columns():
    X = unit_columns(1)
    perm = np.array([2, 0, 3, 1])
    rep = align_factors(X[:, perm], X)
    assert rep.max_error == 0.0
    np.testing.assert_array_equal(perm[rep.permutation], np.arange(4))


def test_negated_column():
    X = unit_columns(2)
    Y = X.copy()
    Y[:, 1] *= -1
    rep = align_factors(Y, X, mode="sign")
    assert rep.max_error == 0.0
    assert rep.signs_or_scales[1] == -1.0


def test_scale_mode():
    X = unit_columns(3)
    rep = align_factors(3.0 * X, X, mode="scale")
    assert rep.max_error < 1e-15
    np.testing.assert_allclose(rep.signs_or_scales, 1.0 / 3.0)


def test_noise_band():
    d = 6
    X = haar_orthogonal(rng.stream(4), d)[:, :4]
    rep = align_factors(X + 1e-3 * rng.stream(4, 1).standard_normal(X.shape), X)
    assert 0.5e-3 * math.sqrt(d) <= rep.max_error <= 2e-3 * math.sqrt(d)


def test_self_alignment_and_bounds():
    X = unit_columns(5)
    assert align_factors(X, X).max_error == 0.0
    rep = align_factors(unit_columns(6), X)
    assert np.all(rep.column_errors <= 2.0)
    assert len(set(rep.permutation.tolist())) == 4


def test_permutation_invariance():
    X, Y = unit_columns(7), unit_columns(8)
    perm = np.array([3, 1, 0, 2])
    a = align_factors(Y, X)
    b = align_factors(Y[:, perm], X[:, perm])
    np.testing.assert_allclose(np.sort(a.column_errors), np.sort(b.column_errors))


def test_errors():
    X = unit_columns(9)
    with pytest.raises(AlignmentError):
        align_factors(X[:, :2], X)
    with pytest.raises(AlignmentError):
        align_factors(X[:5], X)
    Z = np.zeros_like(X)
    with pytest.raises(AlignmentError):
        align_factors(Z, X)
    with pytest.raises(ValueError):
        align_factors(X, X, mode="affine")


def test_zero_column_cosine():
    X = unit_columns(10)
    Y = X.copy()
    Y[:, 0] = 0.0
    assert np.all(cosine_matrix(Y, X)[0] == 0.0)


def test_greedy_takes_largest_first():
    cos = np.array([[0.9, 0.8], [0.85, 0.1]])
    np.testing.assert_array_equal(greedy_matching(cos), [0, 1])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_greedy_equals_brute_force(k, seed):
    truth = haar_orthogonal(rng.stream(seed, 1), 8)[:, :k]
    est = truth + 0.05 * rng.stream(seed, 2).standard_normal(truth.shape)
    est = est[:, rng.stream(seed, 3).permutation(k)] * rng.stream(seed, 4).choice([-1.0, 1.0], k)
    cos = np.abs(cosine_matrix(est, truth))
    for j in range(k):
        col = np.sort(cos[:, j])[::-1]
        assume(col[0] - col[1] > 0.05)
    np.testing.assert_array_equal(align_factors(est, truth).permutation, best_permutation(est, truth))
