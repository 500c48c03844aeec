import math
from dataclasses import replace

import numpy as np
import pytest

from simdiag.asymmetric import asym_solve, embed, gram_reduce, pair_components, recover_factors
from simdiag.core import MatrixSet
from simdiag.errors import PairingError, RankError
from simdiag.jacobi import SolverOptions, jacobi_solve
from simdiag.metrics import align_factors
from simdiag.synthesis import random_asymmetric_problem


def rel_residual(res, mset):
    return np.linalg.norm(res.reconstruct() - mset.matrices) / np.linalg.norm(mset.matrices)


class TestEmbed:
    def test_scalar(self):
        np.testing.assert_array_equal(embed(MatrixSet(np.array([[[1.0]]]))).matrices[0], [[0.0, 1.0], [1.0, 0.0]])

    def test_block_shape(self):
        m = np.arange(1.0, 7.0).reshape(1, 3, 2)
        n = embed(MatrixSet(m)).matrices[0]
        assert n.shape == (5, 5)
        np.testing.assert_array_equal(n[:2, :2], 0.0)
        np.testing.assert_array_equal(n[2:, 2:], 0.0)
        np.testing.assert_array_equal(n[2:, :2], m[0])
        np.testing.assert_array_equal(n, n.T)
        assert np.linalg.norm(n) == pytest.approx(math.sqrt(2) * np.linalg.norm(m[0]))

    def test_factorization(self):
        ms, t = random_asymmetric_problem(4, 3, 2, 3, 0.0, 2.0, 1)
        W = np.block([[t.V, t.V], [t.U, -t.U]]) / math.sqrt(2)
        lam = np.hstack([t.lambdas, -t.lambdas])
        expected = np.einsum("ik,lk,jk->lij", W, lam, W)
        np.testing.assert_allclose(embed(ms).matrices, expected, atol=1e-12)


class TestGram:
    def test_orthonormal_columns(self):
        q = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 3)))[0]
        np.testing.assert_allclose(gram_reduce(MatrixSet(q[None])).matrices[0], np.eye(3), atol=1e-14)

    def test_zero(self):
        np.testing.assert_array_equal(gram_reduce(MatrixSet(np.zeros((2, 3, 4)))).matrices, 0.0)

    def test_orthogonal_factor_identity(self):
        ms, t = random_asymmetric_problem(6, 5, 3, 4, 0.0, 1.0, 2)
        expected = np.einsum("ik,lk,jk->lij", t.V, t.lambdas**2, t.V)
        np.testing.assert_allclose(gram_reduce(ms).matrices, expected, atol=1e-12)

    def test_recovers_v_when_orthogonal(self):
        ms, t = random_asymmetric_problem(6, 5, 3, 4, 0.0, 1.0, 3)
        res = jacobi_solve(gram_reduce(ms), SolverOptions(rank=3))
        assert align_factors(res.U_est, t.V).max_error < 1e-6

    def test_fails_when_non_orthogonal(self):
        # regression for the orthogonal-only caveat: U with condition ~10
        ms, t = random_asymmetric_problem(6, 5, 3, 4, 0.0, 10.0, 3)
        res = jacobi_solve(gram_reduce(ms), SolverOptions(rank=3))
        assert align_factors(res.U_est, t.V).max_error > 0.1


class TestPairing:
    def test_simple(self):
        w = np.array([[1.0, 2.0, -1.0, -2.0], [0.5, -1.0, -0.5, 1.0]])
        assert pair_components(w) == [(0, 2), (1, 3)]

    def test_unpaired(self):
        with pytest.raises(PairingError, match="component"):
            pair_components(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_identical_profiles_rejected(self):
        a = np.array([1.0, 0.5, -0.3])
        with pytest.raises(PairingError, match="ambiguous"):
            pair_components(np.stack([a, -a, a, -a], axis=1))


class TestRecover:
    def test_scalar(self):
        res = asym_solve(MatrixSet(np.array([[[1.0]]])))
        np.testing.assert_allclose(res.embedded.U_est, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)
        assert (res.U_est[0, 0], res.V_est[0, 0], res.lambdas[0, 0]) == pytest.approx((1.0, 1.0, 1.0))

    def test_sign_flip_absorbed(self):
        ms, _ = random_asymmetric_problem(5, 4, 2, 4, 0.0, 1.0, 4)
        res = asym_solve(ms, SolverOptions(rank=2))
        flipped = res.embedded.U_est.copy()
        flipped[:, 1] *= -1
        again = recover_factors(replace(res.embedded, U_est=flipped), 5, 4, 2)
        np.testing.assert_allclose(again.U_est, res.U_est, atol=1e-14)
        np.testing.assert_allclose(again.V_est, res.V_est, atol=1e-14)

    def test_too_few_components(self):
        ms, _ = random_asymmetric_problem(5, 4, 2, 4, 0.0, 1.0, 4)
        res = asym_solve(ms, SolverOptions(rank=2))
        with pytest.raises(RankError):
            recover_factors(res.embedded, 5, 4, 3)

    def test_dimension_mismatch(self):
        ms, _ = random_asymmetric_problem(5, 4, 2, 4, 0.0, 1.0, 4)
        res = asym_solve(ms, SolverOptions(rank=2))
        with pytest.raises(ValueError):
            recover_factors(res.embedded, 5, 5, 2)


class TestSolve:
    def test_diagonal_rectangular(self):
        m = np.zeros((3, 3, 4))
        for l, vals in enumerate(([3.0, 1.0, 2.0], [1.0, -2.0, 0.5], [2.0, 1.0, -1.0])):
            m[l, np.arange(3), np.arange(3)] = vals
        res = asym_solve(MatrixSet(m), SolverOptions(rank=3))
        assert align_factors(res.U_est, np.eye(3)).max_error < 1e-12
        assert align_factors(res.V_est, np.eye(4)[:, :3]).max_error < 1e-12

    def test_orthogonal_round_trip(self):
        ms, t = random_asymmetric_problem(10, 12, 4, 8, 0.0, 1.0, 5)
        res = asym_solve(ms, SolverOptions(rank=4))
        assert rel_residual(res, ms) < 1e-6
        assert align_factors(res.U_est, t.U).max_error < 1e-6
        assert align_factors(res.V_est, t.V).max_error < 1e-6
        w = np.sort(res.embedded.weights, axis=1)
        np.testing.assert_allclose(w, -w[:, ::-1], atol=1e-8)
        for p, q in res.pairing:
            a, b = res.embedded.weights[:, p], res.embedded.weights[:, q]
            assert a @ b / (np.linalg.norm(a) * np.linalg.norm(b)) <= -0.999999

    def test_non_orthogonal_round_trip(self):
        ms, t = random_asymmetric_problem(10, 12, 4, 8, 0.0, 5.0, 6)
        res = asym_solve(ms, SolverOptions(method="qrj1d", rank=4))
        assert rel_residual(res, ms) < 1e-4
        assert align_factors(res.U_est, t.U, mode="scale").max_error < 1e-4
        assert align_factors(res.V_est, t.V, mode="scale").max_error < 1e-4

    def test_reconstruction_sign_consistent(self):
        ms, _ = random_asymmetric_problem(6, 7, 3, 5, 0.0, 1.0, 7)
        res = asym_solve(ms, SolverOptions(rank=3))
        np.testing.assert_allclose(np.linalg.norm(res.U_est, axis=0), 1.0)
        np.testing.assert_allclose(np.linalg.norm(res.V_est, axis=0), 1.0)
        rows = np.argmax(np.abs(res.U_est), axis=0)
        assert np.all(res.U_est[rows, np.arange(3)] > 0)
        np.testing.assert_allclose(res.reconstruct(), ms.matrices, atol=1e-10)

    def test_small_noise_residual(self):
        eps = 1e-6
        ms, t = random_asymmetric_problem(10, 12, 4, 8, eps, 1.0, 8)
        res = asym_solve(ms, SolverOptions(rank=4))
        clean = t.clean_matrices()
        assert np.linalg.norm(res.reconstruct() - clean) / np.linalg.norm(clean) < 100 * eps

    def test_rank_validation(self):
        ms, _ = random_asymmetric_problem(4, 3, 2, 3, 0.0, 1.0, 9)
        with pytest.raises(RankError):
            asym_solve(ms, SolverOptions(rank=4))
