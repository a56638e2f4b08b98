"""Tensor algebra contracts: matricization layout, mode products, truncated
and soft-thresholded SVD, Tucker projection."""

import numpy as np
import pytest

from intensor.tensors import (
    SvdFactors,
    kron_factors,
    matricize,
    mode_product,
    soft_threshold_svd,
    truncated_svd,
    tucker_project,
    unmatricize,
)


def random_orthonormal(rows, cols, rng):
    q, _ = np.linalg.qr(rng.standard_normal((rows, rows)))
    return q[:, :cols]


class TestMatricize:
    def test_enumerated_2x2x2(self):
        # T[i,j,k] = 100 i + 10 j + k, hand-enumerated unfoldings.  Columns
        # run over the remaining axes with the first remaining axis fastest.
        t = np.fromfunction(lambda i, j, k: 100 * i + 10 * j + k, (2, 2, 2))
        m0 = np.array([[0, 10, 1, 11], [100, 110, 101, 111]], dtype=float)
        m1 = np.array([[0, 100, 1, 101], [10, 110, 11, 111]], dtype=float)
        m2 = np.array([[0, 100, 10, 110], [1, 101, 11, 111]], dtype=float)
        np.testing.assert_array_equal(matricize(t, 0), m0)
        np.testing.assert_array_equal(matricize(t, 1), m1)
        np.testing.assert_array_equal(matricize(t, 2), m2)

    def test_shapes(self):
        t = np.zeros((3, 4, 5))
        assert matricize(t, 0).shape == (3, 20)
        assert matricize(t, 1).shape == (4, 15)
        assert matricize(t, 2).shape == (5, 12)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        t = rng.standard_normal((3, 4, 5, 2))
        for mode in range(4):
            back = unmatricize(matricize(t, mode), t.shape, mode)
            np.testing.assert_array_equal(back, t)

    def test_mode_out_of_range(self):
        t = np.zeros((2, 2))
        with pytest.raises(ValueError):
            matricize(t, 2)
        with pytest.raises(ValueError):
            matricize(t, -1)


class TestModeProduct:
    def test_against_entry_formula(self):
        # Entry formula oracle: out[..., i, ...] = sum_a T[..., a, ...] M[i, a].
        rng = np.random.default_rng(1)
        t = rng.standard_normal((3, 4, 2))
        m = rng.standard_normal((5, 4))
        out = mode_product(t, m, 1)
        assert out.shape == (3, 5, 2)
        oracle = np.zeros((3, 5, 2))
        for i in range(3):
            for j in range(5):
                for k in range(2):
                    oracle[i, j, k] = sum(t[i, a, k] * m[j, a] for a in range(4))
        np.testing.assert_allclose(out, oracle, atol=1e-12)

    def test_matricize_consistency(self):
        rng = np.random.default_rng(2)
        t = rng.standard_normal((3, 4, 5))
        m = rng.standard_normal((6, 4))
        lhs = matricize(mode_product(t, m, 1), 1)
        rhs = m @ matricize(t, 1)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_identity(self):
        rng = np.random.default_rng(3)
        t = rng.standard_normal((2, 3, 4))
        np.testing.assert_array_equal(mode_product(t, np.eye(3), 1), t)


class TestKronFactors:
    def test_two_factor_layout(self):
        # First factor's column index must vary fastest, matching matricize.
        a = np.array([[1.0, 2.0]])
        b = np.array([[10.0, 100.0]])
        out = kron_factors([a, b])
        np.testing.assert_array_equal(out, np.array([[10.0, 20.0, 100.0, 200.0]]))

    def test_multi_mode_identity(self):
        # matricize(T x_k Mk^T for k != j, j) == matricize(T, j) @ kron_factors.
        rng = np.random.default_rng(4)
        t = rng.standard_normal((3, 4, 5))
        m0 = rng.standard_normal((4, 2))
        m2 = rng.standard_normal((5, 3))
        proj = mode_product(mode_product(t, m0.T, 1), m2.T, 2)
        lhs = matricize(proj, 0)
        rhs = matricize(t, 0) @ kron_factors([m0, m2])
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kron_factors([])


class TestTruncatedSvd:
    def test_exact_low_rank_recovery(self):
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
        f = truncated_svd(mat, 3)
        recon = (f.U * f.singular_values) @ f.V.T
        np.testing.assert_allclose(recon, mat, atol=1e-10)

    def test_eckart_young(self):
        # Residual of the rank-R truncation equals the tail singular value
        # mass of a full SVD.
        rng = np.random.default_rng(6)
        mat = rng.standard_normal((10, 7))
        sigma = np.linalg.svd(mat, compute_uv=False)
        for rank in (1, 3, 7):
            f = truncated_svd(mat, rank)
            recon = (f.U * f.singular_values) @ f.V.T
            resid = np.linalg.norm(mat - recon)
            np.testing.assert_allclose(resid, np.sqrt((sigma[rank:] ** 2).sum()), atol=1e-8)

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(7)
        mat = rng.standard_normal((9, 5))
        f = truncated_svd(mat, 4)
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(f.V.T @ f.V, np.eye(4), atol=1e-10)

    def test_sign_convention(self):
        # Largest-magnitude entry of each left singular vector is positive.
        u = np.array([[0.6], [-0.8]])
        v = np.array([[1.0], [0.0]])
        mat = 2.0 * u @ v.T
        f = truncated_svd(mat, 1)
        np.testing.assert_allclose(f.U[:, 0], [-0.6, 0.8], atol=1e-12)
        np.testing.assert_allclose(f.V[:, 0], [-1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(f.singular_values, [2.0], atol=1e-12)

    def test_sign_fix_preserves_product(self):
        rng = np.random.default_rng(8)
        mat = rng.standard_normal((6, 6))
        f = truncated_svd(mat, 6)
        np.testing.assert_allclose((f.U * f.singular_values) @ f.V.T, mat, atol=1e-10)
        for col in f.U.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_descending_values(self):
        rng = np.random.default_rng(9)
        f = truncated_svd(rng.standard_normal((7, 7)), 7)
        assert np.all(np.diff(f.singular_values) <= 1e-14)

    def test_rank_bounds(self):
        mat = np.eye(3)
        with pytest.raises(ValueError):
            truncated_svd(mat, 0)
        with pytest.raises(ValueError):
            truncated_svd(mat, 4)

    def test_zero_matrix(self):
        f = truncated_svd(np.zeros((4, 3)), 2)
        np.testing.assert_allclose(f.singular_values, [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(2), atol=1e-10)


class TestSoftThresholdSvd:
    def test_diagonal_case(self):
        out = soft_threshold_svd(np.diag([3.0, 1.0, 0.5]), 1.0)
        np.testing.assert_allclose(out, np.diag([2.0, 0.0, 0.0]), atol=1e-12)

    def test_singular_value_contract(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            mat = rng.standard_normal((6, 9))
            gamma = float(rng.uniform(0.0, 4.0))
            out = soft_threshold_svd(mat, gamma)
            got = np.linalg.svd(out, compute_uv=False)
            want = np.maximum(np.linalg.svd(mat, compute_uv=False) - gamma, 0.0)
            np.testing.assert_allclose(np.sort(got), np.sort(want), atol=1e-10)

    def test_zero_gamma_identity(self):
        rng = np.random.default_rng(11)
        mat = rng.standard_normal((5, 4))
        np.testing.assert_allclose(soft_threshold_svd(mat, 0.0), mat, atol=1e-12)

    def test_large_gamma_annihilates(self):
        rng = np.random.default_rng(12)
        mat = rng.standard_normal((5, 4))
        top = np.linalg.svd(mat, compute_uv=False)[0]
        np.testing.assert_allclose(soft_threshold_svd(mat, top + 1.0), 0.0, atol=1e-12)

    def test_rank_two_shrinkage_keeps_subspaces(self):
        rng = np.random.default_rng(13)
        u = random_orthonormal(7, 2, rng)
        v = random_orthonormal(5, 2, rng)
        mat = u @ np.diag([5.0, 2.0]) @ v.T
        out = soft_threshold_svd(mat, 1.0)
        got = np.linalg.svd(out, compute_uv=False)
        np.testing.assert_allclose(got[:2], [4.0, 1.0], atol=1e-8)
        # Column space is preserved: projecting onto span(u) changes nothing.
        np.testing.assert_allclose(u @ u.T @ out, out, atol=1e-8)
        np.testing.assert_allclose(out @ v @ v.T, out, atol=1e-8)

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold_svd(np.eye(2), -0.5)


class TestTuckerProject:
    def test_full_rank_is_identity(self):
        rng = np.random.default_rng(14)
        t = rng.standard_normal((3, 4, 5))
        factors = [random_orthonormal(p, p, rng) for p in t.shape]
        np.testing.assert_allclose(tucker_project(t, factors), t, atol=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(15)
        t = rng.standard_normal((4, 5, 3))
        factors = [random_orthonormal(p, 2, rng) for p in t.shape]
        once = tucker_project(t, factors)
        twice = tucker_project(once, factors)
        np.testing.assert_allclose(twice, once, atol=1e-10)

    def test_recovers_exact_tucker_tensor(self):
        rng = np.random.default_rng(16)
        core = rng.standard_normal((2, 3, 2))
        factors = [random_orthonormal(p, r, rng) for p, r in zip((5, 6, 4), (2, 3, 2))]
        t = core.copy()
        for mode, u in enumerate(factors):
            t = mode_product(t, u, mode)
        np.testing.assert_allclose(tucker_project(t, factors), t, atol=1e-10)

    def test_projection_never_increases_norm(self):
        rng = np.random.default_rng(17)
        t = rng.standard_normal((4, 4, 4))
        factors = [random_orthonormal(4, 2, rng) for _ in range(3)]
        assert np.linalg.norm(tucker_project(t, factors)) <= np.linalg.norm(t) + 1e-12

    def test_non_orthonormal_rejected(self):
        t = np.zeros((3, 3))
        bad = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            tucker_project(t, [np.eye(3), bad])

    def test_factor_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            tucker_project(np.zeros((3, 3)), [np.eye(3)])


class TestSvdFactorsType:
    def test_fields(self):
        f = SvdFactors(np.eye(2), np.ones(2), np.eye(2))
        assert f.U is f[0] and f.singular_values is f[1] and f.V is f[2]
