import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import column_factor, lstsq_error, random_psd

from multidescent import (
    DomainError,
    GramInstance,
    ShapeError,
    Spectrum,
    eigensym,
    nystrom_approximation,
    nystrom_error,
    opt_k,
    projection_error,
)
from multidescent.spectral import jacobi_eigh


class TestEigensym:
    def test_identity(self):
        w, V = eigensym(np.eye(3))
        np.testing.assert_allclose(w, [1, 1, 1])
        np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-14)

    def test_diagonal(self):
        w, V = eigensym(np.diag([1.0, 4.0]))
        np.testing.assert_allclose(w, [4, 1])
        np.testing.assert_allclose(np.abs(V), [[0, 1], [1, 0]])

    @pytest.mark.parametrize("n", [2, 6, 7, 31])
    def test_random_reconstruction(self, rng, n):
        X = rng.standard_normal((n, n))
        M = X + X.T
        w, V = eigensym(M, method="jacobi")
        assert np.all(np.diff(w) <= 0)
        assert np.linalg.norm(M - V @ np.diag(w) @ V.T) <= 1e-9 * np.linalg.norm(M)
        np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
        np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(M))[::-1], atol=1e-12 * np.abs(w).max())

    def test_lapack_route_agrees(self, rng):
        X = rng.standard_normal((12, 12))
        M = X @ X.T
        np.testing.assert_allclose(eigensym(M, "jacobi")[0], eigensym(M, "lapack")[0], rtol=1e-12)

    def test_graded_blocks_keep_relative_accuracy(self):
        # a block at scale 1e-20 next to one at scale 1
        B = np.array([[2.0, 1.0], [1.0, 2.0]])
        M = np.block([[B, np.zeros((2, 2))], [np.zeros((2, 2)), 1e-20 * B]])
        w, _ = jacobi_eigh(M)
        np.testing.assert_allclose(w, [3, 1, 3e-20, 1e-20], rtol=1e-12)

    def test_non_square(self):
        with pytest.raises(ShapeError):
            eigensym(np.ones((2, 3)))

    def test_asymmetric(self):
        with pytest.raises(ShapeError):
            eigensym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            eigensym(np.eye(2), method="qr")


class TestSpectrum:
    def test_clamps_roundoff(self):
        s = Spectrum.from_eigenvalues([1.0, -1e-14, 0.5])
        np.testing.assert_array_equal(s.values, [1.0, 0.5, 0.0])

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            Spectrum.from_eigenvalues([1.0, -0.1])

    def test_rejects_unsorted_direct(self):
        with pytest.raises(DomainError):
            Spectrum(np.array([1.0, 2.0]))

    def test_immutable(self):
        s = Spectrum.from_eigenvalues([2.0, 1.0])
        with pytest.raises(ValueError):
            s.values[0] = 3.0

    def test_rank_and_trace(self):
        s = Spectrum.from_eigenvalues([4, 2, 1e-12, 0])
        assert s.rank == 2
        assert s.trace == pytest.approx(6)

    def test_not_psd_kernel(self):
        with pytest.raises(DomainError):
            GramInstance.from_kernel(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestProjectionError:
    def test_identity_single(self):
        assert projection_error(GramInstance.from_columns(np.eye(2)), [0]) == pytest.approx(1)

    def test_duplicate_column(self):
        A = np.array([[1.0, 1.0], [2.0, 2.0]])
        assert projection_error(GramInstance.from_columns(A), [0]) == pytest.approx(0, abs=1e-14)

    def test_orthogonal_norms(self):
        A = np.diag([2.0, 1.0])
        assert projection_error(GramInstance.from_columns(A), [0]) == pytest.approx(1)

    def test_empty_is_trace(self, rng):
        inst = GramInstance.from_columns(rng.standard_normal((4, 5)))
        assert projection_error(inst, []) == pytest.approx(inst.trace)

    def test_index_errors(self):
        inst = GramInstance.from_columns(np.eye(3))
        with pytest.raises(IndexError):
            projection_error(inst, [3])
        with pytest.raises(ValueError):
            projection_error(inst, [1, 1])

    def test_matches_lstsq_on_both_forms(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 9))
            A = rng.standard_normal((int(rng.integers(1, 9)), n))
            cols, kern = GramInstance.from_columns(A), GramInstance.from_kernel(A.T @ A)
            for k in range(n + 1):
                S = rng.choice(n, k, replace=False)
                ref = lstsq_error(A, S)
                tol = 1e-8 * max(1.0, ref)
                assert projection_error(cols, S) == pytest.approx(ref, rel=1e-8, abs=1e-12 * tol)
                assert projection_error(kern, S) == pytest.approx(projection_error(cols, S), rel=1e-8, abs=1e-10)

    def test_graded_instance_small_blocks(self):
        # second block lives at scale 1e-10 in the columns
        A = np.zeros((4, 4))
        A[:2, :2] = [[1.0, 0.0], [0.0, 1.0]]
        A[2:, 2:] = 1e-10 * np.array([[1.0, 1.0], [0.0, 1.0]])
        inst = GramInstance.from_columns(A)
        assert projection_error(inst, [0, 1, 2]) == pytest.approx(1e-20, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_error_monotone_under_inclusion(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((int(rng.integers(1, 8)), n))
    inst = GramInstance.from_columns(A)
    order = rng.permutation(n)
    errs = [projection_error(inst, order[:j]) for j in range(n + 1)]
    assert all(b <= a + 1e-10 * inst.trace for a, b in zip(errs, errs[1:]))
    assert min(errs) >= 0


class TestNystrom:
    def test_empty(self, rng):
        inst = GramInstance.from_kernel(random_psd(rng, [3, 2, 1]))
        assert nystrom_error(inst, []) == pytest.approx(inst.trace)

    def test_full(self, rng):
        inst = GramInstance.from_kernel(random_psd(rng, [3, 2, 1]))
        assert nystrom_error(inst, [0, 1, 2]) == pytest.approx(0, abs=1e-12)

    def test_equals_projection(self, rng):
        K = random_psd(rng, rng.exponential(size=5))
        inst = GramInstance.from_kernel(K)
        assert nystrom_error(inst, [1, 3]) == pytest.approx(projection_error(inst, [1, 3]), rel=1e-8)

    def test_approximation_matches_pinv_formula(self, rng):
        K = random_psd(rng, [5, 3, 1, 0.5, 0.0, 0.0])
        inst = GramInstance.from_kernel(K)
        S = [0, 2, 5]
        ref = K[:, S] @ np.linalg.pinv(K[np.ix_(S, S)], rcond=1e-10) @ K[S, :]
        np.testing.assert_allclose(nystrom_approximation(inst, S), ref, atol=1e-10)


class TestOptK:
    spec = Spectrum.from_eigenvalues([4, 2, 1, 1])

    def test_tail(self):
        assert opt_k(self.spec, 2) == 2

    def test_zero(self):
        assert opt_k(self.spec, 0) == 8

    def test_rank(self):
        assert opt_k(Spectrum.from_eigenvalues([3, 1, 0]), 2) == 0

    def test_range(self):
        with pytest.raises(DomainError):
            opt_k(self.spec, 5)

    def test_below_best_subset(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 8))
            A = rng.standard_normal((n, n))
            inst = GramInstance.from_columns(A)
            for k in range(n + 1):
                best = min(projection_error(inst, S) for S in itertools.combinations(range(n), k))
                assert opt_k(inst.spectrum, k) <= best + 1e-10 * inst.trace


def test_column_factor_round_trip(rng):
    K = random_psd(rng, [2.0, 1.0, 0.0])
    A = column_factor(K)
    np.testing.assert_allclose(A.T @ A, K, atol=1e-12)
