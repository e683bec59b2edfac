import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.errors import DimensionError, NumericalRankError
from utils.helpers import Helpers
from utils.linalg import kron, lstsq, transposed_khatri_rao, unvec, vec


def crand(rng, *shape):
    return Helpers.crandn(rng, *shape)


class TestKron:
    def test_shape_and_blocks(self, rng):
        """kron(A, B) has A[i, j] * B in block (i, j)"""
        a, b = crand(rng, 2, 3), crand(rng, 4, 5)
        k = kron(a, b)
        assert k.shape == (8, 15)
        assert_allclose(k[4:8, 5:10], a[1, 1] * b)

    def test_vectors_become_columns(self, rng):
        a, b = crand(rng, 3), crand(rng, 2)
        assert kron(a, b).shape == (6, 1)

    def test_kronecker_vec_identity(self, rng):
        """vec(A X B) == kron(B^T, A) vec(X)"""
        for _ in range(100):
            a, x, b = crand(rng, 4, 6), crand(rng, 6, 5), crand(rng, 5, 3)
            lhs = vec(a @ x @ b)
            rhs = kron(b.T, a) @ vec(x)
            assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


class TestKhatriRao:
    def test_rows_are_kronecker_products(self, rng):
        a, b = crand(rng, 5, 3), crand(rng, 5, 4)
        c = transposed_khatri_rao(a, b)
        assert c.shape == (5, 12)
        for n in range(5):
            assert_allclose(c[n], np.kron(a[n], b[n]))

    def test_row_mismatch(self, rng):
        with pytest.raises(DimensionError):
            transposed_khatri_rao(crand(rng, 3, 2), crand(rng, 4, 2))


class TestLstsq:
    def test_exact_solution(self, rng):
        a = crand(rng, 10, 4)
        x = crand(rng, 4, 3)
        assert_allclose(lstsq(a, a @ x), x, atol=1e-10)

    def test_vector_rhs_stays_vector(self, rng):
        a = crand(rng, 6, 2)
        x = crand(rng, 2)
        out = lstsq(a, a @ x)
        assert out.shape == (2,)
        assert_allclose(out, x, atol=1e-10)

    def test_matches_numpy_on_noisy_system(self, rng):
        a, b = crand(rng, 20, 5), crand(rng, 20, 2)
        ref = np.linalg.lstsq(a, b, rcond=None)[0]
        assert_allclose(lstsq(a, b), ref, atol=1e-10)

    def test_rank_deficient(self, rng):
        a = crand(rng, 8, 3)
        a[:, 2] = 2.0 * a[:, 0]
        with pytest.raises(NumericalRankError):
            lstsq(a, crand(rng, 8, 1))

    def test_underdetermined(self, rng):
        with pytest.raises(NumericalRankError):
            lstsq(crand(rng, 2, 3), crand(rng, 2, 1))

    def test_row_mismatch(self, rng):
        with pytest.raises(DimensionError):
            lstsq(crand(rng, 5, 2), crand(rng, 4, 1))


class TestVec:
    def test_column_major(self):
        a = np.array([[1, 2], [3, 4]], dtype=complex)
        assert_allclose(vec(a), [1, 3, 2, 4])

    def test_unvec_inverts_vec(self, rng):
        a = crand(rng, 3, 7)
        assert_allclose(unvec(vec(a), 3, 7), a)

    def test_unvec_size_mismatch(self):
        with pytest.raises(DimensionError):
            unvec(np.zeros(5), 2, 3)
