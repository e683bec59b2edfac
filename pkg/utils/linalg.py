"""
Dense complex linear-algebra kernel.

Matrices are numpy complex128 arrays in C (row-major) order. ``vec`` always
stacks columns, which is what the Kronecker-vec identity
``vec(A X B) = kron(B.T, A) @ vec(X)`` requires.
"""

import numpy as np
from scipy import linalg as sla

from utils.errors import DimensionError, NumericalRankError

CONDITION_LIMIT = 1e12


def as_matrix(a) -> np.ndarray:
    """Promote to a 2-D complex array (vectors become columns)"""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a matrix, got {arr.ndim} dimensions")
    return arr


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def transposed_khatri_rao(a, b) -> np.ndarray:
    """Row-wise Kronecker product: row n of the result is kron(a[n], b[n])"""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], a.shape[1] * b.shape[1])


def lstsq(a, b) -> np.ndarray:
    """Least-squares solution of a @ x = b through an economic QR factorization.

    Raises NumericalRankError when the triangular factor has a condition
    estimate above CONDITION_LIMIT.
    """
    a = as_matrix(a)
    b_arr = np.asarray(b, dtype=np.complex128)
    vector_rhs = b_arr.ndim == 1
    b = as_matrix(b_arr)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"lstsq rows differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < a.shape[1]:
        raise NumericalRankError(f"underdetermined system {a.shape[0]}x{a.shape[1]}")
    if a.shape[1] == 0:
        x = np.zeros((0, b.shape[1]), dtype=np.complex128)
        return x.ravel() if vector_rhs else x

    q, r = sla.qr(a, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() == 0.0 or np.linalg.cond(r) > CONDITION_LIMIT:
        raise NumericalRankError("least-squares matrix is numerically rank deficient")
    x = sla.solve_triangular(r, q.conj().T @ b)
    return x.ravel() if vector_rhs else x


def vec(a) -> np.ndarray:
    """Column-stacking vectorization, returned as a 1-D array"""
    return as_matrix(a).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != rows * cols:
        raise DimensionError(f"cannot unvec {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")
