"""
Cascade estimation: stack every block's equivalent channel of one user,
g_k = Q vec(D_k), and recover the sparse angular cascade with OMP.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config import SystemConfig
from ris_engine.schedules import PhaseSchedule
from utils.errors import DimensionError, InsufficientMeasurementsError, NumericalRankError
from utils.linalg import kron, lstsq, unvec
from utils.logger import logger


@dataclass(frozen=True)
class SensingMatrix:
    q: np.ndarray       # (J * N_B) x (G_B * G_R)
    n_bs: int
    n_blocks: int
    grid_bs: int
    grid_ris: int

    def block_rows(self, j: int) -> np.ndarray:
        return self.q[j * self.n_bs:(j + 1) * self.n_bs]

    def row_mask(self, erased_blocks: np.ndarray) -> np.ndarray:
        """Row-level keep mask from a per-block erasure mask"""
        return np.repeat(~np.asarray(erased_blocks, dtype=bool), self.n_bs)


@dataclass(frozen=True)
class OmpResult:
    coeffs: np.ndarray              # length G_B * G_R, zero off the support
    support: List[int]
    residual: np.ndarray            # final residual on the unmasked rows
    residual_norms: List[float]


@dataclass
class UserCascade:
    user: int
    d_hat: np.ndarray           # vec(D_hat)
    D_hat: np.ndarray           # G_R x G_B
    H_hat: np.ndarray           # N_R x N_B
    support: List[int] = field(default_factory=list)
    failed: bool = False
    error: str = ""


@dataclass
class CascadeEstimate:
    users: List[UserCascade]

    @property
    def failures(self) -> int:
        return sum(u.failed for u in self.users)


def build_sensing_matrix(f_bs: np.ndarray, f_ris: np.ndarray, schedule: PhaseSchedule) -> SensingMatrix:
    """Block j of Q is kron(conj(F_B), psi(j)^T F_R)"""
    fb_conj = np.conj(f_bs)
    ris_part = schedule.psi.T @ f_ris   # J x G_R
    q = np.vstack([kron(fb_conj, ris_part[j:j + 1]) for j in range(schedule.n_blocks)])
    return SensingMatrix(
        q=q,
        n_bs=f_bs.shape[0],
        n_blocks=schedule.n_blocks,
        grid_bs=f_bs.shape[1],
        grid_ris=f_ris.shape[1],
    )


def omp(y: np.ndarray, q: np.ndarray, sparsity: Optional[int], row_mask: np.ndarray = None,
        residual_tol: Optional[float] = None, max_atoms: Optional[int] = None) -> OmpResult:
    """Orthogonal matching pursuit on the unmasked rows of (y, q).

    Atoms are ranked by |q_j^H r| / ||q_j||. With `sparsity=None` the loop
    runs until ||r|| <= residual_tol * ||y|| or the support holds `max_atoms`
    atoms (default: half the usable rows).
    """
    y = np.asarray(y, dtype=np.complex128).ravel()
    q = np.asarray(q, dtype=np.complex128)
    if q.shape[0] != y.shape[0]:
        raise DimensionError(f"q has {q.shape[0]} rows, y has {y.shape[0]}")
    if row_mask is not None:
        row_mask = np.asarray(row_mask, dtype=bool)
        y, q = y[row_mask], q[row_mask]

    n_rows, n_atoms = q.shape
    if sparsity is None:
        if residual_tol is None:
            raise DimensionError("either sparsity or residual_tol is required")
        limit = max(1, n_rows // 2) if max_atoms is None else min(int(max_atoms), n_rows)
        if limit < 1:
            raise DimensionError(f"max_atoms must be at least 1, got {max_atoms}")
    else:
        if sparsity > n_rows:
            raise InsufficientMeasurementsError(f"sparsity {sparsity} exceeds {n_rows} usable rows")
        limit = sparsity

    norms = np.linalg.norm(q, axis=0)
    usable = norms > 0.0
    y_norm = float(np.linalg.norm(y))
    support: List[int] = []
    residual = y.copy()
    coeffs_s = np.zeros(0, dtype=np.complex128)
    residual_norms = []

    while len(support) < limit:
        if sparsity is None and np.linalg.norm(residual) <= residual_tol * y_norm:
            break
        scores = np.zeros(n_atoms)
        scores[usable] = np.abs(q[:, usable].conj().T @ residual) / norms[usable]
        scores[support] = -np.inf
        support.append(int(np.argmax(scores)))

        coeffs_s = lstsq(q[:, support], y)
        residual = y - q[:, support] @ coeffs_s
        residual_norms.append(float(np.linalg.norm(residual)))

    coeffs = np.zeros(n_atoms, dtype=np.complex128)
    coeffs[support] = coeffs_s
    return OmpResult(coeffs=coeffs, support=support, residual=residual, residual_norms=residual_norms)


def estimate_cascades(g_hat: np.ndarray, erasure_mask: np.ndarray, sensing: SensingMatrix,
                      f_bs: np.ndarray, f_ris: np.ndarray, cfg: SystemConfig,
                      residual_tol: Optional[float] = None,
                      max_atoms: Optional[int] = None) -> CascadeEstimate:
    """Per-user OMP on the non-erased blocks, then H_hat = F_R D_hat F_B^H"""
    g_hat = np.asarray(g_hat)
    expected = sensing.n_blocks * sensing.n_bs
    if g_hat.shape[-1] != expected:
        raise DimensionError(f"measurement vectors have length {g_hat.shape[-1]}, expected {expected}")

    sparsity = None if residual_tol is not None else cfg.cascade_sparsity
    users = []
    for k in range(cfg.n_users):
        mask = sensing.row_mask(erasure_mask[k])
        try:
            if mask.sum() == 0 or (sparsity is not None and mask.sum() < sparsity):
                raise InsufficientMeasurementsError(
                    f"user {k}: {int(mask.sum())} usable rows for sparsity {sparsity}"
                )
            result = omp(g_hat[k], sensing.q, sparsity, mask, residual_tol, max_atoms)
            d_mat = unvec(result.coeffs, sensing.grid_ris, sensing.grid_bs)
            users.append(UserCascade(
                user=k,
                d_hat=result.coeffs,
                D_hat=d_mat,
                H_hat=f_ris @ d_mat @ f_bs.conj().T,
                support=result.support,
            ))
        except (InsufficientMeasurementsError, NumericalRankError) as e:
            logger.debug(f"Cascade estimate for user {k} failed: {e}")
            users.append(UserCascade(
                user=k,
                d_hat=np.zeros(sensing.q.shape[1], dtype=np.complex128),
                D_hat=np.zeros((sensing.grid_ris, sensing.grid_bs), dtype=np.complex128),
                H_hat=np.zeros((f_ris.shape[0], f_bs.shape[0]), dtype=np.complex128),
                failed=True,
                error=str(e),
            ))
    return CascadeEstimate(users=users)
