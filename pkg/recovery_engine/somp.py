"""
Per-block blind recovery: S-OMP over the shared codebook, then ID-bit
resolution of which recovered (codeword, channel row) belongs to which user.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import SystemConfig
from channel_engine.airlink import ReceivedBlocks
from coding.codebook import Codebook, decode_index
from utils.errors import ConfigError, InvalidUserError
from utils.linalg import lstsq
from utils.logger import logger

ERASED = -1


@dataclass(frozen=True)
class SompResult:
    support: List[int]          # kept indices in selection order
    coeffs: np.ndarray          # len(support) x N_B
    residual_norms: List[float] # after each iteration


@dataclass(frozen=True)
class BlockRecovery:
    block: int
    raw_support: List[int]
    raw_rows: np.ndarray                # K x N_B, aligned with raw_support
    resolved_index: np.ndarray          # K, ERASED where the user could not be assigned
    resolved_rows: np.ndarray           # K x N_B, zero for erased users

    @property
    def erased(self) -> np.ndarray:
        return self.resolved_index == ERASED


@dataclass(frozen=True)
class RecoveryOutput:
    blocks: List[BlockRecovery]
    g_hat: np.ndarray           # K x (J * N_B), block-stacked equivalent channels
    erasure_mask: np.ndarray    # K x J, True where the block is erased for that user

    @property
    def indices(self) -> np.ndarray:
        """K x J recovered codeword indices (ERASED where erased)"""
        return np.stack([b.resolved_index for b in self.blocks], axis=1)


def somp(y_block: np.ndarray, book: Codebook, k_users: int, n_iters: int = None) -> SompResult:
    """Greedy row-sparse recovery of Lambda(j) from Y(j) = C Lambda(j) + N(j).

    Each iteration picks the unselected column maximizing ||R^H c_n|| / ||c_n||
    (lowest index on ties), re-fits all selected rows by least squares and
    updates R = Y - C_I Sigma. The K rows with the largest norms are returned.
    """
    c = book.matrix
    n_iters = k_users if n_iters is None else n_iters
    if n_iters < k_users or n_iters > min(c.shape):
        raise ConfigError(f"n_iters must lie in [{k_users}, {min(c.shape)}], got {n_iters}")

    col_norms = np.linalg.norm(c, axis=0)
    selected: List[int] = []
    residual = np.array(y_block, dtype=np.complex128)
    coeffs = np.zeros((0, y_block.shape[1]), dtype=np.complex128)
    residual_norms = []

    for _ in range(n_iters):
        scores = np.linalg.norm(c.conj().T @ residual, axis=1) / col_norms
        scores[selected] = -np.inf
        selected.append(int(np.argmax(scores)))

        coeffs = lstsq(c[:, selected], y_block)
        residual = y_block - c[:, selected] @ coeffs
        residual_norms.append(float(np.linalg.norm(residual)))

    # keep the K strongest rows, reported in selection order
    strength = np.linalg.norm(coeffs, axis=1)
    keep = np.sort(np.argsort(-strength, kind="stable")[:k_users])
    return SompResult(
        support=[selected[i] for i in keep],
        coeffs=coeffs[keep],
        residual_norms=residual_norms,
    )


def resolve_permutation(support: Sequence[int], rows: np.ndarray,
                        book: Codebook) -> Tuple[np.ndarray, np.ndarray]:
    """Assign recovered entries to users through their ID-bit index ranges.

    A user claimed by exactly one index gets it; users claimed by none or by
    several indices are erased, and colliding indices go to nobody.
    """
    k_users = book.n_users
    claims: List[List[int]] = [[] for _ in range(k_users)]
    for pos, n in enumerate(support):
        try:
            user, _ = decode_index(book, int(n))
        except InvalidUserError:
            continue
        claims[user].append(pos)

    resolved_index = np.full(k_users, ERASED, dtype=np.int64)
    resolved_rows = np.zeros((k_users, rows.shape[1]), dtype=np.complex128)
    for user, positions in enumerate(claims):
        if len(positions) == 1:
            resolved_index[user] = int(support[positions[0]])
            resolved_rows[user] = rows[positions[0]]
    return resolved_index, resolved_rows


def recover_block(y_block: np.ndarray, book: Codebook, block: int, n_iters: int = None) -> BlockRecovery:
    result = somp(y_block, book, book.n_users, n_iters)
    resolved_index, resolved_rows = resolve_permutation(result.support, result.coeffs, book)
    recovery = BlockRecovery(
        block=block,
        raw_support=result.support,
        raw_rows=result.coeffs,
        resolved_index=resolved_index,
        resolved_rows=resolved_rows,
    )
    if recovery.erased.any():
        logger.debug(f"Block {block}: users {np.flatnonzero(recovery.erased).tolist()} erased")
    return recovery


def recover_all_blocks(received: ReceivedBlocks, book: Codebook, cfg: SystemConfig,
                       n_iters: Optional[int] = None) -> RecoveryOutput:
    """Run S-OMP and ID resolution on every block and stack per-user channels"""
    blocks = [recover_block(received.y[j], book, j, n_iters) for j in range(received.n_blocks)]

    k, n_b = cfg.n_users, cfg.n_bs_antennas
    g_hat = np.zeros((k, received.n_blocks * n_b), dtype=np.complex128)
    mask = np.zeros((k, received.n_blocks), dtype=bool)
    for rec in blocks:
        j = rec.block
        g_hat[:, j * n_b:(j + 1) * n_b] = rec.resolved_rows
        mask[:, j] = rec.erased
    return RecoveryOutput(blocks=blocks, g_hat=g_hat, erasure_mask=mask)
