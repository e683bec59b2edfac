"""
Block-wise uplink: each block j carries one codeword per user through the
cascade seen under RIS pattern psi(j), plus receiver noise.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from config import SystemConfig
from channel_engine.channel import ChannelRealization
from coding.codebook import Codebook
from ris_engine.schedules import PhaseSchedule
from utils.errors import DegenerateInputError, DimensionError, ModelInconsistencyError
from utils.helpers import Helpers

PATH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TransmissionScenario:
    cfg: SystemConfig
    book: Codebook
    channels: ChannelRealization
    schedule: PhaseSchedule
    messages: np.ndarray    # K x J object array of BlockMessage

    def validate(self) -> "TransmissionScenario":
        k, j = self.cfg.n_users, self.cfg.n_blocks
        if self.messages.shape != (k, j):
            raise DimensionError(f"messages cover {self.messages.shape}, expected {(k, j)}")
        for (user, block), msg in np.ndenumerate(self.messages):
            if msg is None or msg.user != user or msg.block != block:
                raise DimensionError(f"message slot ({user}, {block}) is missing or misplaced")
        if self.schedule.psi.shape != (self.cfg.n_ris_elements, j):
            raise DimensionError("schedule shape does not match the scenario")
        if self.channels.n_users != k:
            raise DimensionError("channel realization has the wrong number of users")
        return self

    def indices(self, block: int) -> np.ndarray:
        return np.array([self.messages[k, block].codeword_index for k in range(self.cfg.n_users)])


@dataclass(frozen=True)
class ReceivedBlocks:
    y: np.ndarray                   # J x M x N_B
    noise_var: float
    ground_truth_equiv: np.ndarray  # J x K x N_B

    @property
    def n_blocks(self) -> int:
        return self.y.shape[0]


def equivalent_channel(psi_j: np.ndarray, cascades: Sequence[np.ndarray]) -> np.ndarray:
    """G(j): row k is psi(j)^T H_k"""
    psi_j = np.asarray(psi_j).ravel()
    return np.stack([psi_j @ h_k for h_k in cascades])


def noise_variance_for_snr(noiseless: np.ndarray, snr_db: float) -> float:
    """Receive-referenced noise power: mean |y|^2 over all entries and blocks over 10^(snr/10)"""
    power = float(np.mean(np.abs(noiseless) ** 2))
    if power == 0.0:
        raise DegenerateInputError("noiseless signal is identically zero; SNR is undefined")
    return power / 10.0 ** (snr_db / 10.0)


def _row_sparse_lambda(book: Codebook, indices: np.ndarray, g_j: np.ndarray) -> np.ndarray:
    lam = np.zeros((book.size, g_j.shape[1]), dtype=np.complex128)
    for k, n in enumerate(indices):
        lam[n] += g_j[k]
    return lam


def synthesize(scenario: TransmissionScenario, snr_db: float, rng: np.random.Generator,
               noiseless: bool = False) -> ReceivedBlocks:
    """Y(j) = sum_k x_k(j) g_k(j)^T + N(j), cross-checked against C Lambda(j)"""
    scenario.validate()
    cfg, book = scenario.cfg, scenario.book

    clean: List[np.ndarray] = []
    equiv: List[np.ndarray] = []
    for j in range(cfg.n_blocks):
        g_j = equivalent_channel(scenario.schedule.column(j), scenario.channels.cascades)
        indices = scenario.indices(j)

        # Superposition of user signals
        y_users = np.zeros((book.length, cfg.n_bs_antennas), dtype=np.complex128)
        for k, n in enumerate(indices):
            y_users += np.outer(book.codeword(n), g_j[k])

        # Codebook times row-sparse Lambda
        y_sparse = book.matrix @ _row_sparse_lambda(book, indices, g_j)

        scale = max(np.linalg.norm(y_users), 1.0)
        if np.linalg.norm(y_users - y_sparse) > PATH_TOLERANCE * scale:
            raise ModelInconsistencyError(f"superposition and sparse forms disagree in block {j}")

        clean.append(y_users)
        equiv.append(g_j)

    clean_arr = np.stack(clean)
    equiv_arr = np.stack(equiv)
    if noiseless or (math.isinf(snr_db) and snr_db > 0):
        return ReceivedBlocks(y=clean_arr, noise_var=0.0, ground_truth_equiv=equiv_arr)

    noise_var = noise_variance_for_snr(clean_arr, snr_db)
    noise = math.sqrt(noise_var) * Helpers.crandn(rng, *clean_arr.shape)
    return ReceivedBlocks(y=clean_arr + noise, noise_var=noise_var, ground_truth_equiv=equiv_arr)
