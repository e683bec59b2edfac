"""
Per-trial quality metrics and the rate / overhead report.
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from config import Config, SystemConfig
from recovery_engine.somp import ERASED
from utils.errors import AccountingError, DegenerateInputError, DimensionError
from utils.helpers import Helpers

WEIGHTED_BER_FORMULA = "sum(M_b * e_id + e_data) / sum(M_b * M_K + (M_b - M_K)); erased user-blocks count as all bits wrong"


def nmse(h_true: np.ndarray, h_est: np.ndarray) -> Tuple[float, float]:
    """||H - H_hat||_F^2 / ||H||_F^2, linear and in dB (floored)"""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise DimensionError(f"channel shapes differ: {h_true.shape} vs {h_est.shape}")
    power = float(np.real(np.vdot(h_true, h_true)))
    if power == 0.0:
        raise DegenerateInputError("true channel is zero; NMSE is undefined")
    diff = h_true - h_est
    ratio = float(np.real(np.vdot(diff, diff))) / power
    return ratio, Helpers.to_db(ratio, Config.NMSE_FLOOR_DB)


@dataclass(frozen=True)
class BerCounts:
    id_errors: int
    data_errors: int
    numerator: int
    denominator: int
    erasures: int
    user_blocks: int
    id_bits: int
    data_bits: int

    @property
    def weighted(self) -> float:
        return self.numerator / self.denominator

    @property
    def ber_id(self) -> float:
        total = self.user_blocks * self.id_bits
        return self.id_errors / total if total else 0.0

    @property
    def ber_data(self) -> float:
        return self.data_errors / (self.user_blocks * self.data_bits)

    @property
    def erasure_rate(self) -> float:
        return self.erasures / self.user_blocks


def weighted_ber(truth: np.ndarray, recovered: np.ndarray, m_bits: int, id_bits: int) -> BerCounts:
    """Weighted bit error counts over every (user, block).

    `truth` is the K x J array of transmitted BlockMessage objects, `recovered`
    the K x J array of resolved codebook indices (ERASED for erasures).
    """
    recovered = np.asarray(recovered)
    if truth.shape != recovered.shape:
        raise AccountingError(f"coverage mismatch: truth {truth.shape}, recovered {recovered.shape}")

    data_bits = m_bits - id_bits
    e_id_total = e_data_total = erasures = 0
    for (user, block), msg in np.ndenumerate(truth):
        if msg is None or msg.user != user or msg.block != block:
            raise AccountingError(f"no transmitted message for user {user} in block {block}")
        index = int(recovered[user, block])
        if index == ERASED:
            e_id_total += id_bits
            e_data_total += data_bits
            erasures += 1
            continue
        if not 0 <= index < 2 ** m_bits:
            raise AccountingError(f"recovered index {index} outside the codebook")
        bits = Helpers.int_to_bits(index, m_bits)
        wrong = bits != msg.full_bits
        e_id_total += int(wrong[:id_bits].sum())
        e_data_total += int(wrong[id_bits:].sum())

    user_blocks = truth.size
    return BerCounts(
        id_errors=e_id_total,
        data_errors=e_data_total,
        numerator=m_bits * e_id_total + e_data_total,
        denominator=user_blocks * (m_bits * id_bits + data_bits),
        erasures=erasures,
        user_blocks=user_blocks,
        id_bits=id_bits,
        data_bits=data_bits,
    )


def data_rate(cfg: SystemConfig) -> float:
    """K (M_b - M_K) / M bits per channel use"""
    return cfg.n_users * cfg.data_bits / cfg.codeword_len


def id_overhead(cfg: SystemConfig) -> Dict[str, float]:
    """ID bits spent per user over the interval and their share of each code bit vector"""
    return {
        "id_bits_per_block": cfg.id_bits,
        "id_bits_per_interval": cfg.n_blocks * cfg.id_bits,
        "id_share": cfg.id_bits / cfg.bits_per_block,
    }


def mean_nmse_db(ratios) -> float:
    """dB of the mean linear NMSE"""
    ratios = list(ratios)
    if not ratios:
        return math.nan
    return Helpers.to_db(math.fsum(ratios) / len(ratios), Config.NMSE_FLOOR_DB)
