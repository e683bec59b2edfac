import math
from typing import Sequence

import numpy as np

from config import Config

# Named random streams; the integers only need to be distinct and stable
STREAM_TRIAL = 0
STREAM_SCHEDULE = 1
STREAM_CODEBOOK = 2


class Helpers:
    @staticmethod
    def int_to_bits(value: int, width: int) -> np.ndarray:
        """MSB-first binary expansion of value on `width` positions"""
        if width == 0:
            return np.zeros(0, dtype=np.uint8)
        if value < 0 or value >= 2 ** width:
            raise ValueError(f"{value} does not fit in {width} bits")
        shifts = np.arange(width - 1, -1, -1)
        return ((value >> shifts) & 1).astype(np.uint8)

    @staticmethod
    def bits_to_int(bits: Sequence[int]) -> int:
        """Decimal value of an MSB-first bit vector"""
        value = 0
        for bit in np.asarray(bits, dtype=np.int64).ravel():
            if bit not in (0, 1):
                raise ValueError(f"not a bit: {bit}")
            value = (value << 1) | int(bit)
        return value

    @staticmethod
    def derive_rng(*keys: int) -> np.random.Generator:
        """Independent generator for an integer key path, e.g. (seed, point, trial)"""
        return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))

    @staticmethod
    def to_db(ratio: float, floor_db: float = Config.NMSE_FLOOR_DB) -> float:
        if ratio <= 0.0:
            return floor_db
        return max(10.0 * math.log10(ratio), floor_db)

    @staticmethod
    def from_db(value_db: float) -> float:
        return 10.0 ** (value_db / 10.0)

    @staticmethod
    def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
        """Circularly-symmetric CN(0, 1) samples"""
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
