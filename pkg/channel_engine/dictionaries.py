import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from config import SystemConfig


def steering_vector(n_elements: int, spatial_freq: float) -> np.ndarray:
    """Unit-norm ULA response exp(i*pi*n*f)/sqrt(N) for half-wavelength spacing.

    `spatial_freq` is the cosine of the angle, taken modulo 2 into [0, 2).
    """
    if n_elements < 1:
        raise ValueError("n_elements must be at least 1")
    freq = math.fmod(spatial_freq, 2.0)
    if freq < 0.0:
        freq += 2.0
    n = np.arange(n_elements)
    return np.exp(1j * np.pi * n * freq) / math.sqrt(n_elements)


def grid_frequencies(grid_size: int) -> np.ndarray:
    """Uniform spatial-frequency grid 2g/G, g = 0..G-1"""
    return 2.0 * np.arange(grid_size) / grid_size


def steering_matrix(n_elements: int, grid_size: int) -> np.ndarray:
    n = np.arange(n_elements)[:, None]
    freqs = grid_frequencies(grid_size)[None, :]
    return np.exp(1j * np.pi * n * freqs) / math.sqrt(n_elements)


@dataclass(frozen=True)
class SteeringDictionary:
    f_bs: np.ndarray        # N_B x G_B
    f_ris: np.ndarray       # N_R x G_R
    freqs_bs: np.ndarray
    freqs_ris: np.ndarray

    @property
    def n_bs(self) -> int:
        return self.f_bs.shape[0]

    @property
    def n_ris(self) -> int:
        return self.f_ris.shape[0]

    @property
    def grid_bs(self) -> int:
        return self.f_bs.shape[1]

    @property
    def grid_ris(self) -> int:
        return self.f_ris.shape[1]


@lru_cache(maxsize=32)
def _cached_dictionaries(n_bs: int, grid_bs: int, n_ris: int, grid_ris: int) -> SteeringDictionary:
    f_bs = steering_matrix(n_bs, grid_bs)
    f_ris = steering_matrix(n_ris, grid_ris)
    f_bs.setflags(write=False)
    f_ris.setflags(write=False)
    return SteeringDictionary(
        f_bs=f_bs,
        f_ris=f_ris,
        freqs_bs=grid_frequencies(grid_bs),
        freqs_ris=grid_frequencies(grid_ris),
    )


def build_dictionaries(cfg: SystemConfig) -> SteeringDictionary:
    """BS and RIS array-response dictionaries on the uniform cosine grid.

    The RIS grid is shared by both hops; the same uniform grid is what makes
    the cascade merge an exact modular shift.
    """
    return _cached_dictionaries(cfg.n_bs_antennas, cfg.grid_bs, cfg.n_ris_elements, cfg.grid_ris)
