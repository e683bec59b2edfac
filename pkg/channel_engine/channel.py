"""
On-grid Saleh-Valenzuela channels for the RIS-BS hop and every user-RIS hop,
together with their exact angular-domain factors and the merged cascades.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from config import SystemConfig
from channel_engine.dictionaries import SteeringDictionary
from utils.errors import DimensionError
from utils.helpers import Helpers

DUMP_MAGIC = "# ris-blind realization v1"


@dataclass(frozen=True)
class ChannelRealization:
    h_rb: np.ndarray                    # N_R x N_B
    d_rb: np.ndarray                    # G_R x G_B, L_RB nonzeros
    h_ru: Tuple[np.ndarray, ...]        # per user, N_R
    d_ru: Tuple[np.ndarray, ...]        # per user, G_R, L_RU nonzeros
    cascades: Tuple[np.ndarray, ...]    # per user, N_R x N_B
    d_cascade: Tuple[np.ndarray, ...]   # per user, G_R x G_B
    gains_rb: np.ndarray
    gains_ru: Tuple[np.ndarray, ...]
    paths_rb: Tuple[Tuple[int, int], ...]   # (RIS grid, BS grid) per path
    paths_ru: Tuple[Tuple[int, ...], ...]   # RIS grid indices per user

    @property
    def n_users(self) -> int:
        return len(self.cascades)


def merge_cascade(d_ru_k: np.ndarray, d_rb: np.ndarray, n_ris: int) -> np.ndarray:
    """Angular cascade D_k with F_R D_k F_B^H == diag(conj(h_RU,k)) H_RB.

    On the uniform grid the Khatri-Rao column for RIS-grid pair (i, j) is
    column (j - i) mod G_R of F_R scaled by 1/sqrt(N_R), so row m of D_k
    accumulates conj(d_RU,k[i]) * D_RB[j, :] over every pair with that shift.
    """
    d_ru_k = np.asarray(d_ru_k, dtype=np.complex128).ravel()
    d_rb = np.asarray(d_rb, dtype=np.complex128)
    if d_ru_k.shape[0] != d_rb.shape[0]:
        raise DimensionError("d_ru_k and d_rb must share the RIS grid")

    merged = np.zeros_like(d_rb)
    for i in np.flatnonzero(d_ru_k):
        # row m of the roll is d_rb[(m + i) mod G_R]
        merged += np.conj(d_ru_k[i]) * np.roll(d_rb, -int(i), axis=0)
    return merged / math.sqrt(n_ris)


def sample_channel(cfg: SystemConfig, dictionary: SteeringDictionary,
                   rng: np.random.Generator) -> ChannelRealization:
    """Draw one realization with on-grid angles and CN(0, 1/L) path gains"""
    n_r, n_b = cfg.n_ris_elements, cfg.n_bs_antennas
    g_r, g_b = cfg.grid_ris, cfg.grid_bs
    f_r, f_b = dictionary.f_ris, dictionary.f_bs

    # RIS-BS hop: distinct (RIS grid, BS grid) pairs
    flat = rng.choice(g_r * g_b, size=cfg.paths_rb, replace=False)
    rows, cols = np.unravel_index(flat, (g_r, g_b))
    gains_rb = Helpers.crandn(rng, cfg.paths_rb) * math.sqrt(1.0 / cfg.paths_rb)
    d_rb = np.zeros((g_r, g_b), dtype=np.complex128)
    d_rb[rows, cols] = math.sqrt(n_r * n_b / cfg.paths_rb) * gains_rb
    h_rb = f_r @ d_rb @ f_b.conj().T

    h_ru, d_ru, gains_ru, paths_ru, cascades, d_cascade = [], [], [], [], [], []
    for _ in range(cfg.n_users):
        idx = rng.choice(g_r, size=cfg.paths_ru, replace=False)
        gains = Helpers.crandn(rng, cfg.paths_ru) * math.sqrt(1.0 / cfg.paths_ru)
        d_k = np.zeros(g_r, dtype=np.complex128)
        d_k[idx] = math.sqrt(n_r / cfg.paths_ru) * gains
        h_k = f_r @ d_k

        h_ru.append(h_k)
        d_ru.append(d_k)
        gains_ru.append(gains)
        paths_ru.append(tuple(int(i) for i in idx))
        cascades.append(np.conj(h_k)[:, None] * h_rb)
        d_cascade.append(merge_cascade(d_k, d_rb, n_r))

    return ChannelRealization(
        h_rb=h_rb,
        d_rb=d_rb,
        h_ru=tuple(h_ru),
        d_ru=tuple(d_ru),
        cascades=tuple(cascades),
        d_cascade=tuple(d_cascade),
        gains_rb=gains_rb,
        gains_ru=tuple(gains_ru),
        paths_rb=tuple((int(r), int(c)) for r, c in zip(rows, cols)),
        paths_ru=tuple(paths_ru),
    )


# ==================== REGRESSION FIXTURES ====================

def _realization_arrays(channel: ChannelRealization) -> List[Tuple[str, np.ndarray]]:
    arrays = [("h_rb", channel.h_rb), ("d_rb", channel.d_rb)]
    for k in range(channel.n_users):
        arrays.append((f"h_ru_{k}", channel.h_ru[k].reshape(-1, 1)))
        arrays.append((f"d_ru_{k}", channel.d_ru[k].reshape(-1, 1)))
    for k in range(channel.n_users):
        arrays.append((f"h_{k}", channel.cascades[k]))
        arrays.append((f"d_{k}", channel.d_cascade[k]))
    return arrays


def dump_realization(channel: ChannelRealization, path: Union[str, Path]) -> Path:
    """Write the realization as `name rows cols` headers plus row-major `re im` pairs"""
    path = Path(path)
    lines = [DUMP_MAGIC]
    for name, arr in _realization_arrays(channel):
        rows, cols = arr.shape
        lines.append(f"{name} {rows} {cols}")
        for row in arr:
            lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_realization(path: Union[str, Path]) -> dict:
    """Read a dump back into a name -> array mapping"""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != DUMP_MAGIC:
        raise ValueError(f"{path} is not a realization dump")
    arrays = {}
    pos = 1
    while pos < len(text):
        if not text[pos].strip():
            pos += 1
            continue
        name, rows, cols = text[pos].split()
        rows, cols = int(rows), int(cols)
        data = np.empty((rows, cols), dtype=np.complex128)
        for r in range(rows):
            values = [float(v) for v in text[pos + 1 + r].split()]
            data[r] = np.array(values[0::2]) + 1j * np.array(values[1::2])
        arrays[name] = data
        pos += rows + 1
    return arrays
