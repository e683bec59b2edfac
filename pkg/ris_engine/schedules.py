import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from utils.errors import ConfigError, DimensionError
from utils.logger import logger

ORIGINS = ("random", "optimized", "fixed", "file")


@dataclass(frozen=True)
class PhaseSchedule:
    """RIS reflection pattern, column j is the phase vector of block j"""

    psi: np.ndarray     # N_R x J, unit modulus
    origin: str = "random"

    @property
    def n_ris(self) -> int:
        return self.psi.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.psi.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.psi[:, j]

    def phases(self) -> np.ndarray:
        """Phases in (0, 2*pi]"""
        theta = np.angle(self.psi)
        return np.where(theta <= 0.0, theta + 2.0 * math.pi, theta)

    def max_modulus_error(self) -> float:
        return float(np.max(np.abs(np.abs(self.psi) - 1.0)))


def from_phases(theta: np.ndarray, origin: str) -> PhaseSchedule:
    psi = np.exp(1j * np.asarray(theta, dtype=float))
    psi.setflags(write=False)
    return PhaseSchedule(psi=psi, origin=origin)


def random_schedule(n_ris: int, j_blocks: int, rng: np.random.Generator) -> PhaseSchedule:
    """I.i.d. phases uniform on (0, 2*pi]"""
    theta = 2.0 * math.pi * (1.0 - rng.random((n_ris, j_blocks)))
    return from_phases(theta, "random")


def fixed_schedule(n_ris: int, j_blocks: int, rng: np.random.Generator) -> PhaseSchedule:
    """One random phase vector held for every block (no reconfiguration)"""
    theta = 2.0 * math.pi * (1.0 - rng.random((n_ris, 1)))
    return from_phases(np.repeat(theta, j_blocks, axis=1), "fixed")


def export_schedule(schedule: PhaseSchedule, path: Union[str, Path]) -> Path:
    """J lines of N_R phases in radians"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    theta = schedule.phases()
    lines = [" ".join(repr(float(v)) for v in theta[:, j]) for j in range(schedule.n_blocks)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Schedule ({schedule.n_ris}x{schedule.n_blocks}, {schedule.origin}) written to {path}")
    return path


def import_schedule(path: Union[str, Path], n_ris: int = None, j_blocks: int = None) -> PhaseSchedule:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"schedule file {path} not found")
    rows = [line.split() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    try:
        theta = np.array([[float(v) for v in row] for row in rows], dtype=float).T
    except ValueError as e:
        raise ConfigError(f"schedule file {path} is malformed: {e}") from e
    if theta.ndim != 2:
        raise ConfigError(f"schedule file {path} has ragged lines")
    if n_ris is not None and theta.shape[0] != n_ris:
        raise DimensionError(f"schedule has {theta.shape[0]} elements, scenario needs {n_ris}")
    if j_blocks is not None and theta.shape[1] != j_blocks:
        raise DimensionError(f"schedule has {theta.shape[1]} blocks, scenario needs {j_blocks}")
    return from_phases(theta, "file")
