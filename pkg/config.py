import math
import os
from dataclasses import dataclass, asdict, replace as dc_replace
from typing import Any, Dict

from dotenv import load_dotenv

from utils.errors import ConfigError

load_dotenv()

VERSION = "1.0.0"


class Config:
    # Storage
    DATABASE_URL = os.getenv("DATABASE_URL", "sqlite:///ris_blind.db")
    OUTPUT_PATH = os.getenv("OUTPUT_PATH", "results")
    LOGS_PATH = os.getenv("LOGS_PATH", "logs")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
    TIMEZONE = os.getenv("TIMEZONE", "UTC")

    # Execution
    WORKERS = int(os.getenv("WORKERS", "1"))
    MASTER_SEED = int(os.getenv("MASTER_SEED", "2024"))

    # Default scenario
    N_B = int(os.getenv("N_B", "4"))
    N_R = int(os.getenv("N_R", "32"))
    K = int(os.getenv("K", "4"))
    G_B = int(os.getenv("G_B", "16"))
    G_R = int(os.getenv("G_R", "64"))
    L_RB = int(os.getenv("L_RB", "2"))
    L_RU = int(os.getenv("L_RU", "2"))
    M = int(os.getenv("M", "28"))
    M_B = int(os.getenv("M_B", "8"))
    J = int(os.getenv("J", "30"))
    SNR_DB = float(os.getenv("SNR_DB", "10"))

    # RIS pattern optimizer
    RIS_MAX_ITERS = int(os.getenv("RIS_MAX_ITERS", "500"))
    RIS_TOL = float(os.getenv("RIS_TOL", "1e-6"))
    RIS_ARMIJO_STEP = float(os.getenv("RIS_ARMIJO_STEP", "1.0"))
    RIS_ARMIJO_SHRINK = float(os.getenv("RIS_ARMIJO_SHRINK", "0.5"))
    RIS_ARMIJO_C = float(os.getenv("RIS_ARMIJO_C", "1e-4"))

    # NMSE floor reported for exact estimates
    NMSE_FLOOR_DB = -150.0

    @classmethod
    def validate(cls):
        """Validate environment-level settings"""
        if cls.WORKERS < 1:
            raise ConfigError("WORKERS must be at least 1")
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"Unknown LOG_LEVEL {cls.LOG_LEVEL!r}")
        if not 0.0 < cls.RIS_ARMIJO_SHRINK < 1.0:
            raise ConfigError("RIS_ARMIJO_SHRINK must lie in (0, 1)")
        if cls.RIS_MAX_ITERS < 0 or cls.RIS_TOL < 0:
            raise ConfigError("RIS optimizer limits must be non-negative")
        return True


@dataclass(frozen=True)
class SystemConfig:
    """Scenario dimensions shared by every module of one simulation"""

    n_bs_antennas: int = 4
    n_ris_elements: int = 32
    n_users: int = 4
    grid_bs: int = 16
    grid_ris: int = 64
    paths_rb: int = 2
    paths_ru: int = 2
    codeword_len: int = 28
    bits_per_block: int = 8
    n_blocks: int = 30
    snr_db: float = 10.0
    seed: int = 2024

    @property
    def id_bits(self) -> int:
        """M_K = ceil(log2 K)"""
        return math.ceil(math.log2(self.n_users)) if self.n_users > 1 else 0

    @property
    def n_codewords(self) -> int:
        return 2 ** self.bits_per_block

    @property
    def data_bits(self) -> int:
        return self.bits_per_block - self.id_bits

    @property
    def cascade_sparsity(self) -> int:
        return self.paths_rb * self.paths_ru

    def validate(self) -> "SystemConfig":
        counts = {
            "n_bs_antennas": self.n_bs_antennas,
            "n_ris_elements": self.n_ris_elements,
            "n_users": self.n_users,
            "grid_bs": self.grid_bs,
            "grid_ris": self.grid_ris,
            "paths_rb": self.paths_rb,
            "paths_ru": self.paths_ru,
            "codeword_len": self.codeword_len,
            "bits_per_block": self.bits_per_block,
            "n_blocks": self.n_blocks,
        }
        for name, value in counts.items():
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")

        if self.id_bits >= self.bits_per_block:
            raise ConfigError(
                f"{self.n_users} users need {self.id_bits} ID bits, "
                f"which leaves no data bits out of {self.bits_per_block}"
            )
        if self.grid_bs < self.n_bs_antennas:
            raise ConfigError("grid_bs must be at least n_bs_antennas")
        if self.grid_ris < self.n_ris_elements:
            raise ConfigError("grid_ris must be at least n_ris_elements")
        if self.cascade_sparsity > self.n_blocks * self.n_bs_antennas:
            raise ConfigError(
                f"cascade sparsity {self.cascade_sparsity} exceeds the "
                f"{self.n_blocks * self.n_bs_antennas} available measurements"
            )
        if self.paths_rb > self.grid_ris * self.grid_bs or self.paths_ru > self.grid_ris:
            raise ConfigError("more paths than grid points")
        if not math.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")
        return self

    def replace(self, **changes) -> "SystemConfig":
        return dc_replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown system fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_config(cls) -> "SystemConfig":
        """Default scenario from environment settings"""
        return cls(
            n_bs_antennas=Config.N_B,
            n_ris_elements=Config.N_R,
            n_users=Config.K,
            grid_bs=Config.G_B,
            grid_ris=Config.G_R,
            paths_rb=Config.L_RB,
            paths_ru=Config.L_RU,
            codeword_len=Config.M,
            bits_per_block=Config.M_B,
            n_blocks=Config.J,
            snr_db=Config.SNR_DB,
            seed=Config.MASTER_SEED,
        )
