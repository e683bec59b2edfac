"""
Monte-Carlo experiment driver.

Every trial draws its own channel, messages and (per policy) codebook and
RIS schedule from a generator derived from (master seed, sweep point, trial),
so results do not depend on how trials are spread over worker processes.
"""

import csv
import itertools
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import yaml

from config import Config, SystemConfig, VERSION
from channel_engine.airlink import ReceivedBlocks, TransmissionScenario, synthesize
from channel_engine.channel import ChannelRealization, sample_channel
from channel_engine.dictionaries import build_dictionaries, steering_matrix
from coding.codebook import Codebook, draw_messages, gen_codebook
from metrics.metrics import WEIGHTED_BER_FORMULA, data_rate, id_overhead, mean_nmse_db, nmse, weighted_ber
from recovery_engine.cascade import CascadeEstimate, SensingMatrix, build_sensing_matrix, estimate_cascades
from recovery_engine.somp import RecoveryOutput, recover_all_blocks
from ris_engine.designer import OptimizerOptions, optimize_schedule
from ris_engine.schedules import PhaseSchedule, fixed_schedule, import_schedule, random_schedule
from utils.errors import ConfigError, SimulationError
from utils.helpers import STREAM_CODEBOOK, STREAM_SCHEDULE, STREAM_TRIAL, Helpers
from utils.logger import logger

CSV_HEADER = [
    "snr_db", "m", "j", "k", "schedule", "trials",
    "ber_weighted", "ber_id", "ber_data", "nmse_db", "erasure_rate", "data_rate",
]
SCHEDULE_SOURCES = ("random", "optimized", "fixed", "file")
CODEBOOK_POLICIES = ("fresh", "frozen")

# YAML section -> {key: ExperimentSpec field}
SECTION_FIELDS = {
    "sweep": {"snr_db": "snr_db", "m": "m", "j": "j", "k": "k"},
    "schedule": {"source": "schedule", "path": "schedule_path", "max_iters": "ris_max_iters", "tol": "ris_tol"},
    "run": {
        "trials": "trials",
        "master_seed": "master_seed",
        "workers": "workers",
        "somp_iters": "somp_iters",
        "omp_residual_tol": "omp_residual_tol",
        "omp_max_atoms": "omp_max_atoms",
        "codebook": "codebook",
        "store_trials": "store_trials",
        "noiseless": "noiseless",
    },
    "output": {"dir": "output_dir", "csv": "csv_name", "plots": "plots"},
}


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass(frozen=True)
class SweepPoint:
    index: int
    cfg: SystemConfig


@dataclass
class ExperimentSpec:
    system: SystemConfig = field(default_factory=SystemConfig.from_config)
    snr_db: List[float] = field(default_factory=list)
    m: List[int] = field(default_factory=list)
    j: List[int] = field(default_factory=list)
    k: List[int] = field(default_factory=list)
    schedule: str = "random"
    schedule_path: Optional[str] = None
    ris_max_iters: int = Config.RIS_MAX_ITERS
    ris_tol: float = Config.RIS_TOL
    trials: int = 100
    master_seed: int = Config.MASTER_SEED
    workers: int = Config.WORKERS
    somp_iters: Optional[int] = None
    omp_residual_tol: Optional[float] = None
    omp_max_atoms: Optional[int] = None
    codebook: str = "fresh"
    store_trials: bool = True
    noiseless: bool = False
    output_dir: str = Config.OUTPUT_PATH
    csv_name: str = "results.csv"
    plots: bool = True

    # ---------- construction ----------

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        """Build from the nested YAML layout (system / sweep / schedule / run / output)"""
        data = dict(data or {})
        unknown = set(data) - set(SECTION_FIELDS) - {"system"}
        if unknown:
            raise ConfigError(f"Unknown experiment sections: {sorted(unknown)}")

        base = SystemConfig.from_config().to_dict()
        base.update(data.get("system") or {})
        kwargs: Dict[str, Any] = {"system": SystemConfig.from_dict(base)}

        for section, mapping in SECTION_FIELDS.items():
            values = data.get(section) or {}
            if not isinstance(values, dict):
                raise ConfigError(f"Section {section!r} must be a mapping")
            bad = set(values) - set(mapping)
            if bad:
                raise ConfigError(f"Unknown keys in {section!r}: {sorted(bad)}")
            for key, value in values.items():
                kwargs[mapping[key]] = value

        for axis in ("snr_db", "m", "j", "k"):
            if axis in kwargs:
                kwargs[axis] = _as_list(kwargs[axis])
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentSpec":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Experiment file {path} not found")
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            raise ConfigError(f"Experiment file {path} is not valid YAML: {e}") from e
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"Experiment file {path} must contain a mapping")
        return cls.from_dict(data or {})

    def with_overrides(self, **overrides) -> "ExperimentSpec":
        """Apply CLI flags; None means "not given". System fields are accepted by name."""
        spec_fields = {f.name for f in fields(self)} - {"system"}
        system_fields = set(SystemConfig.__dataclass_fields__)
        spec_changes, system_changes = {}, {}
        for name, value in overrides.items():
            if value is None:
                continue
            if name in spec_fields:
                spec_changes[name] = _as_list(value) if name in ("snr_db", "m", "j", "k") else value
            elif name in system_fields:
                system_changes[name] = value
            else:
                raise ConfigError(f"Unknown override {name!r}")
        system = self.system.replace(**system_changes) if system_changes else self.system
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(spec_changes)
        values["system"] = system
        return ExperimentSpec(**values)

    # ---------- validation ----------

    def points(self) -> List[SweepPoint]:
        """Cartesian product over (k, m, j, snr_db), in that nesting order"""
        ks = self.k or [self.system.n_users]
        ms = self.m or [self.system.codeword_len]
        js = self.j or [self.system.n_blocks]
        snrs = self.snr_db or [self.system.snr_db]
        points = []
        for index, (k, m, j, snr) in enumerate(itertools.product(ks, ms, js, snrs)):
            cfg = self.system.replace(
                n_users=int(k), codeword_len=int(m), n_blocks=int(j),
                snr_db=float(snr), seed=int(self.master_seed),
            )
            points.append(SweepPoint(index=index, cfg=cfg))
        return points

    def validate(self) -> "ExperimentSpec":
        if self.schedule not in SCHEDULE_SOURCES:
            raise ConfigError(f"schedule must be one of {SCHEDULE_SOURCES}, got {self.schedule!r}")
        if self.schedule == "file" and not self.schedule_path:
            raise ConfigError("schedule source 'file' needs schedule_path")
        if self.codebook not in CODEBOOK_POLICIES:
            raise ConfigError(f"codebook must be one of {CODEBOOK_POLICIES}, got {self.codebook!r}")
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        if self.omp_residual_tol is not None and not 0.0 < float(self.omp_residual_tol) < 1.0:
            raise ConfigError("omp_residual_tol must lie in (0, 1)")
        if int(self.ris_max_iters) < 0 or float(self.ris_tol) < 0.0:
            raise ConfigError("RIS optimizer limits must be non-negative")
        if self.omp_max_atoms is not None and int(self.omp_max_atoms) < 1:
            raise ConfigError("omp_max_atoms must be at least 1")
        file_schedule = import_schedule(self.schedule_path) if self.schedule == "file" else None

        for point in self.points():
            cfg = point.cfg.validate()
            limit = min(cfg.codeword_len, cfg.n_codewords)
            if cfg.n_users > limit:
                raise ConfigError(f"K={cfg.n_users} users cannot be separated with M={cfg.codeword_len}")
            if self.somp_iters is not None and not cfg.n_users <= int(self.somp_iters) <= limit:
                raise ConfigError(f"somp_iters must lie in [{cfg.n_users}, {limit}]")
            if file_schedule is not None and file_schedule.psi.shape != (cfg.n_ris_elements, cfg.n_blocks):
                raise ConfigError(
                    f"schedule file {self.schedule_path} is {file_schedule.n_ris}x{file_schedule.n_blocks}, "
                    f"sweep point N_R={cfg.n_ris_elements} J={cfg.n_blocks} needs "
                    f"{cfg.n_ris_elements}x{cfg.n_blocks}"
                )
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Nested layout, the inverse of from_dict"""
        out: Dict[str, Any] = {"system": self.system.to_dict()}
        for section, mapping in SECTION_FIELDS.items():
            out[section] = {key: getattr(self, name) for key, name in mapping.items()}
        return out


@dataclass(frozen=True)
class TrialTask:
    point_index: int
    trial_index: int
    cfg: SystemConfig
    schedule: str
    schedule_path: Optional[str]
    master_seed: int
    ris_max_iters: int
    ris_tol: float
    somp_iters: Optional[int]
    omp_residual_tol: Optional[float]
    omp_max_atoms: Optional[int]
    codebook: str
    noiseless: bool


@dataclass
class TrialRecord:
    point_index: int
    trial_index: int
    snr_db: float
    m: int
    j: int
    k: int
    schedule: str
    ber_numerator: int
    ber_denominator: int
    id_errors: int
    data_errors: int
    erasures: int
    user_blocks: int
    id_bits: int
    data_bits: int
    nmse_per_user: List[float]
    nmse_db_per_user: List[float]
    failed: bool = False
    error: str = ""
    runtime: float = 0.0

    @property
    def ber_weighted(self) -> float:
        return self.ber_numerator / self.ber_denominator

    @property
    def nmse_mean(self) -> float:
        return math.fsum(self.nmse_per_user) / len(self.nmse_per_user)

    def to_row(self) -> Dict[str, Any]:
        """Columns of the TrialLog table"""
        return {
            "point_index": self.point_index,
            "trial_index": self.trial_index,
            "snr_db": self.snr_db,
            "m": self.m,
            "j": self.j,
            "k": self.k,
            "schedule": self.schedule,
            "ber_numerator": self.ber_numerator,
            "ber_denominator": self.ber_denominator,
            "id_errors": self.id_errors,
            "data_errors": self.data_errors,
            "erasures": self.erasures,
            "user_blocks": self.user_blocks,
            "nmse_mean": self.nmse_mean,
            "nmse_per_user": list(self.nmse_per_user),
            "failed": self.failed,
            "error": self.error or None,
            "runtime": self.runtime,
        }


@dataclass
class TrialOutcome:
    """Everything one trial produced, for the demo and for tests"""
    record: TrialRecord
    book: Optional[Codebook] = None
    channels: Optional[ChannelRealization] = None
    schedule: Optional[PhaseSchedule] = None
    messages: Optional[np.ndarray] = None
    received: Optional[ReceivedBlocks] = None
    recovery: Optional[RecoveryOutput] = None
    estimate: Optional[CascadeEstimate] = None


@dataclass(frozen=True)
class PointSummary:
    snr_db: float
    m: int
    j: int
    k: int
    schedule: str
    trials: int
    failed: int
    ber_weighted: float
    ber_id: float
    ber_data: float
    nmse_db: float
    erasure_rate: float
    data_rate: float

    def csv_row(self) -> List[str]:
        return [
            repr(float(self.snr_db)), str(self.m), str(self.j), str(self.k), self.schedule, str(self.trials),
            repr(self.ber_weighted), repr(self.ber_id), repr(self.ber_data),
            repr(self.nmse_db), repr(self.erasure_rate), repr(self.data_rate),
        ]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: List[TrialRecord]
    summaries: List[PointSummary]
    csv_path: Optional[Path] = None
    meta_path: Optional[Path] = None
    plot_paths: List[Path] = field(default_factory=list)
    run_id: Optional[int] = None


# ==================== SCHEDULE / CODEBOOK CACHES ====================

@lru_cache(maxsize=16)
def optimized_schedule(n_ris: int, grid_ris: int, j_blocks: int, master_seed: int,
                       max_iters: int, tol: float) -> PhaseSchedule:
    """Designed once per (N_R, G_R, J) from a seeded random start"""
    init_rng = Helpers.derive_rng(master_seed, STREAM_SCHEDULE, n_ris, grid_ris, j_blocks)
    init = random_schedule(n_ris, j_blocks, init_rng)
    opts = OptimizerOptions(max_iters=max_iters, tol=tol)
    result = optimize_schedule(steering_matrix(n_ris, grid_ris), n_ris, j_blocks, init, opts)
    logger.debug(
        f"Optimized schedule {n_ris}x{j_blocks}: objective {result.trace[0]:.4g} -> {result.trace[-1]:.4g} "
        f"in {result.iterations} iterations"
    )
    return result.schedule


@lru_cache(maxsize=8)
def _file_schedule(path: str, n_ris: int, j_blocks: int) -> PhaseSchedule:
    return import_schedule(path, n_ris, j_blocks)


@lru_cache(maxsize=64)
def _frozen_codebook(cfg: SystemConfig, master_seed: int, point_index: int) -> Codebook:
    rng = Helpers.derive_rng(master_seed, STREAM_CODEBOOK, point_index)
    return gen_codebook(cfg.codeword_len, cfg.bits_per_block, cfg.n_users, rng)


def _schedule_for(task: TrialTask, rng: Optional[np.random.Generator]) -> PhaseSchedule:
    cfg = task.cfg
    if task.schedule == "random":
        return random_schedule(cfg.n_ris_elements, cfg.n_blocks, rng)
    if task.schedule == "fixed":
        return fixed_schedule(cfg.n_ris_elements, cfg.n_blocks, rng)
    if task.schedule == "optimized":
        return optimized_schedule(
            cfg.n_ris_elements, cfg.grid_ris, cfg.n_blocks, task.master_seed,
            int(task.ris_max_iters), float(task.ris_tol),
        )
    return _file_schedule(str(task.schedule_path), cfg.n_ris_elements, cfg.n_blocks)


@lru_cache(maxsize=16)
def _shared_sensing(cfg: SystemConfig, source: str, path: Optional[str], master_seed: int,
                    max_iters: int, tol: float) -> SensingMatrix:
    """Q for schedules shared by every trial of a point (optimized or file)"""
    task = TrialTask(
        point_index=-1, trial_index=-1, cfg=cfg, schedule=source, schedule_path=path,
        master_seed=master_seed, ris_max_iters=max_iters, ris_tol=tol,
        somp_iters=None, omp_residual_tol=None, omp_max_atoms=None, codebook="fresh", noiseless=False,
    )
    dictionary = build_dictionaries(cfg)
    return build_sensing_matrix(dictionary.f_bs, dictionary.f_ris, _schedule_for(task, None))


def _sensing_for(task: TrialTask, schedule: PhaseSchedule) -> SensingMatrix:
    if task.schedule in ("optimized", "file"):
        # snr_db does not enter Q
        cfg = task.cfg.replace(snr_db=0.0)
        return _shared_sensing(
            cfg, task.schedule, task.schedule_path, task.master_seed,
            int(task.ris_max_iters), float(task.ris_tol),
        )
    dictionary = build_dictionaries(task.cfg)
    return build_sensing_matrix(dictionary.f_bs, dictionary.f_ris, schedule)


# ==================== TRIALS ====================

def _empty_record(task: TrialTask) -> Dict[str, Any]:
    cfg = task.cfg
    return {
        "point_index": task.point_index,
        "trial_index": task.trial_index,
        "snr_db": cfg.snr_db,
        "m": cfg.codeword_len,
        "j": cfg.n_blocks,
        "k": cfg.n_users,
        "schedule": task.schedule,
        "id_bits": cfg.id_bits,
        "data_bits": cfg.data_bits,
    }


def failed_record(task: TrialTask, error: str, runtime: float = 0.0) -> TrialRecord:
    """A failed trial counts as total loss: every bit wrong, every user erased, NMSE of 1"""
    cfg = task.cfg
    user_blocks = cfg.n_users * cfg.n_blocks
    per_block = cfg.bits_per_block * cfg.id_bits + cfg.data_bits
    return TrialRecord(
        **_empty_record(task),
        ber_numerator=user_blocks * per_block,
        ber_denominator=user_blocks * per_block,
        id_errors=user_blocks * cfg.id_bits,
        data_errors=user_blocks * cfg.data_bits,
        erasures=user_blocks,
        user_blocks=user_blocks,
        nmse_per_user=[1.0] * cfg.n_users,
        nmse_db_per_user=[0.0] * cfg.n_users,
        failed=True,
        error=error,
        runtime=runtime,
    )


def execute_trial(task: TrialTask) -> TrialOutcome:
    """Run one trial end to end. ConfigError propagates; other simulation errors are recorded."""
    started = time.perf_counter()
    cfg = task.cfg
    rng = Helpers.derive_rng(task.master_seed, task.point_index, task.trial_index, STREAM_TRIAL)
    try:
        dictionary = build_dictionaries(cfg)
        if task.codebook == "frozen":
            book = _frozen_codebook(cfg, task.master_seed, task.point_index)
        else:
            book = gen_codebook(cfg.codeword_len, cfg.bits_per_block, cfg.n_users, rng)
        channels = sample_channel(cfg, dictionary, rng)
        messages = draw_messages(book, cfg.n_blocks, rng)
        schedule = _schedule_for(task, rng)

        scenario = TransmissionScenario(cfg=cfg, book=book, channels=channels, schedule=schedule, messages=messages)
        received = synthesize(scenario, cfg.snr_db, rng, noiseless=task.noiseless)
        recovery = recover_all_blocks(received, book, cfg, task.somp_iters)

        sensing = _sensing_for(task, schedule)
        estimate = estimate_cascades(
            recovery.g_hat, recovery.erasure_mask, sensing,
            dictionary.f_bs, dictionary.f_ris, cfg, task.omp_residual_tol, task.omp_max_atoms,
        )

        counts = weighted_ber(messages, recovery.indices, cfg.bits_per_block, cfg.id_bits)
        errors = [nmse(channels.cascades[u.user], u.H_hat) for u in estimate.users]
    except ConfigError:
        raise
    except SimulationError as e:
        logger.warning(f"Trial {task.trial_index} of point {task.point_index} failed: {type(e).__name__}: {e}")
        return TrialOutcome(record=failed_record(task, f"{type(e).__name__}: {e}", time.perf_counter() - started))

    record = TrialRecord(
        **_empty_record(task),
        ber_numerator=counts.numerator,
        ber_denominator=counts.denominator,
        id_errors=counts.id_errors,
        data_errors=counts.data_errors,
        erasures=counts.erasures,
        user_blocks=counts.user_blocks,
        nmse_per_user=[ratio for ratio, _ in errors],
        nmse_db_per_user=[db for _, db in errors],
        runtime=time.perf_counter() - started,
    )
    return TrialOutcome(
        record=record, book=book, channels=channels, schedule=schedule, messages=messages,
        received=received, recovery=recovery, estimate=estimate,
    )


def run_trial(task: TrialTask) -> TrialRecord:
    """Picklable worker entry point"""
    return execute_trial(task).record


def iter_tasks(spec: ExperimentSpec, points: Sequence[SweepPoint] = None) -> Iterator[TrialTask]:
    for point in points or spec.points():
        for trial in range(int(spec.trials)):
            yield make_task(spec, point, trial)


def make_task(spec: ExperimentSpec, point: SweepPoint, trial: int) -> TrialTask:
    return TrialTask(
        point_index=point.index,
        trial_index=trial,
        cfg=point.cfg,
        schedule=spec.schedule,
        schedule_path=spec.schedule_path,
        master_seed=int(spec.master_seed),
        ris_max_iters=int(spec.ris_max_iters),
        ris_tol=float(spec.ris_tol),
        somp_iters=None if spec.somp_iters is None else int(spec.somp_iters),
        omp_residual_tol=None if spec.omp_residual_tol is None else float(spec.omp_residual_tol),
        omp_max_atoms=None if spec.omp_max_atoms is None else int(spec.omp_max_atoms),
        codebook=spec.codebook,
        noiseless=bool(spec.noiseless),
    )


# ==================== AGGREGATION ====================

def aggregate(records: Sequence[TrialRecord], points: Sequence[SweepPoint], schedule: str) -> List[PointSummary]:
    """Per-point means; the result does not depend on the order of `records`"""
    by_point: Dict[int, List[TrialRecord]] = {}
    for record in records:
        by_point.setdefault(record.point_index, []).append(record)

    summaries = []
    for point in points:
        group = sorted(by_point.get(point.index, []), key=lambda r: r.trial_index)
        if not group:
            continue
        cfg = point.cfg
        user_blocks = sum(r.user_blocks for r in group)
        id_total = user_blocks * cfg.id_bits
        summaries.append(PointSummary(
            snr_db=cfg.snr_db,
            m=cfg.codeword_len,
            j=cfg.n_blocks,
            k=cfg.n_users,
            schedule=schedule,
            trials=len(group),
            failed=sum(r.failed for r in group),
            ber_weighted=sum(r.ber_numerator for r in group) / sum(r.ber_denominator for r in group),
            ber_id=sum(r.id_errors for r in group) / id_total if id_total else 0.0,
            ber_data=sum(r.data_errors for r in group) / (user_blocks * cfg.data_bits),
            nmse_db=mean_nmse_db(r.nmse_mean for r in group),
            erasure_rate=sum(r.erasures for r in group) / user_blocks,
            data_rate=data_rate(cfg),
        ))
    return summaries


def write_csv(summaries: Sequence[PointSummary], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for summary in summaries:
            writer.writerow(summary.csv_row())
    return path


def write_meta(spec: ExperimentSpec, path: Union[str, Path]) -> Path:
    """YAML sidecar describing how the CSV columns were computed"""
    path = Path(path)
    base = spec.system
    meta = {
        "version": VERSION,
        "master_seed": int(spec.master_seed),
        "weighted_ber": WEIGHTED_BER_FORMULA,
        "nmse_db": "10*log10 of the mean linear NMSE over trials, floored at %g dB" % Config.NMSE_FLOOR_DB,
        "snr": "receive-referenced: mean noiseless |Y|^2 per entry over noise variance",
        "failed_trials": "counted as total loss (all bits wrong, NMSE = 1)",
        "schedule": spec.schedule,
        "codebook": spec.codebook,
        "system": base.to_dict(),
        "data_rate": data_rate(base),
        "id_overhead": id_overhead(base),
        "experiment": spec.to_dict(),
    }
    path.write_text(yaml.safe_dump(meta, sort_keys=False), encoding="utf-8")
    return path


# ==================== DRIVER ====================

def _records(spec: ExperimentSpec, points: Sequence[SweepPoint]) -> Iterator[TrialRecord]:
    tasks = iter_tasks(spec, points)
    if int(spec.workers) == 1:
        for task in tasks:
            yield run_trial(task)
        return
    # imap keeps submission order
    with mp.Pool(processes=int(spec.workers)) as pool:
        for record in pool.imap(run_trial, tasks, chunksize=max(1, int(spec.trials) // (4 * int(spec.workers)))):
            yield record


def run_experiment(spec: ExperimentSpec, write_outputs: bool = True) -> ExperimentResult:
    """Run every sweep point, stream trial rows to storage and emit CSV, sidecar and plots"""
    spec.validate()
    points = spec.points()
    logger.info(
        f"Sweep: {len(points)} points x {spec.trials} trials, schedule={spec.schedule}, "
        f"codebook={spec.codebook}, workers={spec.workers}, seed={spec.master_seed}"
    )

    storage = None
    run_id = None
    if spec.store_trials:
        from database.storage import StorageManager
        storage = StorageManager
        storage.use_database()
        run_id = storage.start_run(spec.to_dict(), int(spec.master_seed), len(points), int(spec.trials))

    records: List[TrialRecord] = []
    pending: List[TrialRecord] = []
    status = "aborted"
    try:
        for record in _records(spec, points):
            records.append(record)
            pending.append(record)
            if record.trial_index == int(spec.trials) - 1:
                if storage:
                    storage.log_trials(run_id, [r.to_row() for r in pending])
                done = list(pending)
                pending.clear()
                logger.info(
                    f"Point {record.point_index + 1}/{len(points)} (snr={record.snr_db:g} dB, M={record.m}, "
                    f"J={record.j}, K={record.k}): weighted BER "
                    f"{sum(r.ber_numerator for r in done) / sum(r.ber_denominator for r in done):.4g}, "
                    f"{sum(r.failed for r in done)} failed"
                )
        status = "finished"
    finally:
        if storage and pending:
            storage.log_trials(run_id, [r.to_row() for r in pending])

        summaries = aggregate(records, points, spec.schedule)
        result = ExperimentResult(spec=spec, records=records, summaries=summaries, run_id=run_id)
        if write_outputs and status == "finished":
            out_dir = Path(spec.output_dir)
            result.csv_path = write_csv(summaries, out_dir / spec.csv_name)
            result.meta_path = write_meta(spec, result.csv_path.with_suffix(".meta.yaml"))
            if spec.plots:
                from metrics.plots import plot_summaries
                result.plot_paths = plot_summaries(summaries, out_dir, Path(spec.csv_name).stem)
            logger.info(f"Results written to {result.csv_path}")
        if storage:
            storage.finish_run(run_id, status, str(result.csv_path) if result.csv_path else None)
    return result
