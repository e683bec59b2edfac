#!/usr/bin/env python3
"""
RIS blind channel estimation simulator - command line entry point

    python main.py sweep --config experiments/ber_vs_snr.yaml --trials 100
    python main.py optimize-ris --j 30 --output schedules/opt_30.txt
    python main.py demo --schedule optimized
    python main.py selftest
"""

import argparse
import signal
import sys
from pathlib import Path

# Add current directory to Python path
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from config import Config, VERSION
from utils.errors import ConfigError, SimulationError
from utils.logger import logger, set_console_level

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class CliParser(argparse.ArgumentParser):
    """Argument problems are configuration errors (exit code 1)"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_scenario_flags(parser: argparse.ArgumentParser):
    """Flags shared by `sweep` and `demo`; each mirrors an experiment-file field"""
    parser.add_argument("--config", help="experiment YAML file")

    axes = parser.add_argument_group("sweep axes")
    axes.add_argument("--snr-db", dest="snr_db", type=float, nargs="+")
    axes.add_argument("--m", type=int, nargs="+", help="codeword length(s) M")
    axes.add_argument("--j", type=int, nargs="+", help="block count(s) J")
    axes.add_argument("--k", type=int, nargs="+", help="user count(s) K")

    system = parser.add_argument_group("system")
    system.add_argument("--n-bs-antennas", dest="n_bs_antennas", type=int)
    system.add_argument("--n-ris-elements", dest="n_ris_elements", type=int)
    system.add_argument("--grid-bs", dest="grid_bs", type=int)
    system.add_argument("--grid-ris", dest="grid_ris", type=int)
    system.add_argument("--paths-rb", dest="paths_rb", type=int)
    system.add_argument("--paths-ru", dest="paths_ru", type=int)
    system.add_argument("--bits-per-block", dest="bits_per_block", type=int)

    sched = parser.add_argument_group("schedule")
    sched.add_argument("--schedule", choices=("random", "optimized", "fixed", "file"))
    sched.add_argument("--schedule-path", dest="schedule_path")
    sched.add_argument("--ris-max-iters", dest="ris_max_iters", type=int)
    sched.add_argument("--ris-tol", dest="ris_tol", type=float)

    run = parser.add_argument_group("run")
    run.add_argument("--trials", type=int)
    run.add_argument("--master-seed", dest="master_seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--somp-iters", dest="somp_iters", type=int)
    run.add_argument("--omp-residual-tol", dest="omp_residual_tol", type=float)
    run.add_argument("--omp-max-atoms", dest="omp_max_atoms", type=int)
    run.add_argument("--freeze-codebook", dest="codebook", action="store_const", const="frozen")
    run.add_argument("--no-store", dest="store_trials", action="store_const", const=False)
    run.add_argument("--noiseless", action="store_const", const=True)

    out = parser.add_argument_group("output")
    out.add_argument("--output-dir", dest="output_dir")
    out.add_argument("--csv-name", dest="csv_name")
    out.add_argument("--no-plots", dest="plots", action="store_const", const=False)


SCENARIO_KEYS = (
    "snr_db", "m", "j", "k",
    "n_bs_antennas", "n_ris_elements", "grid_bs", "grid_ris", "paths_rb", "paths_ru", "bits_per_block",
    "schedule", "schedule_path", "ris_max_iters", "ris_tol",
    "trials", "master_seed", "workers", "somp_iters", "omp_residual_tol", "omp_max_atoms", "codebook", "store_trials", "noiseless",
    "output_dir", "csv_name", "plots",
)


def build_parser() -> CliParser:
    parser = CliParser(prog="ris-blind", description="Blind channel estimation for RIS-assisted multiuser uplinks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="console at DEBUG")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="console at WARNING")

    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write CSV / plots")
    _add_scenario_flags(sweep)

    demo = sub.add_parser("demo", help="one verbose trial at the first sweep point")
    _add_scenario_flags(demo)

    opt = sub.add_parser("optimize-ris", help="design a low-coherence RIS schedule and write it to a file")
    opt.add_argument("--n-ris-elements", dest="n_ris_elements", type=int, default=Config.N_R)
    opt.add_argument("--grid-ris", dest="grid_ris", type=int, default=Config.G_R)
    opt.add_argument("--j", type=int, default=Config.J)
    opt.add_argument("--master-seed", dest="master_seed", type=int, default=Config.MASTER_SEED)
    opt.add_argument("--ris-max-iters", dest="ris_max_iters", type=int, default=Config.RIS_MAX_ITERS)
    opt.add_argument("--ris-tol", dest="ris_tol", type=float, default=Config.RIS_TOL)
    opt.add_argument("--output", required=True, help="schedule file (J lines of N_R phases)")

    selftest = sub.add_parser("selftest", help="run the fast oracle test suite")
    selftest.add_argument("--runslow", action="store_true", help="include the long Monte-Carlo checks")
    return parser


class SimulatorRunner:
    """Dispatches CLI subcommands and maps failures to exit codes"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self._setup_signal_handlers()

    def _setup_signal_handlers(self):
        signal.signal(signal.SIGTERM, self._signal_handler)

    def _signal_handler(self, signum, frame):
        logger.warning("Received SIGTERM, stopping")
        raise KeyboardInterrupt

    def _setup_directories(self, *dirs):
        for directory in dirs:
            Path(directory).mkdir(parents=True, exist_ok=True)

    def _build_spec(self):
        from metrics.experiment import ExperimentSpec

        spec = ExperimentSpec.from_yaml(self.args.config) if self.args.config else ExperimentSpec()
        overrides = {key: getattr(self.args, key, None) for key in SCENARIO_KEYS}
        return spec.with_overrides(**overrides).validate()

    # ---------- subcommands ----------

    def sweep(self) -> int:
        from metrics.experiment import run_experiment

        spec = self._build_spec()
        self._setup_directories(spec.output_dir)
        result = run_experiment(spec)
        failed = sum(r.failed for r in result.records)
        print(f"{len(result.summaries)} points, {len(result.records)} trials ({failed} failed) -> {result.csv_path}")
        for s in result.summaries:
            print(
                f"  snr={s.snr_db:6.2f} dB  M={s.m:3d}  J={s.j:3d}  K={s.k:2d}  "
                f"BER={s.ber_weighted:.3e}  NMSE={s.nmse_db:8.2f} dB  erasures={s.erasure_rate:.3f}"
            )
        return EXIT_OK

    def optimize_ris(self) -> int:
        from channel_engine.dictionaries import steering_matrix
        from ris_engine.designer import OptimizerOptions, mutual_coherence, optimize_schedule
        from ris_engine.schedules import export_schedule, random_schedule
        from utils.helpers import STREAM_SCHEDULE, Helpers

        a = self.args
        if a.n_ris_elements < 1 or a.j < 1 or a.grid_ris < a.n_ris_elements:
            raise ConfigError("need n_ris_elements >= 1, j >= 1 and grid_ris >= n_ris_elements")
        f_ris = steering_matrix(a.n_ris_elements, a.grid_ris)
        rng = Helpers.derive_rng(a.master_seed, STREAM_SCHEDULE, a.n_ris_elements, a.grid_ris, a.j)
        init = random_schedule(a.n_ris_elements, a.j, rng)
        result = optimize_schedule(
            f_ris, a.n_ris_elements, a.j, init,
            OptimizerOptions(max_iters=a.ris_max_iters, tol=a.ris_tol),
        )
        export_schedule(result.schedule, a.output)

        before = mutual_coherence(init.psi.T @ f_ris)
        after = mutual_coherence(result.schedule.psi.T @ f_ris)
        print(f"objective {result.trace[0]:.6g} -> {result.trace[-1]:.6g} in {result.iterations} iterations")
        print(f"coherence of Psi^T F_R: {before:.4f} (random) -> {after:.4f} (optimized)")
        print(f"schedule written to {a.output}")
        return EXIT_OK

    def demo(self) -> int:
        from channel_engine.dictionaries import build_dictionaries
        from metrics.experiment import execute_trial, make_task
        from metrics.metrics import data_rate, id_overhead
        from ris_engine.designer import mutual_coherence

        spec = self._build_spec()
        point = spec.points()[0]
        cfg = point.cfg
        outcome = execute_trial(make_task(spec, point, 0))
        record = outcome.record

        print(f"Scenario: {cfg.to_dict()}")
        print(f"Schedule: {spec.schedule}, codebook: {spec.codebook}, noiseless: {spec.noiseless}")
        print(f"Data rate: {data_rate(cfg):.4f} bits/channel use, ID overhead: {id_overhead(cfg)}")
        if record.failed:
            print(f"Trial failed: {record.error}")
            return EXIT_RUNTIME

        dictionary = build_dictionaries(cfg)
        coherence = mutual_coherence(outcome.schedule.psi.T @ dictionary.f_ris)
        print(f"Coherence of Psi^T F_R: {coherence:.4f}, noise variance: {outcome.received.noise_var:.4e}")
        for rec in outcome.recovery.blocks:
            truth = [int(outcome.messages[k, rec.block].codeword_index) for k in range(cfg.n_users)]
            print(f"  block {rec.block:3d}: sent {truth}  recovered {rec.resolved_index.tolist()}")
        print(
            f"Weighted BER {record.ber_weighted:.4e} ({record.id_errors} ID / {record.data_errors} data bit errors, "
            f"{record.erasures} erasures of {record.user_blocks})"
        )
        for user in outcome.estimate.users:
            print(
                f"  user {user.user}: NMSE {record.nmse_db_per_user[user.user]:8.2f} dB, "
                f"support {sorted(user.support)}"
                + (f" [failed: {user.error}]" if user.failed else "")
            )
        print(f"Runtime {record.runtime:.3f} s")
        return EXIT_OK

    def selftest(self) -> int:
        import pytest

        test_args = ["-q", str(current_dir / "tests")]
        if self.args.runslow:
            test_args.append("--runslow")
        status = pytest.main(test_args)
        return EXIT_OK if status == 0 else EXIT_RUNTIME

    def run(self) -> int:
        handlers = {
            "sweep": self.sweep,
            "optimize-ris": self.optimize_ris,
            "demo": self.demo,
            "selftest": self.selftest,
        }
        try:
            Config.validate()
            return handlers[self.args.command]()
        except ConfigError as e:
            logger.error(f"Configuration error: {e}")
            return EXIT_CONFIG
        except SimulationError as e:
            logger.error(f"Simulation failed: {type(e).__name__}: {e}", exc_info=True)
            return EXIT_RUNTIME
        except KeyboardInterrupt:
            logger.warning("Interrupted")
            return EXIT_RUNTIME
        except Exception as e:
            logger.error(f"Unexpected failure: {e}", exc_info=True)
            return EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    if args.verbose:
        set_console_level("DEBUG")
    elif args.quiet:
        set_console_level("WARNING")
    return SimulatorRunner(args).run()


if __name__ == "__main__":
    sys.exit(main())
