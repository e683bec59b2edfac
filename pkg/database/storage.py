import math
import uuid
from contextlib import contextmanager
from typing import Any, Dict, Iterable

from sqlalchemy import func

from . import models
from .models import ExperimentRun, TrialLog, get_db
from utils.helpers import Helpers
from utils.time_manager import TimeManager
from utils.logger import logger


class StorageManager:

    @staticmethod
    @contextmanager
    def get_session():
        """Database session context manager"""
        db = next(get_db())
        try:
            yield db
            db.commit()
        except Exception as e:
            db.rollback()
            logger.error(f"Database error: {e}")
            raise
        finally:
            db.close()

    # Run Management
    @classmethod
    def start_run(cls, spec: Dict[str, Any], master_seed: int, n_points: int, trials_per_point: int) -> int:
        """Create an ExperimentRun row and return its id"""
        with cls.get_session() as db:
            run = ExperimentRun(
                run_key=f"{TimeManager.run_stamp()}-{uuid.uuid4().hex[:8]}",
                master_seed=master_seed,
                n_points=n_points,
                trials_per_point=trials_per_point,
                spec=spec,
            )
            db.add(run)
            db.flush()
            run_id = run.id
        logger.info(f"Experiment run {run_id} started ({n_points} points x {trials_per_point} trials)")
        return run_id

    @classmethod
    def finish_run(cls, run_id: int, status: str = "finished", csv_path: str = None):
        with cls.get_session() as db:
            run = db.get(ExperimentRun, run_id)
            if not run:
                logger.warning(f"Experiment run {run_id} not found")
                return
            run.status = status
            run.csv_path = csv_path
            run.finished_at = TimeManager.get_current_time()
            run.failed_trials = db.query(func.count(TrialLog.id)).filter(
                TrialLog.run_id == run_id, TrialLog.failed.is_(True)
            ).scalar()

    # Trial Logging
    @classmethod
    def log_trials(cls, run_id: int, rows: Iterable[Dict[str, Any]]):
        with cls.get_session() as db:
            db.add_all([TrialLog(run_id=run_id, **row) for row in rows])

    # Summaries
    @classmethod
    def get_run_summary(cls, run_id: int) -> Dict[int, Dict[str, float]]:
        """Per-point aggregates recomputed from the stored trial rows"""
        with cls.get_session() as db:
            rows = db.query(TrialLog).filter(TrialLog.run_id == run_id).order_by(
                TrialLog.point_index, TrialLog.trial_index
            ).all()

            summary: Dict[int, Dict[str, Any]] = {}
            for row in rows:
                point = summary.setdefault(row.point_index, {
                    "trials": 0, "failed": 0, "numerator": 0, "denominator": 0,
                    "erasures": 0, "user_blocks": 0, "nmse": [],
                })
                point["trials"] += 1
                point["failed"] += int(row.failed)
                point["numerator"] += row.ber_numerator
                point["denominator"] += row.ber_denominator
                point["erasures"] += row.erasures
                point["user_blocks"] += row.user_blocks
                if row.nmse_mean is not None:
                    point["nmse"].append(row.nmse_mean)

        result = {}
        for index, point in summary.items():
            nmse = point.pop("nmse")
            point["ber_weighted"] = point["numerator"] / point["denominator"] if point["denominator"] else math.nan
            point["erasure_rate"] = point["erasures"] / point["user_blocks"] if point["user_blocks"] else math.nan
            point["nmse_db"] = Helpers.to_db(math.fsum(nmse) / len(nmse)) if nmse else math.nan
            result[index] = point
        return result

    @classmethod
    def get_run(cls, run_id: int) -> Dict[str, Any]:
        with cls.get_session() as db:
            run = db.get(ExperimentRun, run_id)
            if not run:
                return {}
            return {
                "id": run.id,
                "run_key": run.run_key,
                "master_seed": run.master_seed,
                "status": run.status,
                "failed_trials": run.failed_trials,
                "csv_path": run.csv_path,
                "spec": run.spec,
            }

    @staticmethod
    def use_database(url: str = None):
        """Point the storage layer at `url` and create missing tables"""
        return models.init_database(url)
