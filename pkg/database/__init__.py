from .models import Base, ExperimentRun, TrialLog, configure_engine, init_database, get_db
from .storage import StorageManager

__all__ = ['Base', 'ExperimentRun', 'TrialLog', 'configure_engine', 'init_database', 'get_db', 'StorageManager']
