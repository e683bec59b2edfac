"""
Database models for the experiment trial log
"""

from sqlalchemy import (
    create_engine,
    Column,
    Integer,
    String,
    Text,
    DateTime,
    Boolean,
    ForeignKey,
    Float,
    JSON,
)
from sqlalchemy.orm import declarative_base, sessionmaker, relationship

from config import Config
from utils.time_manager import TimeManager
from utils.logger import logger

# Create base class
Base = declarative_base()

# ==================== RUN MODELS ====================

class ExperimentRun(Base):
    """One `sweep` invocation"""
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_key = Column(String(64), unique=True, nullable=False, index=True)
    master_seed = Column(Integer, nullable=False)
    n_points = Column(Integer, default=0)
    trials_per_point = Column(Integer, default=0)

    # Full ExperimentSpec as given to run_experiment
    spec = Column(JSON, nullable=False)

    # Outcome
    status = Column(String(20), default='running')   # running, finished, aborted
    failed_trials = Column(Integer, default=0)
    csv_path = Column(String(500), nullable=True)

    # Timestamps
    started_at = Column(DateTime, default=TimeManager.get_current_time, nullable=False)
    finished_at = Column(DateTime, nullable=True)

    # Relationships
    trials = relationship("TrialLog", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, key='{self.run_key}', status='{self.status}')>"

# ==================== TRIAL MODELS ====================

class TrialLog(Base):
    """Append-only record of one Monte-Carlo trial"""
    __tablename__ = 'trial_logs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('experiment_runs.id', ondelete='CASCADE'), nullable=False, index=True)

    # Sweep point
    point_index = Column(Integer, nullable=False, index=True)
    trial_index = Column(Integer, nullable=False)
    snr_db = Column(Float, nullable=False)
    m = Column(Integer, nullable=False)
    j = Column(Integer, nullable=False)
    k = Column(Integer, nullable=False)
    schedule = Column(String(20), nullable=False)

    # Bit accounting
    ber_numerator = Column(Integer, default=0)
    ber_denominator = Column(Integer, default=0)
    id_errors = Column(Integer, default=0)
    data_errors = Column(Integer, default=0)
    erasures = Column(Integer, default=0)
    user_blocks = Column(Integer, default=0)

    # Channel estimation
    nmse_mean = Column(Float, nullable=True)   # linear, mean over users
    nmse_per_user = Column(JSON, nullable=True)

    # Failure info
    failed = Column(Boolean, default=False)
    error = Column(Text, nullable=True)

    runtime = Column(Float, nullable=True)   # seconds
    created_at = Column(DateTime, default=TimeManager.get_current_time, nullable=False)

    run = relationship("ExperimentRun", back_populates="trials")

    def __repr__(self):
        return f"<TrialLog(run={self.run_id}, point={self.point_index}, trial={self.trial_index})>"

# ==================== DATABASE INITIALIZATION ====================

engine = None
SessionLocal = None


def configure_engine(url: str = None):
    """(Re)bind the module engine and session factory to `url`"""
    global engine, SessionLocal
    url = url or Config.DATABASE_URL
    if url.startswith("sqlite"):
        engine = create_engine(url, echo=False, connect_args={"check_same_thread": False})
    else:
        engine = create_engine(
            url,
            pool_size=10,
            max_overflow=20,
            pool_recycle=3600,
            pool_pre_ping=True,
            echo=False,
        )

    SessionLocal = sessionmaker(
        bind=engine,
        autoflush=False,
        autocommit=False,
        expire_on_commit=False,
    )
    return engine


def init_database(url: str = None):
    """
    Create the tables on the configured engine
    """
    if url is not None or engine is None:
        configure_engine(url)
    Base.metadata.create_all(bind=engine)
    logger.debug(f"Database tables ready on {engine.url}")
    return engine


def get_db():
    """
    Session generator (closed on exhaustion)
    """
    if SessionLocal is None:
        configure_engine()
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
