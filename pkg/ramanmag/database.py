"""
Run Registry

SQLite registry of sweep runs and their tasks. The registry is bookkeeping
only: results live in the output directory, and a registry failure never
fails a sweep.
"""
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy import Column, DateTime, Float, ForeignKey, Index, Integer, String, Text, create_engine, text
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

# Database setup
DATABASE_URL = os.environ.get("RAMANMAG_DATABASE_URL", "sqlite:///./db/ramanmag_runs.db")
engine = create_engine(
    DATABASE_URL,
    connect_args={"check_same_thread": False} if "sqlite" in DATABASE_URL else {},
    pool_pre_ping=True,
)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


class SweepRun(Base):
    __tablename__ = "sweep_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    name = Column(String, nullable=False)
    kind = Column(String, nullable=False)  # laser_curve | response | threshold_shift | sensitivity
    config_hash = Column(String(64), nullable=False, index=True)
    output_dir = Column(Text)
    status = Column(String, default="running", index=True)  # running | completed | partial | failed
    task_count = Column(Integer, default=0)
    failed_count = Column(Integer, default=0)
    wall_time_seconds = Column(Float)
    version = Column(String)
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)

    __table_args__ = (
        Index("ix_sweep_runs_status_started", "status", "started_at"),
    )


class SweepTaskRecord(Base):
    __tablename__ = "sweep_tasks"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("sweep_runs.id"), index=True)
    task_index = Column(Integer, nullable=False)
    parameters = Column(Text)  # JSON of the task's (kappa_r, rabi, dephasing[, detuning]) point
    status = Column(String)  # completed | failed
    error_message = Column(Text)
    wall_time_seconds = Column(Float)


def create_tables(bind=None):
    """Create all registry tables, making the SQLite directory if needed"""
    bind = bind or engine
    url = str(bind.url)
    if url.startswith("sqlite:///") and ":memory:" not in url:
        db_dir = os.path.dirname(url.replace("sqlite:///", ""))
        if db_dir and not os.path.exists(db_dir):
            os.makedirs(db_dir, exist_ok=True)
            logger.info(f"Created database directory: {db_dir}")

    Base.metadata.create_all(bind=bind)
    with bind.connect() as conn:
        conn.execute(text("SELECT 1"))
    logger.debug(f"Run registry ready at {url}")


def record_run_start(db, name: str, kind: str, config_hash: str, output_dir: str,
                     task_count: int, version: str) -> SweepRun:
    run = SweepRun(
        name=name,
        kind=kind,
        config_hash=config_hash,
        output_dir=output_dir,
        task_count=task_count,
        version=version,
    )
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def record_run_finish(db, run: SweepRun, tasks: List[Dict[str, Any]], wall_time: float) -> SweepRun:
    """
    Store per-task outcomes and close the run.

    Args:
        tasks: dicts with index, parameters (JSON text), status, error, wall_time
    """
    failed = 0
    for task in tasks:
        if task["status"] != "completed":
            failed += 1
        db.add(SweepTaskRecord(
            run_id=run.id,
            task_index=task["index"],
            parameters=task["parameters"],
            status=task["status"],
            error_message=task.get("error"),
            wall_time_seconds=task.get("wall_time"),
        ))

    run.failed_count = failed
    if failed == 0:
        run.status = "completed"
    elif failed < len(tasks):
        run.status = "partial"
    else:
        run.status = "failed"
    run.wall_time_seconds = wall_time
    run.finished_at = datetime.utcnow()
    db.commit()
    db.refresh(run)
    return run


def list_runs(db, limit: Optional[int] = 20) -> List[SweepRun]:
    """Most recent runs first"""
    query = db.query(SweepRun).order_by(SweepRun.started_at.desc(), SweepRun.id.desc())
    if limit is not None:
        query = query.limit(limit)
    return query.all()


def run_tasks(db, run_id: int) -> List[SweepTaskRecord]:
    return (
        db.query(SweepTaskRecord)
        .filter(SweepTaskRecord.run_id == run_id)
        .order_by(SweepTaskRecord.task_index)
        .all()
    )
