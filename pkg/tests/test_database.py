import json
import os
import tempfile

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from ramanmag.database import (
    Base,
    SweepRun,
    SweepTaskRecord,
    create_tables,
    list_runs,
    record_run_finish,
    record_run_start,
    run_tasks,
)


@pytest.fixture
def file_db():
    """Create a temporary registry database file."""
    db_fd, db_path = tempfile.mkstemp()
    engine = create_engine(f"sqlite:///{db_path}", connect_args={"check_same_thread": False})
    TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    create_tables(engine)

    db = TestingSessionLocal()
    yield db

    # Cleanup
    db.close()
    engine.dispose()
    os.close(db_fd)
    os.unlink(db_path)


def task(index, status="completed", error=None):
    return {"index": index, "parameters": json.dumps({"rabi": 1.8e7}), "status": status, "error": error,
            "wall_time": 0.25}


class TestRunRegistry:
    """Run and task bookkeeping"""

    def test_run_lifecycle(self, file_db):
        run = record_run_start(file_db, "figure3a", "threshold_shift", "f" * 64, "results/figure3a", 2, "1.0.0")
        assert run.id is not None
        assert run.status == "running"
        assert run.started_at is not None

        run = record_run_finish(file_db, run, [task(0), task(1)], 3.5)
        assert run.status == "completed"
        assert run.failed_count == 0
        assert run.wall_time_seconds == pytest.approx(3.5)
        assert run.finished_at is not None

        records = run_tasks(file_db, run.id)
        assert [r.task_index for r in records] == [0, 1]
        assert json.loads(records[0].parameters) == {"rabi": 1.8e7}

    @pytest.mark.parametrize("statuses,expected", [
        (["completed", "failed"], "partial"),
        (["failed", "failed"], "failed"),
    ])
    def test_run_status_from_tasks(self, file_db, statuses, expected):
        run = record_run_start(file_db, "custom", "response", "0" * 64, "out", 2, "1.0.0")
        tasks = [task(i, s, None if s == "completed" else "boom") for i, s in enumerate(statuses)]
        run = record_run_finish(file_db, run, tasks, 1.0)
        assert run.status == expected
        assert run.failed_count == statuses.count("failed")

    def test_list_runs_newest_first(self, file_db):
        for name in ("first", "second", "third"):
            record_run_start(file_db, name, "response", "0" * 64, "out", 1, "1.0.0")
        assert [r.name for r in list_runs(file_db, limit=2)] == ["third", "second"]
        assert len(list_runs(file_db, limit=None)) == 3

    def test_tables_exist_in_metadata(self):
        assert {"sweep_runs", "sweep_tasks"} <= set(Base.metadata.tables)
        assert SweepTaskRecord.__table__.c.run_id.foreign_keys
        assert SweepRun.__table__.c.config_hash.index


class TestSessionFixture:
    def test_in_memory_registry_is_empty(self, test_db):
        assert list_runs(test_db) == []
