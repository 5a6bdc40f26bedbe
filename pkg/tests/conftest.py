import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from ramanmag import database as db_mod
from ramanmag.physics.nv_dynamics import NVRates
from ramanmag.physics.raman_laser import CavitySystem


@pytest.fixture(scope="function", autouse=True)
def fast_in_memory_db(monkeypatch):
    """Use a fresh in-memory SQLite registry per test to avoid file I/O and state bleed."""
    # Use a single in-memory SQLite across all connections
    engine = create_engine(
        "sqlite://",
        connect_args={"check_same_thread": False},
        poolclass=StaticPool
    )
    TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    db_mod.Base.metadata.create_all(bind=engine)

    monkeypatch.setattr(db_mod, "engine", engine, raising=True)
    monkeypatch.setattr(db_mod, "SessionLocal", TestingSessionLocal, raising=True)
    yield


@pytest.fixture(scope="function")
def test_db():
    """Direct DB access fixture for model-level tests."""
    SessionLocal = db_mod.SessionLocal
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


@pytest.fixture
def rates():
    return NVRates()


@pytest.fixture
def cavity():
    """Default geometry with kappa_r = 75 MHz"""
    return CavitySystem()


def mhz(values):
    return {"value": values, "unit": "MHz"}


@pytest.fixture
def threshold_config_dict():
    """Small threshold-shift sweep: two Rabi frequencies, one kappa"""
    return {
        "name": "small-shift",
        "kind": "threshold_shift",
        "kappa_r": mhz([75.0]),
        "drive": {"rabi": mhz([0.0, 18.0]), "dephasing": mhz([1.0])},
    }


@pytest.fixture
def laser_curve_config_dict():
    """Short laser-curve sweep around the MW-off threshold"""
    return {
        "name": "small-curve",
        "kind": "laser_curve",
        "kappa_r": mhz([75.0]),
        "drive": {"rabi": mhz([0.0, 18.0]), "detuning": mhz([0.0, 200.0]), "dephasing": mhz([1.0])},
        "pump": {"grid": {"value": [320.0, 340.0, 360.0, 380.0, 400.0], "unit": "mW"}},
    }
