"""
Sweep orchestration: presets, fan-out over the task queue, result files.
"""
from .coordinator import RunReport, SweepCoordinator, VerifyReport, run, verify
from .presets import PRESET_NAMES, load_preset

__all__ = ["RunReport", "SweepCoordinator", "VerifyReport", "run", "verify", "PRESET_NAMES", "load_preset"]
