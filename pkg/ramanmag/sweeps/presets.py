"""
Figure presets: the parameter grids of the reference laser-curve, threshold
shift, response and sensitivity figures, expressed as experiment configs.
"""
import copy
from typing import Any, Dict, List

from ..config import ExperimentConfig, config_from_dict
from ..errors import ValidationError

_KAPPA_GRID = [75.0, 110.0, 145.0, 180.0, 215.0, 250.0]
_RABI_SHIFT_GRID = [1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 25.0,
                    30.0, 35.0, 40.0, 50.0, 60.0, 80.0, 100.0]
_RABI_SENSITIVITY_GRID = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 15.0, 18.0, 22.0,
                          26.0, 30.0, 40.0, 50.0]
_DEPHASING_GRID = [0.1, 1.0, 10.0]


def _mhz(values) -> Dict[str, Any]:
    return {"value": values, "unit": "MHz"}


def _pump_grid_mw(start: float, stop: float, step: float) -> List[float]:
    count = int(round((stop - start) / step))
    return [round(start + i * step, 9) for i in range(count + 1)]


PRESETS: Dict[str, Dict[str, Any]] = {
    # laser curves without drive, on resonance and detuned up to 200 MHz
    "figure2": {
        "name": "figure2",
        "kind": "laser_curve",
        "kappa_r": _mhz([75.0]),
        "drive": {
            "rabi": _mhz([0.0, 18.0]),
            "detuning": _mhz([0.0, 10.0, 20.0, 50.0, 100.0, 200.0]),
            "dephasing": _mhz([1.0]),
        },
        "pump": {"grid": {"value": _pump_grid_mw(300.0, 400.0, 1.0), "unit": "mW"}},
    },
    "figure3a": {
        "name": "figure3a",
        "kind": "threshold_shift",
        "kappa_r": _mhz(_KAPPA_GRID),
        "drive": {"rabi": _mhz(_RABI_SHIFT_GRID), "dephasing": _mhz([1.0])},
    },
    "figure3b": {
        "name": "figure3b",
        "kind": "response",
        "kappa_r": _mhz([75.0]),
        "drive": {"rabi": _mhz([5.0, 10.0, 18.0, 30.0, 50.0, 100.0]), "dephasing": _mhz([1.0])},
        "pump": {"rule": "mw_off_threshold"},
    },
    "figure3c": {
        "name": "figure3c",
        "kind": "threshold_shift",
        "kappa_r": _mhz([75.0]),
        "drive": {"rabi": _mhz(_RABI_SHIFT_GRID), "dephasing": _mhz(_DEPHASING_GRID)},
    },
    "figure3d": {
        "name": "figure3d",
        "kind": "response",
        "kappa_r": _mhz([75.0]),
        "drive": {"rabi": _mhz([18.0]), "dephasing": _mhz(_DEPHASING_GRID)},
        "pump": {"rule": "mw_off_threshold"},
    },
    "figure4a": {
        "name": "figure4a",
        "kind": "sensitivity",
        "kappa_r": _mhz([75.0]),
        "drive": {"rabi": _mhz([18.0]), "dephasing": _mhz([1.0])},
        "pump": {"rule": "mw_off_threshold"},
    },
    "figure4b": {
        "name": "figure4b",
        "kind": "sensitivity",
        "kappa_r": _mhz([75.0]),
        "drive": {"rabi": _mhz(_RABI_SENSITIVITY_GRID), "dephasing": _mhz(_DEPHASING_GRID)},
        "pump": {"rule": "mw_off_threshold"},
    },
}

PRESET_NAMES = tuple(PRESETS)


def preset_dict(name: str) -> Dict[str, Any]:
    """Raw JSON-shaped preset, safe to modify"""
    if name not in PRESETS:
        raise ValidationError("preset", f"unknown preset {name!r} (choose from {', '.join(PRESET_NAMES)})")
    return copy.deepcopy(PRESETS[name])


def load_preset(name: str) -> ExperimentConfig:
    return config_from_dict(preset_dict(name))
