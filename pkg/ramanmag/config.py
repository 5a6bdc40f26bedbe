"""
Experiment Configuration

JSON experiment configs validated with pydantic. Every dimensional field is
declared as {"value": number-or-list, "unit": "..."}. Parsed configs hold SI
values with the canonical unit, so dump_config -> parse_config yields an
equal config.
"""
import hashlib
import json
import logging
import math
import os
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
import pydantic
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ParseError, ValidationError
from .physics.constants import DEFAULT_CONSTANTS
from .physics.magnetometry import default_detuning_grid
from .physics.nv_dynamics import NVEnsemble, NVRates
from .physics.raman_laser import CavitySystem

logger = logging.getLogger(__name__)

SweepKind = Literal["laser_curve", "response", "threshold_shift", "sensitivity"]

UNITS: Dict[str, Dict[str, float]] = {
    "rate": {"Hz": 1.0, "s^-1": 1.0, "1/s": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9,
             "us^-1": 1e6, "µs^-1": 1e6, "μs^-1": 1e6},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "μW": 1e-6},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9},
    "area": {"m^2": 1.0, "cm^2": 1e-4},
    "density": {"m^-3": 1.0, "cm^-3": 1e6},
    "gain": {"m/W": 1.0, "cm/GW": 1e-11},
}
CANONICAL_UNITS = {"rate": "Hz", "power": "W", "length": "m", "area": "m^2", "density": "m^-3", "gain": "m/W"}


class Quantity(BaseModel):
    """A value (or list of values) with an explicit unit"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    value: Union[float, List[float]]
    unit: str


def _in_dimension(dimension: str, grid: bool = False):
    factors = UNITS[dimension]

    def convert(quantity: Quantity) -> Quantity:
        if quantity.unit not in factors:
            raise ValueError(f"unit {quantity.unit!r} is not a {dimension} unit (accepted: {', '.join(factors)})")
        factor = factors[quantity.unit]
        if grid:
            values = quantity.value if isinstance(quantity.value, list) else [quantity.value]
            if not values:
                raise ValueError("empty")
            if not all(math.isfinite(v) for v in values):
                raise ValueError("values must be finite")
            return Quantity(value=[v * factor for v in values], unit=CANONICAL_UNITS[dimension])
        if isinstance(quantity.value, list):
            raise ValueError("expected a single value, not a list")
        if not math.isfinite(quantity.value):
            raise ValueError("value must be finite")
        return Quantity(value=quantity.value * factor, unit=CANONICAL_UNITS[dimension])

    return AfterValidator(convert)


Rate = Annotated[Quantity, _in_dimension("rate")]
RateGrid = Annotated[Quantity, _in_dimension("rate", grid=True)]
Power = Annotated[Quantity, _in_dimension("power")]
PowerGrid = Annotated[Quantity, _in_dimension("power", grid=True)]
Length = Annotated[Quantity, _in_dimension("length")]
Area = Annotated[Quantity, _in_dimension("area")]
Density = Annotated[Quantity, _in_dimension("density")]
Gain = Annotated[Quantity, _in_dimension("gain")]


def _q(value, unit: str) -> Quantity:
    return Quantity(value=value, unit=unit)


def _require_positive(quantity: Quantity) -> Quantity:
    values = quantity.value if isinstance(quantity.value, list) else [quantity.value]
    if any(v <= 0 for v in values):
        raise ValueError("must be positive")
    return quantity


def _require_non_negative(quantity: Quantity) -> Quantity:
    values = quantity.value if isinstance(quantity.value, list) else [quantity.value]
    if any(v < 0 for v in values):
        raise ValueError("must be non-negative")
    return quantity


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, validate_default=True)


class CavityConfig(_Section):
    length: Length = _q(100.0, "um")
    waist_radius: Length = _q(5.0, "um")
    refractive_index: float = Field(2.4, gt=0)
    raman_gain: Gain = _q(14.75, "cm/GW")
    pump_wavelength: Length = _q(620.0, "nm")
    raman_wavelength: Length = _q(676.0, "nm")
    output_mirrors: Literal["both", "single"] = "both"

    @field_validator("length", "waist_radius", "raman_gain", "pump_wavelength", "raman_wavelength")
    @classmethod
    def check_positive(cls, quantity: Quantity) -> Quantity:
        return _require_positive(quantity)


class RatesConfig(_Section):
    r31: Rate = _q(66.16, "us^-1")
    r42: Rate = _q(66.16, "us^-1")
    r35: Rate = _q(11.1, "us^-1")
    r45: Rate = _q(91.8, "us^-1")
    r51: Rate = _q(4.87, "us^-1")
    r52: Rate = _q(2.04, "us^-1")

    @field_validator("r31", "r42", "r35", "r45", "r51", "r52")
    @classmethod
    def check_positive(cls, quantity: Quantity) -> Quantity:
        return _require_positive(quantity)


class EnsembleConfig(_Section):
    cross_section: Area = _q(1.3e-17, "cm^2")
    density: Density = _q(1.77e18, "cm^-3")

    @field_validator("cross_section")
    @classmethod
    def check_positive(cls, quantity: Quantity) -> Quantity:
        return _require_positive(quantity)

    # zero density is allowed: the absorption-free limit
    @field_validator("density")
    @classmethod
    def check_non_negative(cls, quantity: Quantity) -> Quantity:
        return _require_non_negative(quantity)


class DriveConfig(_Section):
    rabi: RateGrid
    detuning: Optional[RateGrid] = None
    dephasing: RateGrid = _q([1.0], "MHz")

    @field_validator("rabi", "dephasing")
    @classmethod
    def check_non_negative(cls, quantity: Quantity) -> Quantity:
        return _require_non_negative(quantity)


class PumpConfig(_Section):
    grid: Optional[PowerGrid] = None
    rule: Literal["mw_off_threshold", "fixed"] = "mw_off_threshold"
    power: Optional[Power] = None

    @field_validator("grid")
    @classmethod
    def check_ascending(cls, grid: Optional[Quantity]) -> Optional[Quantity]:
        if grid is not None:
            values = np.asarray(grid.value)
            if np.any(values < 0) or np.any(np.diff(values) < 0):
                raise ValueError("must be non-negative and ascending")
        return grid

    @field_validator("power")
    @classmethod
    def check_positive(cls, power: Optional[Quantity]) -> Optional[Quantity]:
        return power if power is None else _require_positive(power)


class OutputConfig(_Section):
    directory: str = "results"


class ExperimentConfig(_Section):
    name: str = "custom"
    kind: SweepKind
    cavity: CavityConfig = Field(default_factory=CavityConfig)
    kappa_r: RateGrid
    rates: RatesConfig = Field(default_factory=RatesConfig)
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    drive: DriveConfig
    pump: PumpConfig = Field(default_factory=PumpConfig)
    off_resonant_detuning: Rate = _q(200.0, "MHz")
    detection_efficiency: float = Field(1.0, gt=0, le=1)
    output: OutputConfig = Field(default_factory=OutputConfig)
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("kappa_r")
    @classmethod
    def check_positive(cls, quantity: Quantity) -> Quantity:
        return _require_positive(quantity)

    @model_validator(mode="after")
    def check_kind(self) -> "ExperimentConfig":
        if self.kind == "laser_curve" and self.pump.grid is None:
            raise ValueError("pump.grid: required for laser_curve sweeps")
        if self.pump.rule == "fixed" and self.pump.power is None:
            raise ValueError("pump.power: required when pump.rule is 'fixed'")
        if self.kind == "sensitivity":
            if len(self.kappa_r.value) != 1:
                raise ValueError("kappa_r: sensitivity sweeps take a single value")
            if any(v <= 0 for v in self.drive.rabi.value):
                raise ValueError("drive.rabi: sensitivity sweeps need positive Rabi frequencies")
        if self.kind in ("response", "sensitivity") and self.drive.detuning is not None:
            detunings = np.asarray(self.drive.detuning.value)
            if detunings.size < 4 or np.any(np.diff(detunings) <= 0):
                raise ValueError("drive.detuning: needs at least 4 strictly ascending values")
        return self

    # -- builders for the physics layer --

    def nv_rates(self) -> NVRates:
        r = self.rates
        return NVRates(r31=r.r31.value, r42=r.r42.value, r35=r.r35.value,
                       r45=r.r45.value, r51=r.r51.value, r52=r.r52.value)

    def cavity_system(self, kappa_r: float) -> CavitySystem:
        c = self.cavity
        ensemble = NVEnsemble(cross_section=self.ensemble.cross_section.value * 1e4,
                              density=self.ensemble.density.value * 1e-6)
        return CavitySystem(
            length=c.length.value,
            waist_radius=c.waist_radius.value,
            loss_rate=kappa_r,
            refractive_index=c.refractive_index,
            raman_gain=c.raman_gain.value,
            pump_frequency=DEFAULT_CONSTANTS.c / c.pump_wavelength.value,
            raman_frequency=DEFAULT_CONSTANTS.c / c.raman_wavelength.value,
            ensemble=ensemble,
            output_mirrors=c.output_mirrors,
        )

    def detuning_grid(self) -> List[float]:
        if self.drive.detuning is not None:
            return list(self.drive.detuning.value)
        if self.kind in ("response", "sensitivity"):
            return default_detuning_grid().tolist()
        return [0.0]

    def pump_grid(self) -> List[float]:
        return list(self.pump.grid.value) if self.pump.grid is not None else []

    def pump_power(self) -> Optional[float]:
        return self.pump.power.value if self.pump.power is not None else None


def _validation_error(exc: pydantic.ValidationError) -> ValidationError:
    first = exc.errors()[0]
    field = ".".join(str(part) for part in first["loc"])
    message = first["msg"]
    for prefix in ("Value error, ", "Assertion failed, "):
        if message.startswith(prefix):
            message = message[len(prefix):]
    if first["type"] == "extra_forbidden":
        message = "unknown key"
    elif first["type"] == "missing":
        message = "required"
    if not field and ": " in message:
        field, message = message.split(": ", 1)
    return ValidationError(field, message)


def parse_config(text: Union[str, bytes]) -> ExperimentConfig:
    """
    Parse and validate an experiment config.

    Raises:
        ParseError: not UTF-8 or not valid JSON (with line/column).
        ValidationError: schema violation, naming the offending field.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"config is not UTF-8: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise ValidationError("", "config must be a JSON object")
    return config_from_dict(data)


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except pydantic.ValidationError as e:
        raise _validation_error(e) from e


def dump_config(config: ExperimentConfig) -> str:
    """Canonical JSON text of a parsed config (SI units)"""
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 over the physics-relevant part of the config"""
    data = config.model_dump(mode="json", exclude={"output", "workers"})
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_workers() -> int:
    """Worker count from RAMANMAG_WORKERS, else the available CPUs"""
    env = os.environ.get("RAMANMAG_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning(f"ignoring non-integer RAMANMAG_WORKERS={env!r}")
    return os.cpu_count() or 1
