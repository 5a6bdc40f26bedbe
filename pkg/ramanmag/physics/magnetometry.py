"""
Magnetometry

Laser output versus microwave detuning at fixed pump power, conversion of
detuning to magnetic field, and the photon-shot-noise-limited DC sensitivity

    eta_DC = sqrt(h nu_r P_out) * |dB_DC / dP_out|

together with its optimisation over the Rabi drive.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from ..errors import DegenerateCurve, InvalidParameter
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .nv_dynamics import DriveField, NVRates
from .raman_laser import CavitySystem, laser_curve, threshold_pump

logger = logging.getLogger(__name__)

OFF_RESONANT_DETUNING = 200e6
DETUNING_GRID_MIN = 0.5e6
DETUNING_GRID_MAX = 200e6
DETUNING_GRID_POINTS = 41
# eta diverges at zero detuning; this interval is excluded from the search
SENSITIVITY_GUARD = 0.1e6
DENSE_POINTS = 4001

PumpRule = Literal["mw_off_threshold", "fixed"]


def default_detuning_grid(maximum: float = DETUNING_GRID_MAX, minimum: float = DETUNING_GRID_MIN,
                          points: int = DETUNING_GRID_POINTS) -> np.ndarray:
    """Zero plus geometrically spaced detunings, dense near the peak"""
    if points < 4:
        raise InvalidParameter(f"detuning grid needs at least 4 points, got {points}")
    return np.concatenate(([0.0], np.geomspace(minimum, maximum, points - 1)))


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    """Output power versus detuning at one pump power and drive"""

    detunings: np.ndarray
    outputs: np.ndarray
    pump_power: float
    rabi: float = 0.0
    dephasing: float = 0.0
    cavity: CavitySystem = field(default_factory=CavitySystem)

    def __post_init__(self):
        detunings = np.asarray(self.detunings, dtype=float)
        outputs = np.asarray(self.outputs, dtype=float)
        if detunings.ndim != 1 or detunings.shape != outputs.shape:
            raise InvalidParameter("detunings and outputs must be 1-D and of equal length")
        if detunings.size < 4:
            raise InvalidParameter(f"a response curve needs at least 4 points, got {detunings.size}")
        if np.any(np.diff(detunings) <= 0):
            raise InvalidParameter("detunings must be strictly ascending")
        if np.any(~np.isfinite(outputs)) or np.any(outputs < 0):
            raise InvalidParameter("outputs must be finite and non-negative")
        object.__setattr__(self, "detunings", detunings)
        object.__setattr__(self, "outputs", outputs)

    def mirrored(self):
        """
        Even extension over the non-negative half: (detunings, outputs)
        ascending through zero.
        """
        keep = self.detunings >= 0
        half_d = self.detunings[keep]
        half_p = self.outputs[keep]
        if half_d.size and half_d[0] == 0:
            neg_d, neg_p = -half_d[:0:-1], half_p[:0:-1]
        else:
            neg_d, neg_p = -half_d[::-1], half_p[::-1]
        return np.concatenate((neg_d, half_d)), np.concatenate((neg_p, half_p))

    def interpolant(self) -> PchipInterpolator:
        """Monotone piecewise cubic through the mirrored curve; slope 0 at the peak"""
        detunings, outputs = self.mirrored()
        return PchipInterpolator(detunings, outputs)


@dataclass(frozen=True, eq=False)
class SensitivityResult:
    eta_min: float
    detuning_opt: float
    field_opt: float
    detunings: np.ndarray
    etas: np.ndarray
    grid_etas: np.ndarray
    pump_power: float = 0.0
    rabi: float = 0.0
    dephasing: float = 0.0


@dataclass
class SensitivityScanRow:
    rabi: float
    pump_power: float
    status: str = "ok"
    eta_min: float = math.nan
    detuning_opt: float = math.nan
    field_opt: float = math.nan
    result: Optional[SensitivityResult] = None
    curve: Optional[ResponseCurve] = None

    @property
    def grid_etas(self) -> np.ndarray:
        """eta on the response grid; +inf everywhere when no minimum was found"""
        if self.result is not None:
            return self.result.grid_etas
        return np.full(self.curve.detunings.shape, np.inf)


@dataclass
class SensitivityScan:
    dephasing: float
    rows: List[SensitivityScanRow]

    @property
    def best(self) -> Optional[SensitivityScanRow]:
        solved = [row for row in self.rows if row.status == "ok"]
        return min(solved, key=lambda row: row.eta_min) if solved else None


def detuning_to_field(detuning, constants: PhysicalConstants = DEFAULT_CONSTANTS):
    """B_DC = Delta_g / gamma_e (T), detuning in Hz"""
    if np.ndim(detuning):
        return np.asarray(detuning, dtype=float) * constants.inv_gamma_e
    return float(detuning) * constants.inv_gamma_e


def response_vs_detuning(cavity: CavitySystem, rates: NVRates, rabi: float, dephasing: float,
                         pump_power: float, detunings: Optional[Sequence[float]] = None) -> ResponseCurve:
    """Laser output at each detuning for a fixed pump power"""
    if not pump_power > 0:
        raise InvalidParameter(f"pump_power must be positive, got {pump_power}")
    grid = default_detuning_grid() if detunings is None else np.asarray(detunings, dtype=float)

    outputs = []
    for detuning in grid:
        drive = DriveField(rabi=rabi, detuning=float(detuning), dephasing=dephasing)
        point = laser_curve(cavity, rates, drive, [pump_power])[0]
        outputs.append(point.output_power)

    return ResponseCurve(grid, np.array(outputs), pump_power, rabi, dephasing, cavity)


def threshold_shift_percent(cavity: CavitySystem, rates: NVRates, rabi: float, dephasing: float,
                            off_resonant: float = OFF_RESONANT_DETUNING) -> float:
    """Threshold of the detuned laser relative to the resonant one, in percent"""
    resonant = threshold_pump(cavity, rates, DriveField(rabi=rabi, detuning=0.0, dephasing=dephasing))
    detuned = threshold_pump(cavity, rates, DriveField(rabi=rabi, detuning=off_resonant, dephasing=dephasing))
    return 100.0 * (detuned - resonant) / resonant


def mw_off_threshold(cavity: CavitySystem, rates: NVRates, dephasing: float = 0.0) -> float:
    """Threshold without microwave drive, the default operating pump power P'_p"""
    return threshold_pump(cavity, rates, DriveField(rabi=0.0, detuning=0.0, dephasing=dephasing))


def resonant_threshold_curve(cavity: CavitySystem, rates: NVRates, dephasing: float,
                             rabi_grid: Sequence[float]) -> np.ndarray:
    return np.array([
        threshold_pump(cavity, rates, DriveField(rabi=float(rabi), detuning=0.0, dephasing=dephasing))
        for rabi in rabi_grid
    ])


def peak_width(curve: ResponseCurve) -> float:
    """
    Full width at half maximum of the response peak at zero detuning.

    Returns inf when the output stays above half maximum over the whole grid.
    """
    interpolant = curve.interpolant()
    detunings, outputs = curve.mirrored()
    peak = float(interpolant(0.0))
    if peak <= 0:
        raise DegenerateCurve("no output at zero detuning")

    half = peak / 2
    positive = detunings > 0
    below = np.flatnonzero(outputs[positive] <= half)
    if below.size == 0:
        return math.inf
    upper = float(detunings[positive][below[0]])
    crossing = brentq(lambda d: float(interpolant(d)) - half, 0.0, upper)
    return 2 * crossing


def sensitivity_curve(curve: ResponseCurve, detection_efficiency: float = 1.0,
                      guard: float = SENSITIVITY_GUARD, constants: PhysicalConstants = DEFAULT_CONSTANTS,
                      cavity: Optional[CavitySystem] = None) -> SensitivityResult:
    """
    Shot-noise-limited sensitivity versus detuning and its minimum.

    The slope comes analytically from the monotone cubic interpolant. The grid
    minimum of eta seeds a golden-section refinement; detunings below `guard`
    are excluded. Where the output or the slope is zero, eta is +inf.

    Raises:
        DegenerateCurve: flat response or no lasing anywhere on the grid.
    """
    if not 0 < detection_efficiency <= 1:
        raise InvalidParameter(f"detection efficiency must lie in (0, 1], got {detection_efficiency}")
    cavity = cavity or curve.cavity
    photon_energy = constants.h * cavity.raman_frequency

    interpolant = curve.interpolant()
    slope = interpolant.derivative()

    detunings, outputs = curve.mirrored()
    scale = float(np.max(outputs))
    if scale <= 0:
        raise DegenerateCurve("laser is below threshold at every detuning")

    def eta(d):
        power = np.clip(interpolant(d), 0.0, None) * detection_efficiency
        gradient = np.abs(slope(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.sqrt(photon_energy * power) * constants.inv_gamma_e / gradient
        return np.where((power > 0) & (gradient > 0), value, np.inf)

    upper = float(detunings[-1])
    lower = max(guard, float(detunings[detunings > 0][0]) / 10)
    if upper <= lower:
        raise DegenerateCurve(f"detuning range ends at {upper:.3e} Hz, inside the guard interval")

    dense = np.geomspace(lower, upper, DENSE_POINTS)
    if float(np.max(np.abs(slope(dense)))) <= 1e-12 * scale / upper:
        raise DegenerateCurve("response is flat in detuning")

    etas = eta(dense)
    k = int(np.argmin(etas))
    if not np.isfinite(etas[k]):
        raise DegenerateCurve("sensitivity is unbounded at every detuning")

    best_detuning = float(dense[k])
    best_eta = float(etas[k])
    if 0 < k < dense.size - 1:
        try:
            refined = minimize_scalar(lambda d: float(eta(d)), bracket=(dense[k - 1], dense[k], dense[k + 1]),
                                      method="golden")
            if refined.fun < best_eta and dense[k - 1] <= refined.x <= dense[k + 1]:
                best_detuning, best_eta = float(refined.x), float(refined.fun)
        except ValueError as e:
            logger.debug(f"golden-section refinement skipped: {e}")

    grid_etas = eta(np.abs(curve.detunings))
    return SensitivityResult(
        eta_min=best_eta,
        detuning_opt=best_detuning,
        field_opt=detuning_to_field(best_detuning, constants),
        detunings=dense,
        etas=etas,
        grid_etas=np.asarray(grid_etas, dtype=float),
        pump_power=curve.pump_power,
        rabi=curve.rabi,
        dephasing=curve.dephasing,
    )


def resolve_pump_power(cavity: CavitySystem, rates: NVRates, dephasing: float, pump_rule: PumpRule = "mw_off_threshold",
                       pump_power: Optional[float] = None) -> float:
    """Operating pump power for a response or sensitivity sweep"""
    if pump_rule == "fixed":
        if pump_power is None or not pump_power > 0:
            raise InvalidParameter("pump rule 'fixed' needs a positive pump power")
        return float(pump_power)
    if pump_rule == "mw_off_threshold":
        return mw_off_threshold(cavity, rates, dephasing)
    raise InvalidParameter(f"unknown pump rule {pump_rule!r}")


def sensitivity_at_rabi(cavity: CavitySystem, rates: NVRates, rabi: float, dephasing: float, pump_power: float,
                        detunings: Optional[Sequence[float]] = None,
                        detection_efficiency: float = 1.0) -> SensitivityScanRow:
    """
    Response curve and minimum sensitivity at one Rabi frequency.

    A curve that never reaches threshold is flagged "below_threshold", a flat
    one "degenerate"; neither raises.
    """
    curve = response_vs_detuning(cavity, rates, rabi, dephasing, pump_power, detunings)
    row = SensitivityScanRow(rabi=rabi, pump_power=pump_power, curve=curve)
    if float(np.max(curve.outputs)) <= 0:
        logger.warning(f"Rabi {rabi:.4e} s^-1: below threshold at every detuning, skipped")
        row.status = "below_threshold"
        return row
    try:
        result = sensitivity_curve(curve, detection_efficiency=detection_efficiency)
    except DegenerateCurve as e:
        logger.warning(f"Rabi {rabi:.4e} s^-1: {e}")
        row.status = "degenerate"
        return row
    row.eta_min = result.eta_min
    row.detuning_opt = result.detuning_opt
    row.field_opt = result.field_opt
    row.result = result
    return row


def optimize_min_sensitivity(cavity: CavitySystem, rates: NVRates, dephasing: float, rabi_grid: Sequence[float],
                             pump_rule: PumpRule = "mw_off_threshold", pump_power: Optional[float] = None,
                             detunings: Optional[Sequence[float]] = None,
                             detection_efficiency: float = 1.0) -> SensitivityScan:
    """
    Minimum sensitivity for each Rabi frequency of the grid.

    Grid points where the laser never reaches threshold, or where the response
    is flat, are kept in the table with a status flag instead of a value.
    """
    grid = np.asarray(rabi_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidParameter("Rabi grid must be positive and strictly ascending")

    power = resolve_pump_power(cavity, rates, dephasing, pump_rule, pump_power)
    rows = [
        sensitivity_at_rabi(cavity, rates, float(rabi), dephasing, power, detunings, detection_efficiency)
        for rabi in grid
    ]
    return SensitivityScan(dephasing=dephasing, rows=rows)
