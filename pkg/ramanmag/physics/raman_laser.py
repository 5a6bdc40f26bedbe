"""
Raman Laser Model

Steady-state diamond Raman laser with a single-pass pump that is partly
absorbed by the NV ensemble. Intracavity Stokes intensity is taken uniform
along the crystal; the pump depletes exponentially through Raman gain and NV
absorption. NV absorption is evaluated at the incident pump intensity.

All quantities are SI internally (m, W, W/m^2, s^-1, m/W).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np
import scipy.optimize

from ..errors import InvalidParameter, NoConvergence
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .nv_dynamics import (
    DriveField,
    NVEnsemble,
    NVRates,
    absorption_coefficient,
    ground_population,
    steady_state,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# 1 cm/GW expressed in m/W
CM_PER_GW = 1e-11
PER_CM = 100.0

PUMP_WAVELENGTH = 620e-9
RAMAN_WAVELENGTH = 676e-9

OUTPUT_MIRRORS = ("both", "single")

# I_r pre-scan: log-spaced points over [1e-6, 1e6] x characteristic intensity
SCAN_POINTS = 400
SCAN_DECADES = 6


@dataclass(frozen=True)
class CavitySystem:
    """Geometry, optics and NV content of the Raman cavity"""

    length: float = 100e-6
    waist_radius: float = 5e-6
    loss_rate: float = 75e6
    refractive_index: float = 2.4
    raman_gain: float = 14.75 * CM_PER_GW
    pump_frequency: float = DEFAULT_CONSTANTS.c / PUMP_WAVELENGTH
    raman_frequency: float = DEFAULT_CONSTANTS.c / RAMAN_WAVELENGTH
    ensemble: NVEnsemble = field(default_factory=NVEnsemble)
    output_mirrors: str = "both"
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        for name in ("length", "waist_radius", "loss_rate", "refractive_index", "raman_gain",
                     "pump_frequency", "raman_frequency"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameter(f"CavitySystem.{name} must be positive and finite, got {value}")
        if self.pump_frequency <= self.raman_frequency:
            raise InvalidParameter("pump frequency must exceed the Raman (Stokes) frequency")
        if self.output_mirrors not in OUTPUT_MIRRORS:
            raise InvalidParameter(f"output_mirrors must be one of {OUTPUT_MIRRORS}, got {self.output_mirrors!r}")

    @property
    def beam_area(self) -> float:
        return math.pi * self.waist_radius ** 2

    @property
    def frequency_ratio(self) -> float:
        """nu_p / nu_r"""
        return self.pump_frequency / self.raman_frequency

    @property
    def output_fraction(self) -> float:
        return 1.0 if self.output_mirrors == "both" else 0.5

    @property
    def max_absorption(self) -> float:
        """sigma * D in m^-1 (all NVs in the ground manifold)"""
        return absorption_coefficient(self.ensemble, 1.0) * PER_CM


@dataclass(frozen=True)
class LaserCurvePoint:
    """One self-consistent steady state of the laser"""

    pump_power: float
    intracavity_intensity: float
    output_power: float
    beta: float
    pump_rate: float

    @property
    def lasing(self) -> bool:
        return self.intracavity_intensity > 0


def pump_intensity_from_power(cavity: CavitySystem, pump_power: float) -> float:
    return pump_power / cavity.beam_area


def pump_power_from_intensity(cavity: CavitySystem, pump_intensity: float) -> float:
    return pump_intensity * cavity.beam_area


def pump_rate_from_intensity(cavity: CavitySystem, pump_intensity: float) -> float:
    """Lambda_p = sigma * I0_p / (h nu_p), in s^-1"""
    if pump_intensity < 0:
        raise InvalidParameter(f"pump intensity must be non-negative, got {pump_intensity}")
    photon_energy = cavity.constants.h * cavity.pump_frequency
    return cavity.ensemble.cross_section_m2 * pump_intensity / photon_energy


def beta_at_pump(cavity: CavitySystem, rates: NVRates, drive: DriveField, pump_intensity: float) -> float:
    """
    Pump absorption coefficient (m^-1) at a given incident pump intensity.

    The pump rate of `drive` is replaced by the one set by the intensity. At zero
    pump the excited and singlet populations vanish (they scale with the pump
    rate), so rho_g -> 1.
    """
    if cavity.ensemble.density == 0:
        return 0.0

    pump_rate = pump_rate_from_intensity(cavity, pump_intensity)
    if pump_rate == 0:
        rho_g = 1.0
    else:
        rho_g = ground_population(steady_state(rates, drive.with_pump(pump_rate)))
    return absorption_coefficient(cavity.ensemble, rho_g) * PER_CM


def _loss_exponent(cavity: CavitySystem, intracavity_intensity: ArrayLike, beta: float) -> ArrayLike:
    """(nu_p/nu_r) g_r I_r + beta, the pump attenuation per unit length"""
    return cavity.frequency_ratio * cavity.raman_gain * np.asarray(intracavity_intensity, dtype=float) + beta


def _absorbed_fraction_per_exponent(length: float, x: ArrayLike) -> ArrayLike:
    """[1 - exp(-l x)] / x, continued to l at x = 0"""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, -np.expm1(-length * safe) / safe, length)


def pump_profile(cavity: CavitySystem, pump_intensity: float, intracavity_intensity: float, beta: float,
                 position: ArrayLike) -> ArrayLike:
    """Depleted pump intensity I_p(l) along the crystal"""
    x = _loss_exponent(cavity, intracavity_intensity, beta)
    return pump_intensity * np.exp(-np.asarray(position, dtype=float) * x)


def pump_depletion(cavity: CavitySystem, pump_intensity: float, intracavity_intensity: float, beta: float) -> float:
    """Pump intensity lost over the crystal length, to Raman gain and NV absorption together"""
    x = _loss_exponent(cavity, intracavity_intensity, beta)
    return float(-pump_intensity * np.expm1(-cavity.length * x))


def raman_increment(cavity: CavitySystem, pump_intensity: float, intracavity_intensity: float, beta: float) -> float:
    """Stokes intensity generated in one pass; the Raman share of the depleted pump"""
    x = _loss_exponent(cavity, intracavity_intensity, beta)
    fraction = _absorbed_fraction_per_exponent(cavity.length, x)
    return float(cavity.raman_gain * intracavity_intensity * pump_intensity * fraction)


def intracavity_rate(cavity: CavitySystem, pump_intensity: float, intracavity_intensity: float, beta: float) -> float:
    """dI_r/dt of the cavity rate equation (W m^-2 s^-1)"""
    group_velocity = cavity.constants.c / cavity.refractive_index
    gain = group_velocity / cavity.length * raman_increment(cavity, pump_intensity, intracavity_intensity, beta)
    return gain - cavity.loss_rate * intracavity_intensity


def pump_intensity_for_intracavity(cavity: CavitySystem, intracavity_intensity: ArrayLike, beta: float) -> ArrayLike:
    """
    Incident pump intensity that sustains a given intracavity Stokes intensity.

    Vectorised over `intracavity_intensity`; the I_r -> 0, beta -> 0 limit is
    continuous (bracket -> l_c).
    """
    if np.any(np.asarray(intracavity_intensity) < 0) or beta < 0:
        raise InvalidParameter("intracavity intensity and beta must be non-negative")

    transit = cavity.length * cavity.refractive_index / cavity.constants.c
    x = _loss_exponent(cavity, intracavity_intensity, beta)
    result = transit * cavity.loss_rate / (cavity.raman_gain * _absorbed_fraction_per_exponent(cavity.length, x))
    return float(result) if np.ndim(result) == 0 else result


def output_power(cavity: CavitySystem, intracavity_intensity: ArrayLike) -> ArrayLike:
    """Power leaving the cavity through the output mirror(s)"""
    transit = cavity.length * cavity.refractive_index / cavity.constants.c
    result = transit * cavity.loss_rate * np.asarray(intracavity_intensity, dtype=float) * cavity.beam_area \
        * cavity.output_fraction
    return float(result) if np.ndim(result) == 0 else result


def characteristic_intensity(cavity: CavitySystem) -> float:
    """n kappa_r nu_r / (c g_r nu_p), the scale of the I_r search"""
    return (cavity.refractive_index * cavity.loss_rate) / (cavity.constants.c * cavity.raman_gain * cavity.frequency_ratio)


def solve_intracavity(cavity: CavitySystem, pump_intensity: float, beta: float, rtol: float = 1e-8) -> float:
    """
    Invert the pump/intracavity relation at fixed beta.

    Returns 0 at or below threshold. Above it, a log-spaced pre-scan brackets
    the root and bisection refines it.

    Raises:
        NoConvergence: the root lies outside the scanned I_r range.
    """
    if pump_intensity <= pump_intensity_for_intracavity(cavity, 0.0, beta):
        return 0.0

    scale = characteristic_intensity(cavity)
    grid = scale * np.logspace(-SCAN_DECADES, SCAN_DECADES, SCAN_POINTS)
    required = pump_intensity_for_intracavity(cavity, grid, beta)
    above = np.flatnonzero(required >= pump_intensity)
    if above.size == 0:
        raise NoConvergence(
            f"pump intensity {pump_intensity:.4e} W/m^2 exceeds the bracket [{grid[0]:.3e}, {grid[-1]:.3e}] W/m^2"
        )

    k = int(above[0])
    low = 0.0 if k == 0 else float(grid[k - 1])
    high = float(grid[k])

    def residual(intensity: float) -> float:
        return pump_intensity_for_intracavity(cavity, intensity, beta) - pump_intensity

    return float(scipy.optimize.bisect(residual, low, high, xtol=scale * 1e-18, rtol=rtol, maxiter=200))


def laser_curve(cavity: CavitySystem, rates: NVRates, drive: DriveField,
                pump_powers: Sequence[float]) -> List[LaserCurvePoint]:
    """Self-consistent laser output for each pump power of an ascending grid"""
    powers = np.asarray(pump_powers, dtype=float)
    if powers.ndim != 1 or powers.size == 0:
        raise InvalidParameter("pump power grid must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(powers)) or np.any(powers < 0) or np.any(np.diff(powers) < 0):
        raise InvalidParameter("pump power grid must be finite, non-negative and ascending")

    points = []
    for power in powers:
        intensity = pump_intensity_from_power(cavity, float(power))
        beta = beta_at_pump(cavity, rates, drive, intensity)
        intracavity = solve_intracavity(cavity, intensity, beta)
        points.append(LaserCurvePoint(
            pump_power=float(power),
            intracavity_intensity=intracavity,
            output_power=output_power(cavity, intracavity),
            beta=beta,
            pump_rate=pump_rate_from_intensity(cavity, intensity),
        ))
    return points


def threshold_pump(cavity: CavitySystem, rates: NVRates, drive: DriveField, rtol: float = 1e-8,
                   damping: float = 0.5, max_iter: int = 200) -> float:
    """
    Threshold pump power (W), with NV absorption evaluated self-consistently.

    Solves P = A * I0_p(I_r -> 0, beta(P / A)) by damped fixed-point iteration.
    The solution is bracketed by the absorption-free and the fully absorbing
    thresholds, so bisection over that bracket is the fallback when the
    iteration does not settle.

    Raises:
        NoConvergence: neither the iteration nor the bisection converged.
    """
    area = cavity.beam_area

    def threshold_at(power: float) -> float:
        beta = beta_at_pump(cavity, rates, drive, power / area)
        return area * pump_intensity_for_intracavity(cavity, 0.0, beta)

    p_low = area * pump_intensity_for_intracavity(cavity, 0.0, 0.0)
    p_high = area * pump_intensity_for_intracavity(cavity, 0.0, cavity.max_absorption)

    power = p_low
    for iteration in range(max_iter):
        update = threshold_at(power)
        if abs(update - power) <= rtol * power:
            logger.debug(f"threshold_pump converged after {iteration + 1} iterations: {update:.6e} W")
            return update
        power += damping * (update - power)

    logger.warning(f"threshold fixed-point iteration did not settle for {drive}; bisecting")

    def residual(p: float) -> float:
        return threshold_at(p) - p

    if residual(p_high) >= 0:
        return p_high
    try:
        return float(scipy.optimize.bisect(residual, p_low, p_high, rtol=rtol, maxiter=200))
    except (ValueError, RuntimeError) as e:
        raise NoConvergence(f"threshold bisection failed: {e}") from e


def free_spectral_range(cavity: CavitySystem) -> float:
    """c / (2 n l_c), in Hz"""
    return cavity.constants.c / (2 * cavity.refractive_index * cavity.length)


def finesse(cavity: CavitySystem) -> float:
    """Free spectral range over the cavity linewidth kappa_r / 2 pi"""
    return free_spectral_range(cavity) / (cavity.loss_rate / (2 * math.pi))


def intracavity_power_estimate(cavity: CavitySystem, output: float) -> float:
    """Circulating power from the output power: P_out * finesse / pi"""
    return output * finesse(cavity) / math.pi
