"""
Physics models: NV centre dynamics, the absorptive Raman laser and the
magnetometry built on top of them.
"""
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .magnetometry import (
    ResponseCurve,
    SensitivityResult,
    SensitivityScan,
    detuning_to_field,
    optimize_min_sensitivity,
    response_vs_detuning,
    sensitivity_at_rabi,
    sensitivity_curve,
    threshold_shift_percent,
)
from .nv_dynamics import (
    DensityMatrixState,
    DriveField,
    NVEnsemble,
    NVRates,
    absorption_coefficient,
    build_generator,
    ground_population,
    steady_state,
    time_evolve,
)
from .raman_laser import (
    CavitySystem,
    LaserCurvePoint,
    beta_at_pump,
    finesse,
    laser_curve,
    output_power,
    pump_intensity_for_intracavity,
    pump_rate_from_intensity,
    threshold_pump,
)

__all__ = [
    'DEFAULT_CONSTANTS', 'PhysicalConstants',
    'NVRates', 'DriveField', 'DensityMatrixState', 'NVEnsemble',
    'build_generator', 'steady_state', 'time_evolve', 'ground_population', 'absorption_coefficient',
    'CavitySystem', 'LaserCurvePoint', 'pump_rate_from_intensity', 'beta_at_pump',
    'pump_intensity_for_intracavity', 'output_power', 'laser_curve', 'threshold_pump', 'finesse',
    'ResponseCurve', 'SensitivityResult', 'SensitivityScan', 'response_vs_detuning',
    'threshold_shift_percent', 'detuning_to_field', 'sensitivity_curve', 'optimize_min_sensitivity',
    'sensitivity_at_rabi',
]
