"""
Magnetometry tests: response curves, threshold shift, field conversion and
shot-noise-limited sensitivity.
"""
import math

import numpy as np
import pytest

from ramanmag.errors import DegenerateCurve, InvalidParameter
from ramanmag.physics.magnetometry import (
    ResponseCurve,
    default_detuning_grid,
    detuning_to_field,
    mw_off_threshold,
    optimize_min_sensitivity,
    peak_width,
    resolve_pump_power,
    resonant_threshold_curve,
    response_vs_detuning,
    sensitivity_at_rabi,
    sensitivity_curve,
    threshold_shift_percent,
)
from ramanmag.physics.nv_dynamics import DriveField
from ramanmag.physics.raman_laser import laser_curve


def lorentzian_curve(scale=1e-3, width=5e6, **kwargs):
    detunings = default_detuning_grid()
    outputs = scale / (1 + (detunings / width) ** 2)
    return ResponseCurve(detunings, outputs, pump_power=0.34, **kwargs)


class TestFieldConversion:
    def test_values(self):
        assert detuning_to_field(0.0) == 0.0
        assert detuning_to_field(100e6) == pytest.approx(5.68e-4)
        assert detuning_to_field(2 * 3e6) == pytest.approx(2 * detuning_to_field(3e6))

    def test_array(self):
        np.testing.assert_allclose(detuning_to_field(np.array([1e6, 2e6])), [5.68e-6, 1.136e-5])


class TestDetuningGrid:
    def test_default_grid(self):
        grid = default_detuning_grid()
        assert grid.size == 41
        assert grid[0] == 0.0
        assert grid[1] == pytest.approx(0.5e6)
        assert grid[-1] == pytest.approx(200e6)
        assert np.all(np.diff(grid) > 0)

    def test_too_few_points(self):
        with pytest.raises(InvalidParameter):
            default_detuning_grid(points=3)


class TestResponseCurve:
    """Validation, even extension and interpolation"""

    def test_invariants(self):
        with pytest.raises(InvalidParameter):
            ResponseCurve(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0, 1.0]), 0.3)
        with pytest.raises(InvalidParameter):
            ResponseCurve(np.array([0.0, 2.0, 1.0, 3.0]), np.ones(4), 0.3)
        with pytest.raises(InvalidParameter):
            ResponseCurve(np.arange(4.0), np.array([1.0, -1.0, 0.0, 0.0]), 0.3)

    def test_mirrored_is_even(self):
        curve = lorentzian_curve()
        detunings, outputs = curve.mirrored()
        assert detunings.size == 2 * curve.detunings.size - 1
        np.testing.assert_allclose(detunings, -detunings[::-1])
        np.testing.assert_allclose(outputs, outputs[::-1])

    def test_interpolant_reproduces_grid_and_is_flat_at_peak(self):
        curve = lorentzian_curve()
        interpolant = curve.interpolant()
        np.testing.assert_allclose(interpolant(curve.detunings), curve.outputs, rtol=1e-12)
        assert interpolant.derivative()(0.0) == pytest.approx(0.0, abs=1e-30)

    def test_peak_width_of_lorentzian(self):
        assert peak_width(lorentzian_curve(width=5e6)) == pytest.approx(10e6, rel=0.05)

    def test_peak_width_of_flat_curve_is_infinite(self):
        curve = ResponseCurve(default_detuning_grid(), np.full(41, 1e-3), 0.3)
        assert math.isinf(peak_width(curve))


class TestSensitivityCurve:
    """eta = sqrt(h nu_r P) / (gamma_e |dP/dDelta|)"""

    def test_homogeneity(self):
        """Scaling P by c^2 divides eta by c (eta is of degree -1/2 in P)"""
        base = sensitivity_curve(lorentzian_curve(scale=1e-3))
        scaled = sensitivity_curve(lorentzian_curve(scale=4e-3))
        assert scaled.eta_min == pytest.approx(base.eta_min / 2, rel=1e-9)
        assert scaled.detuning_opt == pytest.approx(base.detuning_opt, rel=1e-6)
        np.testing.assert_allclose(scaled.etas, base.etas / 2, rtol=1e-9)

    def test_diverges_at_peak(self):
        result = sensitivity_curve(lorentzian_curve())
        assert math.isinf(result.grid_etas[0])
        assert result.detuning_opt > 0
        assert result.eta_min > 0
        assert result.field_opt == pytest.approx(detuning_to_field(result.detuning_opt))

    def test_minimum_near_lorentzian_optimum(self):
        """sqrt(P)/|P'| for a Lorentzian is smallest at Delta = w / sqrt(2)"""
        width = 5e6
        result = sensitivity_curve(lorentzian_curve(width=width))
        assert result.detuning_opt == pytest.approx(width / math.sqrt(2), rel=0.15)

    def test_detection_efficiency(self):
        full = sensitivity_curve(lorentzian_curve())
        quarter = sensitivity_curve(lorentzian_curve(), detection_efficiency=0.25)
        assert quarter.eta_min == pytest.approx(full.eta_min / 2, rel=1e-9)
        with pytest.raises(InvalidParameter):
            sensitivity_curve(lorentzian_curve(), detection_efficiency=0.0)

    def test_flat_response_is_degenerate(self):
        flat = ResponseCurve(default_detuning_grid(), np.full(41, 1e-3), 0.3)
        with pytest.raises(DegenerateCurve):
            sensitivity_curve(flat)

    def test_no_lasing_is_degenerate(self):
        dark = ResponseCurve(default_detuning_grid(), np.zeros(41), 0.3)
        with pytest.raises(DegenerateCurve):
            sensitivity_curve(dark)


class TestLaserResponse:
    """Response curves and thresholds from the full model"""

    def test_no_drive_no_shift(self, cavity, rates):
        assert threshold_shift_percent(cavity, rates, 0.0, 1e6) == pytest.approx(0.0, abs=1e-7)

    def test_resonant_drive_shifts_threshold(self, cavity, rates):
        assert threshold_shift_percent(cavity, rates, 18e6, 1e6) > 1.0

    def test_resonant_threshold_curve(self, cavity, rates):
        thresholds = resonant_threshold_curve(cavity, rates, 1e6, [5e6, 18e6])
        assert thresholds.shape == (2,)
        assert np.all(thresholds < mw_off_threshold(cavity, rates, 1e6))

    def test_response_peaks_at_zero_detuning(self, cavity, rates):
        power = mw_off_threshold(cavity, rates, 1e6)
        curve = response_vs_detuning(cavity, rates, 18e6, 1e6, power)
        assert np.all(np.diff(curve.outputs) <= 1e-7 * curve.outputs[0])
        assert curve.outputs[0] > 0
        # at the MW-off threshold the far-detuned laser is barely above threshold
        assert curve.outputs[-1] < 0.25 * curve.outputs[0]

    def test_response_even_in_detuning(self, cavity, rates):
        power = mw_off_threshold(cavity, rates, 1e6)
        for detuning in (2e6, 20e6):
            plus = laser_curve(cavity, rates, DriveField(rabi=18e6, detuning=detuning, dephasing=1e6), [power])
            minus = laser_curve(cavity, rates, DriveField(rabi=18e6, detuning=-detuning, dephasing=1e6), [power])
            assert plus[0].output_power == pytest.approx(minus[0].output_power, rel=1e-6, abs=1e-15)

    def test_response_rejects_zero_pump(self, cavity, rates):
        with pytest.raises(InvalidParameter):
            response_vs_detuning(cavity, rates, 18e6, 1e6, 0.0)

    def test_pump_rules(self, cavity, rates):
        assert resolve_pump_power(cavity, rates, 1e6, "fixed", 0.35) == 0.35
        assert resolve_pump_power(cavity, rates, 1e6) == pytest.approx(mw_off_threshold(cavity, rates, 1e6))
        with pytest.raises(InvalidParameter):
            resolve_pump_power(cavity, rates, 1e6, "fixed")

    def test_scan_flags_points_without_lasing(self, cavity, rates):
        scan = optimize_min_sensitivity(cavity, rates, 1e6, [18e6], pump_rule="fixed", pump_power=0.2)
        assert scan.rows[0].status == "below_threshold"
        assert scan.best is None

    def test_single_rabi_row_below_threshold(self, cavity, rates):
        row = sensitivity_at_rabi(cavity, rates, 18e6, 1e6, 0.2)
        assert row.status == "below_threshold"
        assert math.isnan(row.eta_min)
        assert row.curve.detunings.shape == default_detuning_grid().shape
        assert np.all(np.isinf(row.grid_etas))

    def test_single_rabi_row_matches_scan(self, cavity, rates):
        power = mw_off_threshold(cavity, rates, 1e6)
        row = sensitivity_at_rabi(cavity, rates, 18e6, 1e6, power)
        scan = optimize_min_sensitivity(cavity, rates, 1e6, [18e6])
        assert row.status == scan.rows[0].status == "ok"
        assert row.eta_min == pytest.approx(scan.rows[0].eta_min, rel=1e-12)
        assert row.grid_etas.shape == row.curve.detunings.shape

    def test_scan_rejects_bad_grid(self, cavity, rates):
        with pytest.raises(InvalidParameter):
            optimize_min_sensitivity(cavity, rates, 1e6, [18e6, 5e6])


@pytest.mark.slow
class TestReferenceOperatingPoints:
    """Figure-level checks: threshold-shift optimum and minimum sensitivity"""

    def test_optimum_rabi_for_threshold_shift(self, cavity, rates):
        rabis = np.array([4, 8, 12, 14, 16, 18, 20, 22, 25, 30, 40, 60]) * 1e6
        shifts = [threshold_shift_percent(cavity, rates, r, 1e6) for r in rabis]
        k = int(np.argmax(shifts))
        assert 0 < k < len(rabis) - 1
        assert rabis[k] == pytest.approx(18e6, abs=5e6)

    def test_minimum_sensitivity(self, cavity, rates):
        rabis = np.array([1, 2, 3, 4, 5, 6, 7, 8, 10, 14, 18]) * 1e6
        narrow = optimize_min_sensitivity(cavity, rates, 0.1e6, rabis)
        best = narrow.best
        assert best is not None
        assert best.eta_min == pytest.approx(1.62e-12, rel=0.25)
        assert best.rabi == pytest.approx(5e6, abs=2e6)

        wider = optimize_min_sensitivity(cavity, rates, 1e6, rabis).best
        assert wider.eta_min <= 1.5 * best.eta_min

    def test_refining_detuning_grid_barely_moves_minimum(self, cavity, rates):
        power = mw_off_threshold(cavity, rates, 0.1e6)
        coarse = sensitivity_at_rabi(cavity, rates, 5e6, 0.1e6, power, default_detuning_grid())
        fine = sensitivity_at_rabi(cavity, rates, 5e6, 0.1e6, power, default_detuning_grid(points=81))
        assert coarse.status == fine.status == "ok"
        assert fine.eta_min == pytest.approx(coarse.eta_min, rel=0.01)

    def test_peak_broadens_with_drive(self, cavity, rates):
        power = mw_off_threshold(cavity, rates, 1e6)
        widths = [peak_width(response_vs_detuning(cavity, rates, r, 1e6, power)) for r in (5e6, 18e6, 50e6, 100e6)]
        assert all(b >= a * (1 - 1e-6) for a, b in zip(widths, widths[1:]))
