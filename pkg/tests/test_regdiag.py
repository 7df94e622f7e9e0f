import numpy as np
import pytest

from volterra_lab.errors import DiagnosticError
from volterra_lab.services.drivers import CadlagPath
from volterra_lab.services.regdiag import (
    RegularityReport,
    dyadic_modulus,
    holder_exponent,
    pointwise_ratio_scan,
    richardson_limit,
    sobol_pairs,
    uniform_modulus_scan,
)
from volterra_lab.services.volterra import VolterraEvaluator

H_SCHEDULE = [1e-2, 1e-3, 1e-4, 1e-5]


class TestRichardson:
    def test_removes_linear_term(self):
        h = [1e-4, 1e-5]
        assert richardson_limit(h, [2.0 + 3e-4, 2.0 + 3e-5]) == pytest.approx(2.0, abs=1e-14)

    def test_rate_aware_order(self):
        h = np.array([1e-4, 1e-5])
        ratios = -3.0 + 0.7 * h**0.5
        assert richardson_limit(h, ratios, order=0.5) == pytest.approx(-3.0, abs=1e-12)

    def test_needs_decreasing_pair(self):
        with pytest.raises(DiagnosticError):
            richardson_limit([1e-5, 1e-4], [1.0, 1.0])


class TestPointwiseScan:
    def test_single_jump_identity(self, half_kernel, unit_jump_path):
        scan = pointwise_ratio_scan(
            half_kernel, unit_jump_path, VolterraEvaluator(half_kernel, unit_jump_path), [0.5], H_SCHEDULE
        )
        np.testing.assert_allclose(scan.ratios[0], 1.0, rtol=0, atol=1e-12)
        assert scan.at_jump.tolist() == [True]
        assert scan.truth[0] == 1.0

    def test_off_jump_probe(self, half_kernel, unit_jump_path):
        scan = pointwise_ratio_scan(
            half_kernel, unit_jump_path, VolterraEvaluator(half_kernel, unit_jump_path), [0.25], H_SCHEDULE
        )
        np.testing.assert_array_equal(scan.ratios, np.zeros((1, 4)))
        assert not scan.at_jump[0]

    def test_five_jump_limit(self, half_kernel, five_jump_path):
        m = VolterraEvaluator(half_kernel, five_jump_path)
        scan = pointwise_ratio_scan(half_kernel, five_jump_path, m, [0.3, 0.4], H_SCHEDULE)
        assert abs(scan.extrapolated[0] + 3.0) <= 0.05 * 3.0
        assert abs(scan.extrapolated[1]) <= 5e-2 * (1.0 + scan.sup_norm)

    def test_frames(self, half_kernel, five_jump_path):
        m = VolterraEvaluator(half_kernel, five_jump_path)
        scan = pointwise_ratio_scan(half_kernel, five_jump_path, m, [0.3, 0.4], H_SCHEDULE)
        assert len(scan.to_frame()) == 8
        assert list(scan.limits_frame().columns) == ["probe", "truth", "raw", "richardson", "richardson_rate"]

    def test_probe_outside_range(self, half_kernel, unit_jump_path):
        with pytest.raises(DiagnosticError):
            pointwise_ratio_scan(half_kernel, unit_jump_path, VolterraEvaluator(half_kernel, unit_jump_path), [0.995], H_SCHEDULE)


class TestUniformScan:
    def test_zero_driver(self, half_kernel, zero_path):
        scan = uniform_modulus_scan(half_kernel, zero_path, VolterraEvaluator(half_kernel, zero_path), H_SCHEDULE)
        np.testing.assert_array_equal(scan.uniform_ratios, np.zeros(4))
        np.testing.assert_array_equal(scan.relative_gap(), np.zeros(4))

    def test_single_jump_straddle(self, half_kernel, unit_jump_path):
        scan = uniform_modulus_scan(half_kernel, unit_jump_path, VolterraEvaluator(half_kernel, unit_jump_path), H_SCHEDULE)
        np.testing.assert_allclose(scan.uniform_ratios, 1.0, atol=1e-9)
        assert scan.sup_jump == 1.0

    def test_two_jumps(self, quarter_kernel):
        x = CadlagPath(0.0, 1.0, [0.4, 0.7], [1.0, -2.0])
        scan = uniform_modulus_scan(quarter_kernel, x, VolterraEvaluator(quarter_kernel, x), [1e-2, 1e-3, 1e-4])
        assert scan.relative_gap()[-1] <= 0.10
        assert scan.argmax_pairs[-1, 0] == pytest.approx(0.7)
        assert list(scan.to_frame().columns) == ["h", "uniform_ratio", "sup_jump"]

    def test_pair_budget_floor(self, half_kernel, zero_path):
        with pytest.raises(DiagnosticError):
            uniform_modulus_scan(half_kernel, zero_path, VolterraEvaluator(half_kernel, zero_path), H_SCHEDULE, 999)

    def test_sobol_stream_extends(self):
        np.testing.assert_array_equal(sobol_pairs(1000, seed=3)[:500], sobol_pairs(500, seed=3))
        assert sobol_pairs(1000, seed=3).shape == (1000, 2)


class TestHolder:
    @pytest.fixture
    def grid(self):
        return np.linspace(0.0, 1.0, 2**14 + 1)

    def test_power_path(self, grid):
        fit = holder_exponent(grid**0.4, 6)
        assert fit.slope == pytest.approx(0.4, abs=0.02)
        assert fit.r2 >= 0.98

    def test_linear_path(self, grid):
        assert holder_exponent(grid, 6).slope == pytest.approx(1.0, abs=0.02)

    def test_constant_path_is_degenerate(self, grid):
        fit = holder_exponent(np.ones_like(grid), 6)
        assert fit.degenerate
        assert fit.slope is None and fit.r2 is None
        assert np.isnan(fit.to_frame()["slope"]).all()

    def test_needs_enough_levels(self, grid):
        with pytest.raises(DiagnosticError):
            holder_exponent(grid, 4)

    def test_grid_too_coarse(self):
        with pytest.raises(DiagnosticError):
            holder_exponent(np.linspace(0.0, 1.0, 64), 6, min_level=2)

    def test_dyadic_modulus(self):
        np.testing.assert_array_equal(dyadic_modulus(np.array([0.0, 1.0, 3.0, 6.0]), [0, 1]), [3.0, 5.0])


class TestRegularityReport:
    def test_assembles_frames(self, half_kernel, unit_jump_path):
        m = VolterraEvaluator(half_kernel, unit_jump_path)
        pointwise = pointwise_ratio_scan(half_kernel, unit_jump_path, m, [0.5], H_SCHEDULE)
        uniform = uniform_modulus_scan(half_kernel, unit_jump_path, m, H_SCHEDULE)
        holder = holder_exponent(np.linspace(0.0, 1.0, 257), 5)
        report = RegularityReport(np.array(H_SCHEDULE), pointwise, uniform, holder)
        assert set(report.to_frames()) == {"pointwise", "uniform", "holder"}
        assert report.holder_slope == pytest.approx(1.0)

    def test_schedule_mismatch(self, half_kernel, unit_jump_path):
        m = VolterraEvaluator(half_kernel, unit_jump_path)
        pointwise = pointwise_ratio_scan(half_kernel, unit_jump_path, m, [0.5], H_SCHEDULE)
        with pytest.raises(DiagnosticError):
            RegularityReport(np.array(H_SCHEDULE[:2]), pointwise)
