import math

import numpy as np
import pytest
from scipy import special

from volterra_lab.errors import ConfigError, KernelDomainError
from volterra_lab.schemas import KernelConfig
from volterra_lab.services.kernels import (
    PowerKernel,
    check_partials,
    check_smooth_variation,
    f_delta,
    fdelta_integral_diagnostics,
    g_delta,
    gdelta_integral,
    gdelta_integral_diagnostics,
    kernel_from_config,
    make_callable_kernel,
    make_fractional_kernel,
    make_oscillating_kernel,
    make_power_kernel,
    make_power_log_kernel,
    non_increasing,
    power_kernel_g_integral,
    verdict,
)


class TestPowerKernel:
    def test_value(self, half_kernel):
        assert half_kernel(1.0, 0.75) == pytest.approx(0.5, abs=1e-15)

    def test_diagonal_is_zero(self, half_kernel):
        t = np.array([0.0, 0.3, 1.0, 7.5])
        np.testing.assert_array_equal(half_kernel.eval(t, t), np.zeros(4))

    def test_positive_below_diagonal(self):
        rng = np.random.default_rng(5)
        r = rng.uniform(0.0, 1.0, 200)
        t = r + rng.uniform(1e-6, 1.0, 200)
        for rho in (0.1, 0.5, 0.9):
            assert np.all(make_power_kernel(rho).eval(t, r) > 0)

    def test_scaled_log_derivative_is_exact(self):
        k = make_power_kernel(0.3)
        for h in (1e-1, 1e-4, 1e-8):
            r = 0.6 - h
            lag = 0.6 - r
            assert lag * k.d_dr(0.6, r) / k(0.6, r) == pytest.approx(-0.3, rel=1e-13)

    def test_lag_form_matches_point_form(self):
        k = make_power_kernel(0.3)
        for h in (1e-1, 1e-4):
            assert k.d_dr_lag(0.6, h) == pytest.approx(k.d_dr(0.6, 0.6 - h), rel=1e-9)
            assert k.eval_lag(0.6, h) == pytest.approx(k(0.6, 0.6 - h), rel=1e-9)

    def test_lag_form_below_float_spacing(self):
        # 0.6 - 1e-30 == 0.6, so only the lag form can reach this point
        k = make_power_kernel(0.3)
        assert k.d_dr_lag(0.6, 1e-30) == pytest.approx(-0.3 * 1e-30**-0.7, rel=1e-12)
        with pytest.raises(KernelDomainError):
            k.d_dr(0.6, 0.6 - 1e-30)
        with pytest.raises(KernelDomainError):
            k.d_dr_lag(0.6, 0.0)

    def test_rejects_r_above_t(self, half_kernel):
        with pytest.raises(KernelDomainError):
            half_kernel(0.5, 0.6)

    def test_partials_need_open_diagonal(self, half_kernel):
        with pytest.raises(KernelDomainError):
            half_kernel.d_dr(0.5, 0.5)

    @pytest.mark.parametrize("rho", [0.0, 1.0, 1.5, -0.2])
    def test_rho_outside_unit_interval_rejected(self, rho):
        with pytest.raises(ConfigError, match=r"\(0, 1\)"):
            make_power_kernel(rho)

    def test_analytic_partials_match_finite_differences(self, quarter_kernel):
        assert check_partials(quarter_kernel).ok(1e-6)


class TestPowerLogKernel:
    def test_eta_zero_reduces_to_power(self):
        assert make_power_log_kernel(0.5, 0.0)(1.0, 0.75) == pytest.approx(0.5, abs=1e-15)

    def test_value_at_inverse_e(self):
        k = make_power_log_kernel(0.3, 1.0)
        assert k(1.0, 1.0 - math.exp(-1.0)) == pytest.approx(math.exp(-0.3), rel=1e-12)

    def test_domain_edge(self):
        k = make_power_log_kernel(0.3, 1.0)
        with pytest.raises(KernelDomainError):
            k(1.5, 0.4)

    def test_partials(self):
        assert check_partials(make_power_log_kernel(0.3, 1.0)).ok(1e-6)


class TestOtherKernels:
    def test_fractional_kernel_scale(self):
        k = make_fractional_kernel(0.4)
        assert isinstance(k, PowerKernel)
        assert k(1.0, 0.5) == pytest.approx(0.5**0.4 / special.gamma(1.4), rel=1e-14)

    def test_fractional_kernel_needs_d_below_half(self):
        with pytest.raises(ConfigError):
            make_fractional_kernel(0.5)

    def test_callable_kernel_finite_difference_partials(self):
        k = make_callable_kernel(lambda t, r: (t - r) ** 0.5, 0.5, name="sqrt")
        exact = make_power_kernel(0.5)
        assert k.d_dr(1.0, 0.5) == pytest.approx(exact.d_dr(1.0, 0.5), rel=1e-7)
        assert k.d2_dr2(1.0, 0.5) == pytest.approx(exact.d2_dr2(1.0, 0.5), rel=1e-5)

    def test_kernel_from_config(self):
        assert kernel_from_config(KernelConfig(kind="power", rho=0.25)).rho == 0.25
        assert kernel_from_config(KernelConfig(kind="power-log", rho=0.3, eta=1.0)).eta == 1.0
        assert kernel_from_config(KernelConfig(kind="oscillating", rho=0.3)).name.startswith("oscillating")


class TestSmoothVariation:
    def test_power_kernel_residuals_vanish(self, half_kernel):
        report = check_smooth_variation(half_kernel, (0.2, 0.8), [1e-2, 1e-3, 1e-4, 1e-5])
        assert report.passed
        for residuals in report.condition_residuals.values():
            assert np.max(residuals) <= 1e-12
        assert np.max(report.ratio_residual) <= 1e-12

    def test_power_log_kernel_passes_with_decreasing_residuals(self):
        k = make_power_log_kernel(0.3, 1.0)
        report = check_smooth_variation(k, (0.2, 0.8), [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
        assert report.passed
        for residuals in report.condition_residuals.values():
            assert non_increasing(residuals)
        # condition (a) decays like 1 / |log h|
        assert report.condition_residuals["a"][-1] == pytest.approx(1.0 / math.log(1e6), rel=1e-6)

    def test_oscillating_kernel_fails_condition_a(self):
        report = check_smooth_variation(make_oscillating_kernel(0.3), (0.2, 0.8), [1e-2, 1e-3, 1e-4, 1e-5])
        assert not report.verdict["a"]
        assert not report.passed
        assert "a" in report.reasons

    def test_frame_columns(self, half_kernel):
        frame = check_smooth_variation(half_kernel, (0.2, 0.8), [1e-2, 1e-3, 1e-4]).to_frame()
        assert list(frame.columns) == ["h", "res_a", "res_b", "res_c", "res_d", "res_eq39"]

    def test_increasing_schedule_rejected(self, half_kernel):
        with pytest.raises(ConfigError, match="decreasing"):
            check_smooth_variation(half_kernel, (0.2, 0.8), [1e-3, 1e-2, 1e-4])

    def test_verdict_rule(self):
        assert verdict([0.5, 0.05, 0.01], 0.1)
        assert not verdict([0.5, 0.01, 0.05], 0.1)
        assert not verdict([0.5, 0.2, 0.05], 0.1)
        assert not verdict([0.05, 0.01], 0.1)


class TestDeltaFunctions:
    def test_g_delta_power_closed_form(self, quarter_kernel):
        expected = 3.0 ** -0.75 - 2.0 ** -0.75
        assert g_delta(quarter_kernel, 0.5, 2.0, 1e-3) == pytest.approx(expected, rel=1e-10)

    def test_g_delta_singular_at_zero(self, quarter_kernel):
        values = g_delta(quarter_kernel, 0.5, np.array([1e-2, 1e-4, 1e-6]), 1e-3)
        assert np.all(np.diff(values) < 0)

    def test_f_delta_power_closed_form(self, half_kernel):
        assert f_delta(half_kernel, 0.3, 0.5, 1e-4) == pytest.approx(0.5**-0.5, rel=1e-10)

    def test_f_delta_is_one_at_v_one(self):
        for k in (make_power_kernel(0.3), make_power_log_kernel(0.3, 1.0)):
            assert f_delta(k, 0.4, 1.0, 1e-3) == pytest.approx(1.0, abs=1e-14)

    def test_g_integral_matches_closed_form(self, quarter_kernel):
        V = 5000.0
        quad = gdelta_integral(quarter_kernel, 0.5, 1e-4, 0.0, V)
        assert quad == pytest.approx(power_kernel_g_integral(0.25, V), abs=1e-7)

    def test_g_and_f_near_zero_stay_off_the_diagonal(self, half_kernel):
        v = np.array([1e-40, 1e-20])
        np.testing.assert_allclose(g_delta(half_kernel, 0.3, v, 1e-2), (1.0 + v) ** -0.5 - v**-0.5, rtol=1e-12)
        np.testing.assert_allclose(f_delta(half_kernel, 0.3, v, 1e-2), v**-0.5, rtol=1e-12)

    def test_g_integral_limit(self):
        assert power_kernel_g_integral(0.25, 1e12) == pytest.approx(-4.0, abs=1e-2)

    def test_f_delta_outside_unit_interval_rejected(self, half_kernel):
        with pytest.raises(ConfigError):
            f_delta(half_kernel, 0.3, 1.5, 1e-3)


class TestIntegralDiagnostics:
    def test_fdelta_power_kernel_exact(self, half_kernel):
        diag = fdelta_integral_diagnostics(half_kernel, (0.2, 0.8), [1e-2, 1e-3, 1e-4], tol=0.1)
        assert np.max(diag.residuals["a"]) <= 1e-9
        # f_delta >= 0, so the plain and absolute residuals coincide
        np.testing.assert_allclose(diag.residuals["a"], diag.residuals["b"], atol=1e-12)
        assert all(diag.converged.values())

    def test_fdelta_power_log_decreasing(self):
        k = make_power_log_kernel(0.3, 1.0)
        diag = fdelta_integral_diagnostics(k, (0.2, 0.5), [1e-2, 1e-4, 1e-6], tol=10.0, points=2)
        assert non_increasing(diag.residuals["a"])

    def test_gdelta_power_kernel(self, quarter_kernel):
        diag = gdelta_integral_diagnostics(quarter_kernel, (0.6, 0.8), 0.5, [1e-2, 1e-3, 1e-4], tol=0.1, points=2)
        for name in ("a", "b", "c", "d"):
            assert non_increasing(diag.residuals[name])
        V = 0.5 / 1e-4
        closed = abs(((1 + V) ** 0.25 - V**0.25) / 0.25)
        assert diag.residuals["b"][-1] == pytest.approx(closed, rel=1e-4)

    def test_gdelta_empty_range_when_h0_equals_t(self, half_kernel):
        diag = gdelta_integral_diagnostics(half_kernel, (0.5, 0.5), 0.5, [1e-2, 1e-3], tol=0.1)
        np.testing.assert_array_equal(diag.residuals["a"], [0.0, 0.0])

    def test_frame(self, half_kernel):
        diag = fdelta_integral_diagnostics(half_kernel, (0.2, 0.8), [1e-2, 1e-3], tol=0.1, points=2)
        assert list(diag.to_frame().columns) == ["delta", "res_a", "res_b"]
