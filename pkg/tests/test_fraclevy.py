import logging
import math

import numpy as np
import pytest
from scipy import special, stats

from volterra_lab.errors import ConfigError, DriverError
from volterra_lab.schemas import DriverSpec, NormalJumps
from volterra_lab.services.drivers import CadlagPath, levy_moments
from volterra_lab.services.fraclevy import (
    default_truncation,
    eval_fraclevy,
    levy_two_sided,
    lil_epsilon,
    m1_values,
    m2_values_exact,
    m2_values_quadrature,
    tail_increment,
    truncation_tail_bound,
)
from volterra_lab.services.kernels import make_fractional_kernel
from volterra_lab.services.volterra import eval_by_parts


@pytest.fixture
def levy_spec():
    return DriverSpec(kind="compound-poisson", jump_intensity=10.0, jump_law=NormalJumps(sigma=1.0), seed=17)


@pytest.fixture
def moments(levy_spec):
    return levy_moments(levy_spec)


class TestMovingAverage:
    def test_zero_driver(self):
        l = CadlagPath(-8.0, 1.0, [], [])
        path = eval_fraclevy(l, 0.25, np.linspace(0.0, 1.0, 9))
        np.testing.assert_array_equal(path.values, np.zeros(9))

    def test_m1_single_jump(self):
        l = CadlagPath(-4.0, 1.0, [0.5], [1.0])
        expected = 0.5**0.4 / special.gamma(1.4)
        assert m1_values(l, 0.4, [1.0])[0] == pytest.approx(expected, rel=1e-14)

    def test_m1_matches_volterra_representation(self, levy_spec):
        l = levy_two_sided(levy_spec, 8.0, 1.0, stream=0)
        grid = np.linspace(0.0, 1.0, 33)
        k = make_fractional_kernel(0.3)
        np.testing.assert_allclose(m1_values(l, 0.3, grid), eval_by_parts(k, l, grid), rtol=0, atol=1e-10)

    def test_m2_constant_driver(self):
        c, d, T, eps = 1.5, 0.25, 8.0, 1e-9
        # L = c on [-T, -eps), 0 afterwards
        l = CadlagPath(-T, 1.0, [-eps], [-c])
        grid = np.array([0.0, 0.25, 1.0])
        m2 = m2_values_exact(l, d, grid, T)
        expected = c / special.gamma(d + 1) * ((grid + T) ** d - (grid + eps) ** d - T**d + eps**d)
        np.testing.assert_allclose(m2, expected, rtol=1e-10, atol=1e-14)
        assert m2[0] == pytest.approx(0.0, abs=1e-14)

    def test_m2_quadrature_cross_check(self, levy_spec):
        l = levy_two_sided(levy_spec, 8.0, 1.0, stream=1)
        grid = np.array([0.1, 0.5, 1.0])
        np.testing.assert_allclose(
            m2_values_quadrature(l, 0.25, grid, 8.0), m2_values_exact(l, 0.25, grid, 8.0), rtol=1e-7, atol=1e-9
        )

    def test_split_is_exact(self, levy_spec):
        l = levy_two_sided(levy_spec, 16.0, 1.0, stream=2)
        path = eval_fraclevy(l, 0.25, np.linspace(0.0, 1.0, 65))
        np.testing.assert_array_equal(path.values, path.m1_values + path.m2_values)
        assert path.truncation_T == 16.0
        assert list(path.to_frame().columns) == ["t", "M", "M1", "M2"]

    def test_bound_reported_with_moments(self, levy_spec, moments):
        l = levy_two_sided(levy_spec, 16.0, 1.0, stream=2)
        path = eval_fraclevy(l, 0.25, np.linspace(0.0, 1.0, 5), stats=moments)
        assert path.truncation_bound > 0
        assert math.isnan(eval_fraclevy(l, 0.25, np.linspace(0.0, 1.0, 5)).truncation_bound)

    def test_rejects_d_at_half(self):
        l = CadlagPath(-8.0, 1.0, [], [])
        with pytest.raises(ConfigError):
            eval_fraclevy(l, 0.5, [0.0, 1.0])

    def test_rejects_drift(self):
        l = CadlagPath(-8.0, 1.0, [], [], drift_rate=1.0)
        with pytest.raises(DriverError):
            eval_fraclevy(l, 0.25, [0.0, 1.0])

    def test_truncation_beyond_horizon(self):
        l = CadlagPath(-8.0, 1.0, [], [])
        with pytest.raises(DriverError):
            eval_fraclevy(l, 0.25, [0.0, 1.0], T=16.0)

    def test_two_sided_driver_rejects_diffusion(self):
        spec = DriverSpec(kind="cp-with-diffusion", jump_intensity=1.0, diffusion_vol=1.0)
        with pytest.raises(DriverError, match="Brownian"):
            levy_two_sided(spec, 8.0, 1.0)


class TestTruncationBound:
    def test_zero_delta(self, moments):
        assert truncation_tail_bound(moments, 0.25, 0.5, 10.0, 0.0) == 0.0

    def test_linear_in_delta(self, moments):
        single = truncation_tail_bound(moments, 0.25, 0.2, 10.0, 0.1)
        double = truncation_tail_bound(moments, 0.25, 0.2, 10.0, 0.2)
        assert abs(double / single - 2.0) <= 1e-12

    def test_decreasing_in_T(self, moments):
        assert truncation_tail_bound(moments, 0.25, 0.2, 100.0, 0.1) < truncation_tail_bound(moments, 0.25, 0.2, 10.0, 0.1)

    def test_T_too_short(self, moments):
        with pytest.raises(ConfigError):
            truncation_tail_bound(moments, 0.25, 1.0, 1.5, 0.5)

    def test_epsilon_shrinks_near_half(self):
        assert lil_epsilon(0.25) == 0.01
        assert lil_epsilon(0.49) == pytest.approx(0.005)

    def test_default_truncation_meets_loose_target(self, moments):
        assert default_truncation(moments, 0.25, 1.0, 1.0, target=1e3) == 4.0

    def test_default_truncation_falls_back_to_cap(self, moments, caplog):
        with caplog.at_level(logging.WARNING):
            T = default_truncation(moments, 0.25, 1.0, 1.0, target=1e-3, max_T=64.0)
        assert T == 64.0
        assert "[Fraclevy]" in caplog.text


class TestTailIncrement:
    def test_slope_at_least_d(self, levy_spec):
        l = levy_two_sided(levy_spec, 200.0, 1.0, stream=3)
        deltas = np.array([1e-1, 1e-2, 1e-3, 1e-4])
        inc = np.abs(tail_increment(l, 0.25, 0.2, -10.0, deltas))
        slope = stats.linregress(np.log(deltas), np.log(inc)).slope
        assert slope >= 0.25

    def test_needs_cut_before_t(self, levy_spec):
        l = levy_two_sided(levy_spec, 20.0, 1.0)
        with pytest.raises(DriverError):
            tail_increment(l, 0.25, 0.2, 0.5, [0.1])

    def test_positive_delta(self, levy_spec):
        l = levy_two_sided(levy_spec, 20.0, 1.0)
        with pytest.raises(ConfigError):
            tail_increment(l, 0.25, 0.2, -10.0, [0.0])
