import json

import numpy as np
import pytest

from volterra_lab.errors import DriverError
from volterra_lab.schemas import DriverSpec, NormalJumps, TwoPointJumps
from volterra_lab.services.drivers import (
    CadlagPath,
    levy_moments,
    make_generator,
    make_two_sided,
    simulate,
    sup_jump,
)


class TestCadlagPath:
    def test_unit_step_queries(self, unit_jump_path):
        x = unit_jump_path
        assert x.value(0.49) == 0.0
        assert x.value(0.5) == 1.0
        assert x.left_limit(0.5) == 0.0
        assert x.jump(0.5) == 1.0
        assert x.jump(0.6) == 0.0

    def test_vectorised_jump(self, five_jump_path):
        np.testing.assert_array_equal(five_jump_path.jump(np.array([0.3, 0.31, 0.9])), [-3.0, 0.0, 0.5])

    def test_right_continuity(self, five_jump_path):
        x = five_jump_path
        for tau, size in zip(x.jump_times, x.jump_sizes):
            for h in (1e-6, 1e-9):
                assert x.value(tau + h) == x.value(tau)
                assert x.value(tau - h) == pytest.approx(x.value(tau) - size, abs=1e-15)

    def test_drift_is_continuous(self, drift_path):
        assert drift_path.value(0.25) == pytest.approx(0.25)
        assert drift_path.left_limit(0.25) == pytest.approx(0.25)
        assert not drift_path.is_pure_jump

    def test_query_outside_horizon(self, unit_jump_path):
        with pytest.raises(DriverError):
            unit_jump_path.value(1.5)

    def test_arrays_are_immutable(self, five_jump_path):
        with pytest.raises(ValueError):
            five_jump_path.jump_sizes[0] = 10.0

    def test_unsorted_jumps_rejected(self):
        with pytest.raises(DriverError):
            CadlagPath(0.0, 1.0, [0.5, 0.2], [1.0, 1.0])

    def test_jump_at_origin_rejected(self):
        with pytest.raises(DriverError):
            CadlagPath(-1.0, 1.0, [0.0], [1.0])

    def test_jump_times_in_is_half_open(self, five_jump_path):
        times, sizes = five_jump_path.jump_times_in(0.3, 0.7)
        np.testing.assert_array_equal(times, [0.5, 0.7])
        np.testing.assert_array_equal(sizes, [2.0, -1.0])

    def test_sup_norm(self, five_jump_path):
        # levels 0, 1, -2, 0, -1, -0.5
        assert five_jump_path.sup_norm() == pytest.approx(2.0)

    def test_scaled(self, five_jump_path):
        doubled = five_jump_path.scaled(2.0)
        np.testing.assert_allclose(doubled.value([0.2, 0.95]), 2.0 * five_jump_path.value([0.2, 0.95]))

    def test_record_round_trip(self, five_jump_path):
        restored = CadlagPath.from_record(five_jump_path.to_record())
        np.testing.assert_array_equal(restored.jump_times, five_jump_path.jump_times)
        assert restored.label == "five-jumps"

    def test_frame_layout(self, drift_path):
        frame = drift_path.to_frame()
        assert list(frame.columns) == ["kind", "time", "value"]
        assert frame["kind"].tolist() == ["drift"]


class TestSupJump:
    def test_no_jumps(self, zero_path):
        assert sup_jump(zero_path, (0.0, 1.0)) == 0.0

    def test_largest_absolute_jump(self):
        x = CadlagPath(0.0, 1.0, [0.2, 0.4, 0.6], [1.0, -3.0, 2.0])
        assert sup_jump(x, (0.0, 1.0)) == 3.0

    def test_matches_grid_scan(self, five_jump_path):
        grid = np.union1d(np.linspace(0.0, 1.0, 10001), five_jump_path.jump_times)
        jumps = np.abs(five_jump_path.value(grid) - five_jump_path.left_limit(grid))
        assert sup_jump(five_jump_path, (0.0, 1.0)) == pytest.approx(jumps.max())

    def test_restricted_interval(self, five_jump_path):
        assert sup_jump(five_jump_path, (0.4, 1.0)) == 2.0


class TestSimulate:
    def test_empty_driver_is_zero(self):
        x = simulate(DriverSpec(kind="compound-poisson", jump_intensity=0.0), (0.0, 1.0))
        assert x.jump_times.size == 0
        assert x.sup_norm() == 0.0

    def test_deterministic_jumps(self):
        spec = DriverSpec(kind="deterministic-jumps", jump_times=[0.5], jump_sizes=[1.0])
        x = simulate(spec, (0.0, 1.0))
        assert x.value(0.5) == 1.0 and x.left_limit(0.5) == 0.0

    def test_reproducible(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=5.0, seed=42)
        a = simulate(spec, (0.0, 1.0), stream=3)
        b = simulate(spec, (0.0, 1.0), stream=3)
        np.testing.assert_array_equal(a.jump_times, b.jump_times)
        np.testing.assert_array_equal(a.jump_sizes, b.jump_sizes)

    def test_serialized_path_is_byte_identical(self):
        spec = DriverSpec(kind="cp-with-diffusion", jump_intensity=5.0, diffusion_vol=0.3, seed=42)
        first = simulate(spec, (0.0, 1.0), stream=2, grid_step=1e-2).to_json()
        again = simulate(spec, (0.0, 1.0), stream=2, grid_step=1e-2).to_json()
        assert first.encode("utf-8") == again.encode("utf-8")

        reseeded = simulate(spec.model_copy(update={"seed": 43}), (0.0, 1.0), stream=2, grid_step=1e-2)
        assert reseeded.to_json() != first
        assert CadlagPath.from_record(json.loads(first)).to_json() == first

    def test_streams_differ(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=50.0, seed=42)
        a = simulate(spec, (0.0, 1.0), stream=0)
        b = simulate(spec, (0.0, 1.0), stream=1)
        assert a.jump_times.size != b.jump_times.size or not np.array_equal(a.jump_times, b.jump_times)

    def test_poisson_jump_count(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=5.0, seed=7)
        counts = np.array([simulate(spec, (0.0, 1.0), stream=i).jump_times.size for i in range(10_000)])
        assert abs(counts.mean() - 5.0) <= 3.0 * np.sqrt(5.0 / 10_000)

    def test_diffusion_is_anchored(self):
        spec = DriverSpec(kind="cp-with-diffusion", jump_intensity=0.0, diffusion_vol=1.0, seed=1)
        x = simulate(spec, (0.0, 1.0), grid_step=1e-3)
        assert x.value(0.0) == 0.0
        assert x.diffusion_samples.size == 1001
        assert not x.is_pure_jump

    def test_generator_streams(self):
        a = make_generator(1, 0).random(4)
        b = make_generator(1, 0).random(4)
        c = make_generator(1, 1).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestTwoSided:
    def test_zero_branches(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=0.0)
        l = make_two_sided(spec, spec, 5.0, 1.0)
        assert l.sup_norm() == 0.0
        assert l.horizon == (-5.0, 1.0)

    def test_negative_side_convention(self):
        pos = DriverSpec(kind="deterministic-jumps")
        neg = DriverSpec(kind="deterministic-jumps", jump_times=[1.0], jump_sizes=[2.0])
        l = make_two_sided(pos, neg, 5.0, 1.0)
        assert l.value(-1.01) == -2.0
        assert l.value(-0.99) == 0.0
        assert l.value(0.0) == 0.0

    def test_fractional_rejects_diffusion(self):
        bad = DriverSpec(kind="cp-with-diffusion", jump_intensity=1.0, diffusion_vol=0.5)
        good = DriverSpec(kind="compound-poisson", jump_intensity=1.0)
        with pytest.raises(DriverError, match="Brownian"):
            make_two_sided(good, bad, 5.0, 1.0)

    def test_fractional_rejects_nonzero_mean(self):
        biased = DriverSpec(kind="compound-poisson", jump_intensity=1.0, jump_law=NormalJumps(mu=1.0))
        with pytest.raises(DriverError, match="E\\[L\\(1\\)\\] = 0"):
            make_two_sided(biased, biased, 5.0, 1.0)

    def test_reproducible(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=3.0, seed=9)
        a = make_two_sided(spec, spec, 10.0, 1.0, stream=2)
        b = make_two_sided(spec, spec, 10.0, 1.0, stream=2)
        np.testing.assert_array_equal(a.jump_times, b.jump_times)


class TestLevyMoments:
    def test_compound_poisson(self):
        spec = DriverSpec(kind="compound-poisson", jump_intensity=10.0, jump_law=NormalJumps(sigma=1.0))
        stats = levy_moments(spec)
        assert stats.mean == 0.0
        assert stats.second_moment == pytest.approx(10.0)
        assert stats.scale == pytest.approx(np.sqrt(10.0))

    def test_two_point_with_drift(self):
        spec = DriverSpec(
            kind="cp-with-drift", jump_intensity=2.0, jump_law=TwoPointJumps(p=0.5, x1=1.0, x2=-1.0), drift_rate=0.5
        )
        stats = levy_moments(spec)
        assert stats.mean == pytest.approx(0.5)
        assert stats.second_moment == pytest.approx(2.0 + 0.25)
