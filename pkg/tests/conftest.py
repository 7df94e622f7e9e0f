"""Shared fixtures: kernels and small hand-built driver paths."""

import pytest

from volterra_lab.services.drivers import CadlagPath
from volterra_lab.services.kernels import make_power_kernel

FIVE_JUMP_TIMES = [0.1, 0.3, 0.5, 0.7, 0.9]
FIVE_JUMP_SIZES = [1.0, -3.0, 2.0, -1.0, 0.5]


@pytest.fixture
def half_kernel():
    return make_power_kernel(0.5)


@pytest.fixture
def quarter_kernel():
    return make_power_kernel(0.25)


@pytest.fixture
def zero_path():
    return CadlagPath(0.0, 1.0, [], [], label="zero")


@pytest.fixture
def unit_jump_path():
    """X = 1{t >= 0.5} on [0, 1]."""
    return CadlagPath(0.0, 1.0, [0.5], [1.0], label="unit-jump")


@pytest.fixture
def five_jump_path():
    return CadlagPath(0.0, 1.0, FIVE_JUMP_TIMES, FIVE_JUMP_SIZES, label="five-jumps")


@pytest.fixture
def drift_path():
    """X(r) = r."""
    return CadlagPath(0.0, 1.0, [], [], drift_rate=1.0, label="drift")


@pytest.fixture
def write_config(tmp_path):
    """Write a JSON config text to a file and return its path."""

    def _write(text, name="config.json"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
