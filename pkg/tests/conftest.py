import numpy as np
import pytest

from thzradar.scene import FRP, MUD, Antenna, Layer, Scene, canonical_scene
from thzradar.synth import Pulse

C = 2.99792458e8


@pytest.fixture
def scene():
    return canonical_scene()


@pytest.fixture
def clean_scene():
    """Canonical stack without the crack."""
    s = canonical_scene()
    return Scene(s.standoff, s.layers, (), s.air_attenuation_db_per_m)


@pytest.fixture
def antenna():
    return Antenna()


@pytest.fixture
def pulse():
    return Pulse()


@pytest.fixture
def scan_positions():
    return np.linspace(-0.02, 0.02, 41)


def stack(*pairs, defects=(), standoff=0.05, air=0.0):
    return Scene(standoff, tuple(Layer(m, t) for m, t in pairs), tuple(defects), air)


__all__ = ["C", "FRP", "MUD", "stack"]


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
