"""Pytest configuration and shared fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
src_path = Path(__file__).parent.parent / 'src'
sys.path.insert(0, str(src_path))

from basis import make_basis
from models import make_model


BEAM_PARAMS = {"length": 1.0, "stiffness": 1.0}
PLATE_PARAMS = {"length_x": 1.0, "length_y": 1.0, "thickness": 0.05, "youngs_modulus": 1.0, "poisson_ratio": 0.3}


@pytest.fixture(scope="session")
def beam_eta2():
    """Unit cantilever, D = L = 1, quadratic constraint."""
    return make_model("beam-eta2", BEAM_PARAMS)


@pytest.fixture(scope="session")
def beam_eta4():
    return make_model("beam-eta4", BEAM_PARAMS)


@pytest.fixture(scope="session")
def plate_models():
    """Models I, II and III on the unit square."""
    return {v: make_model(v, PLATE_PARAMS) for v in ("plate-I", "plate-II", "plate-III")}


@pytest.fixture(scope="session")
def beam_basis(beam_eta2):
    """Six clamped-free modes."""
    return make_basis(beam_eta2, 6)


@pytest.fixture(scope="session")
def plate_basis(plate_models):
    """Four x-modes by three y-modes (1, y and the first free-free mode)."""
    return make_basis(plate_models["plate-II"], 4, 3)


@pytest.fixture
def rng():
    """Fixed-seed generator for random smooth states."""
    return np.random.default_rng(20240611)


@pytest.fixture
def write_scenario(tmp_path):
    """Write YAML text to a scenario file and return its path."""
    def _write(text: str, name: str = "scenario.yaml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


BEAM_SCENARIO = """\
name: beam-small
model:
  variant: beam-eta2
  params:
    length: 1.0
    stiffness: 1.0
basis:
  modes_x: 4
initial:
  kind: mode
  mode: 1
  amplitude: 0.01
integrator:
  dt: 0.02
  t_final: 0.4
output:
  snapshot_times: [0.2]
  probes: [[0.5]]
"""


@pytest.fixture
def beam_scenario_text():
    return BEAM_SCENARIO
