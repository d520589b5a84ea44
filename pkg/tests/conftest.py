import textwrap

import numpy as np
import pytest

from epidemic_fv.models.mesh import build_cartesian
from epidemic_fv.schemas.params import DiffusionLaw, ModelParams
from epidemic_fv.schemas.run_config import SolverConfig


@pytest.fixture
def unit_2x2():
    return build_cartesian(2, 2, 1.0, 1.0)


@pytest.fixture
def single_cell():
    return build_cartesian(1, 1, 1.0, 1.0)


@pytest.fixture
def sir_params():
    return ModelParams.example1()


@pytest.fixture
def sars_params():
    return ModelParams.example2()


@pytest.fixture
def constant_laws():
    law = DiffusionLaw.constant(0.1)
    return (law, law, law)


@pytest.fixture
def truncated_laws():
    law = DiffusionLaw.truncated_linear(M=1e4, eps=1e-4, slope=0.1)
    return (law, law, law)


@pytest.fixture
def solver_cfg():
    return SolverConfig(dt=0.01, t_end=0.1, picard_tol=1e-12, cg_tol=1e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


SMALL_CONFIG = """
[model]
variant = sir
alpha = 2.0
mu = 0.01
gamma = 1.0

[mesh]
nx = 8
ny = 8

[time]
dt = 0.01
T = 0.05

[diffusion.1]
kind = constant
c = 0.1

[diffusion.2]
kind = truncated_linear
slope = 0.1
M = 1e4
eps = 1e-4

[diffusion.3]
kind = constant
c = 0.1

[initial]
preset = example1

[output]
snapshot_times = 0.0, 0.02, 0.05
"""


@pytest.fixture
def small_config_text():
    return textwrap.dedent(SMALL_CONFIG).lstrip()


@pytest.fixture
def small_config_path(tmp_path, small_config_text):
    path = tmp_path / "small.ini"
    path.write_text(small_config_text)
    return path
