from pathlib import Path

import pytest

from epidemic_fv.exceptions import DiagnosticsError
from epidemic_fv.models.mesh import build_cartesian
from epidemic_fv.schemas.run_config import ManufacturedKind, ManufacturedSpec
from epidemic_fv.services.config_service import load_config, parse_config
from epidemic_fv.services.convergence_service import constant_problem, convergence_study, cosine_problem

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def manufactured_config():
    return load_config(CONFIGS / "manufactured.ini")


def test_constant_solution_is_reproduced(manufactured_config):
    config = manufactured_config.model_copy(
        update={"manufactured": ManufacturedSpec(kind=ManufacturedKind.CONSTANT, values=(1.0, 0.5, 0.2))}
    )
    rows = convergence_study(config, levels=[4, 8, 16])
    assert [row.level for row in rows] == [4, 8, 16]
    assert all(row.error < 1e-12 for row in rows)


def test_explicit_problem_overrides_config(manufactured_config):
    rows = convergence_study(manufactured_config, levels=[2, 4, 8], problem=constant_problem((0.3, 0.3, 0.3)))
    assert all(row.error < 1e-12 for row in rows)


def test_dt_follows_h(manufactured_config):
    rows = convergence_study(manufactured_config, levels=[4, 8, 16], problem=constant_problem((1.0, 1.0, 1.0)))
    for row in rows:
        assert row.dt / row.h == pytest.approx(0.03125 * 16)


@pytest.mark.slow
def test_cosine_errors_decrease(manufactured_config):
    rows = convergence_study(manufactured_config)
    assert [row.level for row in rows] == [16, 32, 64]
    errors = [row.error for row in rows]
    assert errors[0] > errors[1] > errors[2] > 0.0
    assert rows[0].order is None
    assert rows[-1].order >= 0.9


def test_cosine_initial_data():
    mesh = build_cartesian(4, 4, 1.0, 1.0)
    state = cosine_problem().initial(mesh)
    assert state.u1 == state.u2 == state.u3
    assert 1.0 < state.u1.min() and state.u1.max() < 3.0


def test_needs_manufactured_or_self_convergence(small_config_text):
    config = parse_config(small_config_text)
    with pytest.raises(DiagnosticsError):
        convergence_study(config, levels=[4, 8, 16])


def test_needs_three_levels(manufactured_config):
    with pytest.raises(DiagnosticsError):
        convergence_study(manufactured_config, levels=[16, 32])


def test_levels_must_increase(manufactured_config):
    with pytest.raises(DiagnosticsError):
        convergence_study(manufactured_config, levels=[16, 8, 32])


def test_self_convergence_needs_doubling(small_config_text):
    config = parse_config(small_config_text)
    with pytest.raises(DiagnosticsError):
        convergence_study(config, levels=[4, 8, 12], self_convergence=True)


def test_self_convergence_rows(small_config_text):
    config = parse_config(small_config_text)
    # T = 0.04 is a whole number of steps on every level: dt = 0.02, 0.01, 0.005
    config = config.model_copy(update={"solver": config.solver.model_copy(update={"t_end": 0.04})})
    rows = convergence_study(config, levels=[4, 8, 16], self_convergence=True)
    # one row per compared pair, labelled with the coarser level
    assert [row.level for row in rows] == [4, 8]
    assert all(row.error > 0.0 for row in rows)
    assert rows[1].order is not None
