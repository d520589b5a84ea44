import numpy as np
import pytest

from epidemic_fv.exceptions import ConfigError, MeshError, ParameterError
from epidemic_fv.models.mesh import Field, build_cartesian
from epidemic_fv.models.state import State
from epidemic_fv.schemas.params import ModelParams
from epidemic_fv.schemas.run_config import InitialPreset, InitialSpec
from epidemic_fv.services.analysis_service import sars_equilibria
from epidemic_fv.services.initial_service import (
    EXAMPLE1_CENTERS,
    example1_state,
    example2_random_state,
    initial_state,
    project_initial,
)
from epidemic_fv.services.snapshot_service import write_snapshot
from epidemic_fv.utils.random_utils import SplitMix64


def test_splitmix64_vectors():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


def test_splitmix64_uniform():
    rng = SplitMix64(42)
    assert rng.uniform() == 0.74156487877182331
    values = SplitMix64(7).uniform_array(1000)
    assert values.min() >= 0.0 and values.max() < 1.0


def test_splitmix64_rejects_negative_seed():
    with pytest.raises(ValueError):
        SplitMix64(-1)


def test_project_constant(unit_2x2):
    np.testing.assert_array_equal(project_initial(unit_2x2, lambda x, y: 3.0).values, np.full(4, 3.0))


def test_project_samples_centers(unit_2x2):
    field = project_initial(unit_2x2, lambda x, y: x + 10.0 * y)
    np.testing.assert_allclose(field.values, [2.75, 3.25, 7.75, 8.25])


def test_project_scalar_only_callable(unit_2x2):
    field = project_initial(unit_2x2, lambda x, y: max(x, y))
    np.testing.assert_allclose(field.values, [0.25, 0.75, 0.75, 0.75])


def test_project_per_cell_data(unit_2x2):
    assert project_initial(unit_2x2, [1.0, 2.0, 3.0, 4.0]) == Field([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(MeshError):
        project_initial(unit_2x2, [1.0, 2.0])


def test_example1_state():
    mesh = build_cartesian(40, 40, 1.0, 1.0)
    state = example1_state(mesh)
    np.testing.assert_array_equal(state.u1.values, np.full(mesh.n_cells, 0.01))
    np.testing.assert_array_equal(state.u3.values, np.zeros(mesh.n_cells))
    u2 = state.u2.values
    assert u2.min() >= 0.0
    # the largest cell averages sit next to the pocket centers
    peak = mesh.centers[np.argmax(u2)]
    assert min(np.hypot(peak[0] - x, peak[1] - y) for x, y in EXAMPLE1_CENTERS) < mesh.grid.dx


def test_example1_cell_averages_carry_pocket_mass():
    mesh = build_cartesian(64, 64, 1.0, 1.0)
    mass = float(np.sum(mesh.measures * example1_state(mesh).u2.values))
    # each pocket integrates to B (pi / beta)^2 and sits well inside the domain
    assert mass == pytest.approx(5 * 5000.0 * (np.pi / 2000.0) ** 2, rel=1e-9)


def test_example2_random_is_reproducible(unit_2x2):
    center = (1.0, 2.0, 3.0)
    first = example2_random_state(unit_2x2, center, seed=11)
    second = example2_random_state(unit_2x2, center, seed=11)
    other = example2_random_state(unit_2x2, center, seed=12)
    assert all(a == b for a, b in zip(first.fields, second.fields))
    assert first.u1 != other.u1


def test_example2_random_stream_order(unit_2x2):
    state = example2_random_state(unit_2x2, (0.0, 0.0, 0.0), seed=5, eps=(1.0, 1.0, 1.0))
    omega = SplitMix64(5).uniform_array(12)
    np.testing.assert_array_equal(state.u1.values, omega[:4])
    np.testing.assert_array_equal(state.u2.values, omega[4:8])
    np.testing.assert_array_equal(state.u3.values, omega[8:])


def test_initial_state_example2_centers_on_e2(unit_2x2, sars_params):
    spec = InitialSpec(preset=InitialPreset.EXAMPLE2_RANDOM, seed=3)
    state = initial_state(unit_2x2, spec, sars_params)
    e2 = sars_equilibria(sars_params).E2
    for field, c in zip(state.fields, e2):
        assert np.all(field.values >= c)
        assert np.all(field.values < c + 0.001)


def test_initial_state_seed_override(unit_2x2, sars_params):
    spec = InitialSpec(preset=InitialPreset.EXAMPLE2_RANDOM, seed=3)
    assert initial_state(unit_2x2, spec, sars_params, seed=4).u1 != initial_state(unit_2x2, spec, sars_params).u1


def test_initial_state_constant(unit_2x2, sir_params):
    spec = InitialSpec(preset=InitialPreset.CONSTANT, values=(1.0, 0.5, 0.0))
    state = initial_state(unit_2x2, spec, sir_params)
    assert [f.max() for f in state.fields] == [1.0, 0.5, 0.0]


def test_initial_state_from_file(tmp_path, unit_2x2, sir_params):
    stored = State(Field([0.1, 0.2, 0.3, 0.4]), Field([1.0, 2.0, 3.0, 4.0]), Field.zeros(unit_2x2))
    path = write_snapshot(tmp_path / "u0.csv", unit_2x2, stored)
    state = initial_state(unit_2x2, InitialSpec(preset=InitialPreset.FILE, path=str(path)), sir_params)
    assert all(a == b for a, b in zip(state.fields, stored.fields))

    with pytest.raises(MeshError):
        initial_state(build_cartesian(3, 3, 1.0, 1.0), InitialSpec(preset=InitialPreset.FILE, path=str(path)), sir_params)


def test_initial_state_missing_file(tmp_path, sir_params, unit_2x2):
    spec = InitialSpec(preset=InitialPreset.FILE, path=str(tmp_path / "missing.csv"))
    with pytest.raises(ConfigError):
        initial_state(unit_2x2, spec, sir_params)


def test_example2_preset_needs_sars(unit_2x2):
    spec = InitialSpec(preset=InitialPreset.EXAMPLE2_RANDOM, seed=1)
    with pytest.raises(ParameterError):
        initial_state(unit_2x2, spec, ModelParams.example1())
