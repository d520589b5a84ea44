"""
Initial data: projection of functions onto cell averages and the named presets.
"""
import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..exceptions import MeshError, ParameterError
from ..models.mesh import Field, Mesh, field_values
from ..models.state import State
from ..schemas.params import ModelParams
from ..schemas.run_config import InitialPreset, InitialSpec
from ..utils.random_utils import SplitMix64
from .analysis_service import sars_equilibria
from .snapshot_service import read_snapshot

logger = logging.getLogger(__name__)

EXAMPLE1_EPS0 = 0.01
EXAMPLE1_B = 5000.0
EXAMPLE1_BETA = 2000.0
EXAMPLE1_CENTERS = (
    (0.25, 0.25),
    (0.125, 0.125),
    (0.125, 0.375),
    (0.375, 0.125),
    (0.375, 0.375),
)

InitialData = Union[Callable[..., float], Sequence[float], np.ndarray, Field]


def project_initial(mesh: Mesh, u0: InitialData) -> Field:
    """
    Cell values of the initial datum.

    A callable is evaluated at the cell centers (midpoint rule) and may be vectorized
    over the coordinate arrays; anything else is taken as per-cell data.
    """
    if callable(u0):
        coords = [mesh.centers[:, d] for d in range(mesh.dimension)]
        try:
            values = np.asarray(u0(*coords), dtype=float)
            if values.shape != (mesh.n_cells,):
                values = np.broadcast_to(values, (mesh.n_cells,)).copy()
        except (TypeError, ValueError):
            values = np.array([float(u0(*center)) for center in mesh.centers])
        return Field(values)
    return Field(field_values(mesh, u0))


def _gudermannian(x: np.ndarray) -> np.ndarray:
    # antiderivative of sech
    return 2.0 * np.arctan(np.tanh(0.5 * x))


def _sech_cell_average(lo: np.ndarray, hi: np.ndarray, center: float, beta: float) -> np.ndarray:
    """1/(hi - lo) * integral over [lo, hi] of sech(beta (x - center))"""
    return (_gudermannian(beta * (hi - center)) - _gudermannian(beta * (lo - center))) / (beta * (hi - lo))


def example1_infected(mesh: Mesh) -> Field:
    """
    Five sech x sech pockets of amplitude B and width 1/beta, integrated exactly over
    each cell of a Cartesian grid. Other meshes fall back to center sampling.
    """
    if mesh.grid is None:
        return project_initial(
            mesh,
            lambda x, y: EXAMPLE1_B
            * sum(
                1.0 / np.cosh(EXAMPLE1_BETA * (x - xj)) / np.cosh(EXAMPLE1_BETA * (y - yj))
                for xj, yj in EXAMPLE1_CENTERS
            ),
        )
    grid = mesh.grid
    x = mesh.centers[:, 0]
    y = mesh.centers[:, 1]
    x_lo, x_hi = x - 0.5 * grid.dx, x + 0.5 * grid.dx
    y_lo, y_hi = y - 0.5 * grid.dy, y + 0.5 * grid.dy
    values = np.zeros(mesh.n_cells)
    for xj, yj in EXAMPLE1_CENTERS:
        values += _sech_cell_average(x_lo, x_hi, xj, EXAMPLE1_BETA) * _sech_cell_average(
            y_lo, y_hi, yj, EXAMPLE1_BETA
        )
    return Field(EXAMPLE1_B * values)


def example1_state(mesh: Mesh) -> State:
    return State(Field.constant(mesh, EXAMPLE1_EPS0), example1_infected(mesh), Field.zeros(mesh))


def example2_random_state(
    mesh: Mesh,
    center: Sequence[float],
    seed: int,
    eps: Sequence[float] = (0.001, 0.001, 0.001),
) -> State:
    """
    Equilibrium `center` plus eps_i * omega_i with omega_i uniform on [0, 1).

    One generator stream is consumed in storage order: all cells of omega_1, then
    omega_2, then omega_3.
    """
    rng = SplitMix64(seed)
    fields = []
    for c, e in zip(center, eps):
        omega = rng.uniform_array(mesh.n_cells)
        fields.append(Field(c + e * omega))
    return State(*fields)


def initial_state(mesh: Mesh, spec: InitialSpec, params: ModelParams, seed: Optional[int] = None) -> State:
    """Build the time-0 state of a run; `seed` overrides the configured seed."""
    preset = spec.preset
    logger.info(f"📊 Initial data preset: {preset.value}")

    if preset == InitialPreset.EXAMPLE1:
        return example1_state(mesh)

    if preset == InitialPreset.EXAMPLE2_RANDOM:
        effective_seed = spec.seed if seed is None else seed
        if effective_seed is None:
            raise ParameterError("example2-random initial data needs a seed")
        center = sars_equilibria(params).E2
        return example2_random_state(mesh, center, effective_seed, spec.eps)

    if preset == InitialPreset.CONSTANT:
        return State(*(Field.constant(mesh, c) for c in spec.values))

    fields = read_snapshot(spec.path)
    if len(fields[0]) != mesh.n_cells:
        raise MeshError(f"initial data file {spec.path} has {len(fields[0])} cells, mesh has {mesh.n_cells}")
    return State(*fields)
