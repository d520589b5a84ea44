"""
Space and time translate norms of a stored run on a uniform Cartesian grid.

    space, shift y:  sum_n dt sum_{K : K+y inside} m(K) |u^{n}_{K+y} - u^{n}_K|^2,  n = 1..N
    time, tau = j dt:  sum_{n=0}^{N-1-j} dt sum_K m(K) |u^{n+1+j}_K - u^{n+1}_K|^2

Each value is summed over the three species.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..exceptions import DiagnosticsError, NotApplicableError
from ..models.mesh import Mesh
from ..models.state import State
from ..schemas.reports import TranslateRow

logger = logging.getLogger(__name__)

LATTICE_RTOL = 1e-9


def _lattice_steps(value: float, spacing: float, what: str) -> int:
    steps = value / spacing
    nearest = round(steps)
    if abs(steps - nearest) > LATTICE_RTOL * max(1.0, abs(steps)):
        raise DiagnosticsError(f"{what} {value!r} is not a multiple of {spacing!r}")
    return int(nearest)


def _space_translate(mesh: Mesh, history: Sequence[State], dt: float, ix: int, iy: int) -> float:
    grid = mesh.grid
    nx, ny = grid.nx, grid.ny
    if abs(ix) >= nx or abs(iy) >= ny:
        return 0.0
    j0, j1 = max(0, -iy), ny - max(0, iy)
    i0, i1 = max(0, -ix), nx - max(0, ix)
    measure = grid.dx * grid.dy
    total = 0.0
    for state in history[1:]:
        for f in state.fields:
            u = f.values.reshape(ny, nx)
            diff = u[j0 + iy:j1 + iy, i0 + ix:i1 + ix] - u[j0:j1, i0:i1]
            total += dt * measure * float(np.sum(diff * diff))
    return total


def _time_translate(mesh: Mesh, history: Sequence[State], dt: float, j: int) -> float:
    n_steps = len(history) - 1
    total = 0.0
    for n in range(n_steps - j):
        later, earlier = history[n + 1 + j], history[n + 1]
        for f_late, f_early in zip(later.fields, earlier.fields):
            diff = f_late.values - f_early.values
            total += dt * float(np.sum(mesh.measures * diff * diff))
    return total


def translate_diagnostics(
    history: Sequence[State],
    mesh: Mesh,
    shifts: Sequence[Sequence[float]] = (),
    taus: Sequence[float] = (),
    dt: Optional[float] = None,
) -> list[TranslateRow]:
    """
    One row per requested shift and per requested tau, in the order given.

    `history` holds the states at t^0, ..., t^N; shifts must be lattice vectors of the
    grid and taus multiples of dt, otherwise DiagnosticsError is raised.
    """
    if mesh.grid is None:
        raise NotApplicableError("translate diagnostics need a uniform Cartesian grid")
    if len(history) < 2:
        raise DiagnosticsError("translate diagnostics need at least one computed step")
    for state in history:
        state.check_mesh(mesh)
    if dt is None:
        dt = history[1].time - history[0].time
    if not dt > 0.0:
        raise DiagnosticsError(f"time step must be positive, got {dt!r}")

    grid = mesh.grid
    rows = []
    for shift in shifts:
        if len(shift) != 2:
            raise DiagnosticsError(f"shift {tuple(shift)} is not a 2-vector")
        ix = _lattice_steps(shift[0], grid.dx, "shift component")
        iy = _lattice_steps(shift[1], grid.dy, "shift component")
        rows.append(
            TranslateRow(
                kind="space",
                shift=(float(shift[0]), float(shift[1])),
                magnitude=math.hypot(shift[0], shift[1]),
                value=_space_translate(mesh, history, dt, ix, iy),
            )
        )
    for tau in taus:
        if tau < 0.0:
            raise DiagnosticsError(f"tau must be nonnegative, got {tau!r}")
        j = _lattice_steps(tau, dt, "tau")
        rows.append(
            TranslateRow(kind="time", shift=(float(tau),), magnitude=float(tau), value=_time_translate(mesh, history, dt, j))
        )
    logger.info(f"📊 Translate diagnostics: {len(rows)} rows over {len(history) - 1} steps")
    return rows
