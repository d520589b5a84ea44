"""
Empirical convergence under mesh refinement with dt tied to h.

With a manufactured solution the compensating sources are added to each equation
and the discrete L2(Q_T) error against the exact solution is reported. Without one,
successive levels are compared after averaging the finer solution onto the coarser
grid (self-convergence), which needs each level to double the previous one.
"""
from dataclasses import dataclass
import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..exceptions import DiagnosticsError
from ..models.diffusion import eval_diffusion
from ..models.kinetics import reaction_rates
from ..models.mesh import Field, Mesh, build_cartesian
from ..models.state import State
from ..schemas.params import DiffusionLaw, ModelParams
from ..schemas.reports import ConvergenceRow
from ..schemas.run_config import ManufacturedKind, ManufacturedSpec, NonlocalSum, RunConfig, SolverConfig
from .initial_service import initial_state
from .solver_service import Source, run

logger = logging.getLogger(__name__)

MIN_LEVELS = 3

ExactSolution = Callable[[Mesh, float], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact cell-center solution and the factory of its compensating sources"""

    name: str
    exact: ExactSolution
    make_source: Callable[[Mesh, ModelParams, Sequence[DiffusionLaw], SolverConfig], Source]

    def initial(self, mesh: Mesh) -> State:
        return State(*(Field(v) for v in self.exact(mesh, 0.0)))


def _continuous_rates(params: ModelParams, u1, u2, u3):
    # the lagged arguments coincide with the current ones for a continuous solution
    return reaction_rates(params, u1, u2, u3, u1, u2)


def _mass_argument(mesh: Mesh, mean_value: float, mode: NonlocalSum) -> float:
    if mode == NonlocalSum.CELL_SUM:
        return mean_value * mesh.n_cells
    return mean_value * mesh.domain_measure


def cosine_problem(lx: float = 1.0, ly: float = 1.0) -> ManufacturedProblem:
    """u_i = 2 + cos(pi x / lx) cos(pi y / ly) exp(-t) for all three species"""
    wave = math.pi**2 * (1.0 / lx**2 + 1.0 / ly**2)

    def profile(mesh: Mesh) -> np.ndarray:
        x, y = mesh.centers[:, 0], mesh.centers[:, 1]
        return np.cos(math.pi * x / lx) * np.cos(math.pi * y / ly)

    def exact(mesh: Mesh, t: float):
        u = 2.0 + profile(mesh) * math.exp(-t)
        return u, u.copy(), u.copy()

    def make_source(mesh: Mesh, params: ModelParams, laws: Sequence[DiffusionLaw], cfg: SolverConfig) -> Source:
        psi = profile(mesh)
        # the cosine part integrates to zero, so every species has mean 2
        a = [eval_diffusion(law, _mass_argument(mesh, 2.0, cfg.nonlocal_sum)) for law in laws]

        def source(t: float):
            decay = psi * math.exp(-t)
            u = 2.0 + decay
            rates = _continuous_rates(params, u, u, u)
            # d/dt u - a Laplacian(u) - f(u), with Laplacian(u) = -wave * decay
            return tuple(-decay + a_i * wave * decay - f for a_i, f in zip(a, rates))

        return source

    return ManufacturedProblem("cosine", exact, make_source)


def constant_problem(values: Sequence[float]) -> ManufacturedProblem:
    """u_i = c_i held steady by the sources -f_i(c)"""
    c1, c2, c3 = (float(v) for v in values)

    def exact(mesh: Mesh, t: float):
        n = mesh.n_cells
        return np.full(n, c1), np.full(n, c2), np.full(n, c3)

    def make_source(mesh: Mesh, params: ModelParams, laws: Sequence[DiffusionLaw], cfg: SolverConfig) -> Source:
        rates = _continuous_rates(params, c1, c2, c3)
        sources = tuple(np.full(mesh.n_cells, -float(f)) for f in rates)
        return lambda t: sources

    return ManufacturedProblem("constant", exact, make_source)


def manufactured_problem(spec: ManufacturedSpec, lx: float = 1.0, ly: float = 1.0) -> ManufacturedProblem:
    if spec.kind == ManufacturedKind.CONSTANT:
        return constant_problem(spec.values)
    return cosine_problem(lx, ly)


def _check_levels(levels: Sequence[int], doubling: bool) -> List[int]:
    levels = [int(n) for n in levels]
    if len(levels) < MIN_LEVELS:
        raise DiagnosticsError(f"a convergence study needs at least {MIN_LEVELS} levels, got {len(levels)}")
    if any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DiagnosticsError(f"levels must be increasing positive cell counts, got {levels}")
    if doubling and any(b != 2 * a for a, b in zip(levels, levels[1:])):
        raise DiagnosticsError(f"self-convergence needs each level to double the previous one, got {levels}")
    return levels


def _level_solver(config: RunConfig, h: float) -> SolverConfig:
    """Solver settings of one level: the configured dt/h ratio applied to this h"""
    spec = config.mesh
    h_config = max(spec.lx / spec.nx, spec.ly / spec.ny)
    dt = config.solver.dt * h / h_config
    return config.solver.model_copy(update={"dt": dt})


def _restrict(fine: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Average 2x2 blocks of a (2 ny, 2 nx) row-major field onto the (ny, nx) grid"""
    blocks = fine.reshape(ny, 2, nx, 2)
    return blocks.mean(axis=(1, 3)).reshape(-1)


def _orders(rows: List[ConvergenceRow]) -> None:
    for previous, row in zip(rows, rows[1:]):
        if previous.error > 0.0 and row.error > 0.0:
            row.order = math.log(previous.error / row.error) / math.log(previous.h / row.h)


def convergence_study(
    config: RunConfig,
    levels: Optional[Sequence[int]] = None,
    problem: Optional[ManufacturedProblem] = None,
    self_convergence: bool = False,
) -> list[ConvergenceRow]:
    """
    Run the configured problem on n x n grids for each level n.

    The manufactured solution comes from `problem` or from config.manufactured;
    without either, `self_convergence` must be requested explicitly.
    """
    levels = levels if levels is not None else config.levels
    spec = config.mesh
    if problem is None and config.manufactured is not None:
        problem = manufactured_problem(config.manufactured, spec.lx, spec.ly)
    if problem is None and not self_convergence:
        raise DiagnosticsError(
            "no manufactured solution configured: add a [manufactured] section or request self-convergence"
        )
    levels = _check_levels(levels, doubling=problem is None)

    params = config.model
    laws = config.diffusion
    rows: List[ConvergenceRow] = []
    previous_history: Optional[List[State]] = None
    previous_dt = 0.0

    for n in levels:
        mesh = build_cartesian(n, n, spec.lx, spec.ly)
        h = max(spec.lx, spec.ly) / n
        cfg = _level_solver(config, h)
        logger.info(f"📊 Level {n}x{n}: h={h:.6g}, dt={cfg.dt:.6g}, {cfg.n_steps} steps")

        if problem is not None:
            source = problem.make_source(mesh, params, laws, cfg)
            result = run(problem.initial(mesh), mesh, params, laws, cfg, source=source, keep_history=True)
            total = 0.0
            for state in result.history[1:]:
                exact = problem.exact(mesh, state.time)
                for f, e in zip(state.fields, exact):
                    diff = f.values - e
                    total += cfg.dt * float(np.sum(mesh.measures * diff * diff))
            rows.append(ConvergenceRow(level=n, h=h, dt=cfg.dt, error=math.sqrt(total)))
            continue

        initial = initial_state(mesh, config.initial, params)
        result = run(initial, mesh, params, laws, cfg, keep_history=True)
        history = result.history
        if previous_history is not None:
            coarse_steps = len(previous_history) - 1
            if len(history) - 1 != 2 * coarse_steps:
                raise DiagnosticsError(
                    f"level {n} has {len(history) - 1} steps, expected {2 * coarse_steps} for comparison"
                )
            coarse_n = n // 2
            coarse_measure = (spec.lx / coarse_n) * (spec.ly / coarse_n)
            total = 0.0
            for k in range(1, coarse_steps + 1):
                for f_coarse, f_fine in zip(previous_history[k].fields, history[2 * k].fields):
                    diff = f_coarse.values - _restrict(f_fine.values, coarse_n, coarse_n)
                    total += previous_dt * coarse_measure * float(np.sum(diff * diff))
            rows.append(ConvergenceRow(level=coarse_n, h=2.0 * h, dt=previous_dt, error=math.sqrt(total)))
        previous_history = history
        previous_dt = cfg.dt

    _orders(rows)
    for row in rows:
        order = "-" if row.order is None else f"{row.order:.3f}"
        logger.info(f"📊 n={row.level}: error {row.error:.6e}, order {order}")
    return rows
