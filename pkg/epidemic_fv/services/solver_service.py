"""
Implicit finite-volume time stepping of the nonlocal SIR and SARS systems.

Each species equation of one step reads

    m(K) (u_K - u_K^n) / dt + a_i(s_i^n) sum_L tau_KL (u_K - u_L) = m(K) f_i,K

with the diffusion coefficient frozen at the time-n total mass s_i^n. The coupled
reactions are resolved by a damped Picard iteration that solves u3, then u2, then u1,
each as a linear symmetric M-matrix system.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
from scipy import sparse

from ..exceptions import ConvergenceError, LinearSolveError, ParameterError, PicardError
from ..models.diffusion import eval_diffusion
from ..models.kinetics import incidence, reaction_rates
from ..models.mesh import Field, FieldLike, Mesh, field_values
from ..models.state import State
from ..schemas.params import DiffusionLaw, ModelParams
from ..schemas.reports import SolveReport, StepReport, TimeSeriesRow
from ..schemas.run_config import NonlocalSum, SolverConfig
from .linalg_service import SparseMatrix, cg_solve, ordered_dot

logger = logging.getLogger(__name__)

# source(t) -> per-unit-measure source of each equation at time t
Source = Callable[[float], Sequence[np.ndarray]]

TINY = 1e-300
MIN_DAMPING = 2.0**-6
MIN_REFINE_TOL = 1e-15


def nonlocal_argument(mesh: Mesh, f: FieldLike, mode: NonlocalSum = NonlocalSum.INTEGRAL) -> float:
    """sum_K m(K) u_K, or the unweighted sum_K u_K for the cell_sum mode"""
    u = field_values(mesh, f)
    if mode == NonlocalSum.CELL_SUM:
        return ordered_dot(np.ones_like(u), u)
    return ordered_dot(mesh.measures, u)


def diffusion_coefficients(
    mesh: Mesh,
    state: State,
    laws: Sequence[DiffusionLaw],
    mode: NonlocalSum = NonlocalSum.INTEGRAL,
) -> tuple[float, float, float]:
    coefficients = tuple(
        eval_diffusion(law, nonlocal_argument(mesh, f, mode)) for law, f in zip(laws, state.fields)
    )
    for i, a in enumerate(coefficients, start=1):
        if not a > 0.0:
            raise ParameterError(f"diffusion coefficient a{i} = {a!r} is not positive")
    return coefficients


@lru_cache(maxsize=16)
def _graph_laplacian(mesh: Mesh) -> sparse.csr_matrix:
    """(L u)_K = sum_L tau_KL (u_K - u_L); symmetric with zero row sums"""
    n = mesh.n_cells
    if mesh.n_interfaces == 0:
        return sparse.csr_matrix((n, n))
    k, l = mesh.cell_pairs[:, 0], mesh.cell_pairs[:, 1]
    tau = mesh.transmissibilities
    rows = np.concatenate((k, l, k, l))
    cols = np.concatenate((k, l, l, k))
    values = np.concatenate((tau, tau, -tau, -tau))
    laplacian = sparse.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    laplacian.sum_duplicates()
    laplacian.sort_indices()
    return laplacian


def assemble_species_system(
    mesh: Mesh,
    coeff: float,
    dt: float,
    reaction_diag: FieldLike,
    rhs: FieldLike,
) -> tuple[SparseMatrix, np.ndarray]:
    """
    Matrix diag(m(K)/dt + m(K) reaction_diag_K) + coeff * L, L the two-point graph
    Laplacian of the mesh, and the right-hand side unchanged.
    """
    if not coeff > 0.0:
        raise ParameterError(f"diffusion coefficient must be positive, got {coeff!r}")
    if not dt > 0.0:
        raise ParameterError(f"time step must be positive, got {dt!r}")
    reaction = field_values(mesh, reaction_diag)
    if np.any(reaction < 0.0):
        raise ParameterError("reaction diagonal must be nonnegative")
    b = np.array(field_values(mesh, rhs), dtype=float)

    m = mesh.measures
    diagonal = sparse.diags(m / dt + m * reaction, format="csr")
    return SparseMatrix(diagonal + coeff * _graph_laplacian(mesh), symmetric=True), b


def _balance(mass_diag: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Shift x by a constant so that sum_K D_K x_K = sum_K b_K, D the diagonal without
    the Laplacian. The Laplacian columns sum to zero, so this is the global balance
    of the exact solution.
    """
    total = ordered_dot(np.ones_like(mass_diag), mass_diag)
    defect = ordered_dot(np.ones_like(b), b) - ordered_dot(mass_diag, x)
    return x + defect / total


def solve_species(
    mesh: Mesh,
    coeff: float,
    dt: float,
    reaction_diag: np.ndarray,
    rhs: np.ndarray,
    cfg: SolverConfig,
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, SolveReport, float]:
    """
    Assemble and solve one species system; returns (values, report, minimum value).

    With a nonnegative right-hand side the exact solution is nonnegative. While solver
    round-off still leaves a value below -cfg.nonnegativity_tol, the system is solved
    again from the current iterate at a hundredfold tighter tolerance, down to
    MIN_REFINE_TOL. Values are never clipped.
    """
    A, b = assemble_species_system(mesh, coeff, dt, reaction_diag, rhs)
    mass_diag = mesh.measures / dt + mesh.measures * field_values(mesh, reaction_diag)
    cg_max = cfg.cg_max if cfg.cg_max is not None else 10 * mesh.n_cells
    x, report = cg_solve(A, b, cfg.cg_tol, cg_max, x0=x0)
    x = _balance(mass_diag, b, x)
    iterations = report.iterations

    tol = cfg.cg_tol
    sign_bound = bool(np.all(b >= 0.0))
    while sign_bound and x.min() < -cfg.nonnegativity_tol and tol > MIN_REFINE_TOL:
        tol = max(tol * 1e-2, MIN_REFINE_TOL)
        try:
            refined, report = cg_solve(A, b, tol, cg_max, x0=x)
        except LinearSolveError as e:
            iterations += e.report.iterations if e.report is not None else 0
            break
        iterations += report.iterations
        x = _balance(mass_diag, b, refined)
        logger.debug(f"linear solve refined to tolerance {tol:.0e}, minimum {x.min():.3e}")

    report = report.model_copy(update={"iterations": iterations})
    return x, report, float(x.min())


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(new))), TINY) if new.size else TINY
    return float(np.max(np.abs(new - old))) / scale if new.size else 0.0


def step(
    state: State,
    mesh: Mesh,
    params: ModelParams,
    laws: Sequence[DiffusionLaw],
    cfg: SolverConfig,
    source: Optional[Source] = None,
) -> tuple[State, StepReport]:
    """
    Advance one time step. Raises PicardError carrying the StepReport when the
    fixed-point iteration does not reach cfg.picard_tol within cfg.picard_max sweeps.
    """
    state.check_mesh(mesh)
    if len(laws) != 3:
        raise ParameterError(f"three diffusion laws are needed, got {len(laws)}")

    dt = cfg.dt
    m = mesh.measures
    n = mesh.n_cells
    step_index = state.step_index + 1
    t_new = state.time + dt
    u1n, u2n, u3n = (f.values for f in state.fields)
    a1, a2, a3 = diffusion_coefficients(mesh, state, laws, cfg.nonlocal_sum)

    if source is not None:
        s1, s2, s3 = (np.asarray(s, dtype=float) for s in source(t_new))
    else:
        s1 = s2 = s3 = np.zeros(n)

    alpha, mu, gamma = params.alpha_incidence, params.mu, params.gamma
    sars = params.is_sars
    recruitment = params.A if sars else 0.0

    reports: List[Optional[SolveReport]] = [None, None, None]
    raw_mins = [0.0, 0.0, 0.0]
    cg_iterations = 0

    def account(index: int, report: SolveReport, raw_min: float) -> None:
        nonlocal cg_iterations
        reports[index] = report
        raw_mins[index] = raw_min
        cg_iterations += report.iterations

    u1k, u2k, u3k = u1n.copy(), u2n.copy(), u3n.copy()

    if not sars:
        # recovered equation only sees time-n data
        u3k, report, raw_min = solve_species(
            mesh, a3, dt, np.zeros(n), m * (u3n / dt + gamma * u2n + s3), cfg, x0=u3n
        )
        account(2, report, raw_min)

    damping = cfg.damping
    residual = np.inf
    previous_residual = np.inf
    iterations = 0
    converged = False

    while iterations < cfg.picard_max:
        iterations += 1
        changes = []

        if sars:
            positive = u2k > 0.0
            h_lag = np.where(positive, params.r, 0.0)
            u3_solve, report, raw_min = solve_species(
                mesh, a3, dt, np.full(n, mu), m * (u3n / dt + gamma * u2n + h_lag + s3), cfg, x0=u3k
            )
            account(2, report, raw_min)
            changes.append(_relative_change(u3_solve, u3k))
            u3k = (1.0 - damping) * u3k + damping * u3_solve
            # H(u2) = r u2 / u2^k on the positive set; equals r once the iterate settles
            treatment_diag = np.where(positive, params.r / np.maximum(u2k, TINY), 0.0)
        else:
            treatment_diag = np.zeros(n)

        sigma_lag = incidence(u1n, u2k, u3k, alpha)
        u2_solve, report, raw_min = solve_species(
            mesh, a2, dt, gamma + mu + treatment_diag, m * (u2n / dt + sigma_lag + s2), cfg, x0=u2k
        )
        account(1, report, raw_min)
        changes.append(_relative_change(u2_solve, u2k))
        u2k = (1.0 - damping) * u2k + damping * u2_solve

        # sigma(u1, u2, u3) = u1 * alpha u2+ / (u1+ + u2+ + u3+) goes on the diagonal
        u2p, u3p = np.maximum(u2k, 0.0), np.maximum(u3k, 0.0)
        total = np.maximum(u1k, 0.0) + u2p + u3p
        infection = np.divide(alpha * u2p, total, out=np.zeros(n), where=total > 0.0)
        u1_solve, report, raw_min = solve_species(
            mesh, a1, dt, mu + infection, m * (u1n / dt + recruitment + s1), cfg, x0=u1k
        )
        account(0, report, raw_min)
        changes.append(_relative_change(u1_solve, u1k))
        u1k = (1.0 - damping) * u1k + damping * u1_solve

        residual = max(changes)
        logger.debug(f"step {step_index} sweep {iterations}: residual {residual:.3e}, damping {damping:g}")
        if residual <= cfg.picard_tol:
            converged = True
            break
        if iterations >= cfg.picard_max // 2 and residual >= previous_residual and damping > MIN_DAMPING:
            damping = max(0.5 * damping, MIN_DAMPING)
            logger.debug(f"step {step_index}: residual stalled, damping halved to {damping:g}")
        previous_residual = residual

    report = StepReport(
        step_index=step_index,
        time=t_new,
        picard_iterations=iterations,
        picard_residual=float(residual),
        damping=damping,
        coefficients=(a1, a2, a3),
        solve_reports=[r for r in reports if r is not None],
        cg_iterations=cg_iterations,
        min_raw=tuple(raw_mins),
    )
    if not converged:
        logger.error(f"❌ Picard iteration of step {step_index} stopped at residual {residual:.3e}")
        raise PicardError(
            f"fixed-point iteration of step {step_index} did not converge in {iterations} sweeps "
            f"(residual {residual:.3e}, tolerance {cfg.picard_tol:.3e})",
            report,
            step_index=step_index,
        )
    new_state = State(Field(u1k), Field(u2k), Field(u3k), time=t_new, step_index=step_index)
    return new_state, report


def discrete_residual(
    mesh: Mesh,
    params: ModelParams,
    laws: Sequence[DiffusionLaw],
    cfg: SolverConfig,
    previous: State,
    current: State,
    source: Optional[Source] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Residuals of the three scheme equations per unit cell measure, for `current`
    taken as the step following `previous`.
    """
    previous.check_mesh(mesh)
    current.check_mesh(mesh)
    coefficients = diffusion_coefficients(mesh, previous, laws, cfg.nonlocal_sum)
    u1n, u2n, _ = (f.values for f in previous.fields)
    u1, u2, u3 = (f.values for f in current.fields)
    rates = reaction_rates(params, u1, u2, u3, u1n, u2n)
    if source is not None:
        sources = [np.asarray(s, dtype=float) for s in source(previous.time + cfg.dt)]
    else:
        sources = [np.zeros(mesh.n_cells)] * 3

    laplacian = _graph_laplacian(mesh)
    residuals = []
    for a, old, new, rate, s in zip(coefficients, previous.fields, current.fields, rates, sources):
        values = new.values
        residuals.append(
            (values - old.values) / cfg.dt + a * (laplacian @ values) / mesh.measures - rate - s
        )
    return tuple(residuals)


def time_series_row(
    mesh: Mesh,
    state: State,
    laws: Sequence[DiffusionLaw],
    mode: NonlocalSum = NonlocalSum.INTEGRAL,
) -> TimeSeriesRow:
    """a_i and the discrete integral of each species at state.time, with extrema"""
    a = diffusion_coefficients(mesh, state, laws, mode)
    masses = [nonlocal_argument(mesh, f) for f in state.fields]
    mins = [f.min() for f in state.fields]
    maxs = [f.max() for f in state.fields]
    return TimeSeriesRow(
        t=state.time,
        a1=a[0], a2=a[1], a3=a[2],
        mass1=masses[0], mass2=masses[1], mass3=masses[2],
        min_u1=mins[0], min_u2=mins[1], min_u3=mins[2],
        max_u1=maxs[0], max_u2=maxs[1], max_u3=maxs[2],
    )


class RunSink:
    """Receives run events; subclasses override what they need."""

    def on_start(self, state: State, row: TimeSeriesRow) -> None:
        pass

    def on_step(self, previous: State, state: State, report: StepReport, row: TimeSeriesRow) -> None:
        pass

    def on_snapshot(self, state: State) -> None:
        pass

    def on_finish(self, result: "RunResult") -> None:
        pass


@dataclass
class RunResult:
    final: State
    reports: List[StepReport] = field(default_factory=list)
    rows: List[TimeSeriesRow] = field(default_factory=list)
    snapshot_times: List[float] = field(default_factory=list)
    history: Optional[List[State]] = None

    @property
    def picard_iterations_total(self) -> int:
        return sum(r.picard_iterations for r in self.reports)

    @property
    def picard_iterations_max(self) -> int:
        return max((r.picard_iterations for r in self.reports), default=0)

    @property
    def cg_iterations_total(self) -> int:
        return sum(r.cg_iterations for r in self.reports)


def run(
    initial: State,
    mesh: Mesh,
    params: ModelParams,
    laws: Sequence[DiffusionLaw],
    cfg: SolverConfig,
    sinks: Iterable[RunSink] = (),
    snapshot_times: Sequence[float] = (),
    keep_history: bool = False,
    source: Optional[Source] = None,
) -> RunResult:
    """
    Advance cfg.n_steps steps from `initial`.

    A snapshot is emitted for the first state whose time lies within dt/2 of each
    scheduled time. Step failures propagate with their 1-based step index set.
    """
    initial.check_mesh(mesh)
    if initial.min() < 0.0:
        raise ParameterError(f"initial data must be nonnegative, minimum is {initial.min()!r}")
    sinks = list(sinks)
    pending = sorted(snapshot_times)
    n_steps = cfg.n_steps

    row = time_series_row(mesh, initial, laws, cfg.nonlocal_sum)
    result = RunResult(final=initial, rows=[row], history=[initial] if keep_history else None)
    logger.info(
        f"🚀 Run: {mesh.n_cells} cells, {n_steps} steps of dt={cfg.dt:g}, variant {params.variant.value}"
    )
    for sink in sinks:
        sink.on_start(initial, row)

    def emit_snapshots(state: State) -> None:
        due = [t for t in pending if abs(state.time - t) <= 0.5 * cfg.dt]
        if not due:
            return
        for t in due:
            pending.remove(t)
        result.snapshot_times.append(state.time)
        for sink in sinks:
            sink.on_snapshot(state)

    emit_snapshots(initial)
    state = initial
    for _ in range(n_steps):
        previous = state
        try:
            state, report = step(previous, mesh, params, laws, cfg, source)
        except ConvergenceError as e:
            if e.step_index is None:
                e.step_index = previous.step_index + 1
            logger.error(f"❌ Step {e.step_index} failed: {e.detail}")
            raise
        row = time_series_row(mesh, state, laws, cfg.nonlocal_sum)
        result.final = state
        result.reports.append(report)
        result.rows.append(row)
        if keep_history:
            result.history.append(state)
        for sink in sinks:
            sink.on_step(previous, state, report, row)
        emit_snapshots(state)

    if pending:
        logger.warning(f"⚠️ Snapshot times {pending} lie outside the simulated interval")
    logger.info(
        f"✅ Run finished at t={state.time:g}: {result.picard_iterations_total} Picard sweeps, "
        f"{result.cg_iterations_total} CG iterations"
    )
    for sink in sinks:
        sink.on_finish(result)
    return result
