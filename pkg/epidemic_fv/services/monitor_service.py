"""
Runtime monitors for the discrete a priori properties of a run: nonnegativity, the
L2 energy envelope, the accumulated gradient sum and the accumulated incidence sum.
"""
import logging
from typing import List, Optional

import numpy as np

from ..exceptions import MonitorError
from ..models.kinetics import incidence
from ..models.mesh import Mesh
from ..models.state import State
from ..schemas.params import ModelParams
from ..schemas.reports import MonitorSummary, StepReport, TimeSeriesRow
from ..schemas.run_config import SolverConfig
from .analysis_service import h1_seminorm, l2_norm
from .solver_service import RunSink

logger = logging.getLogger(__name__)

ENVELOPE_RTOL = 1e-9


def envelope_rate(params: ModelParams) -> float:
    """Growth rate c of the energy recursion E^{n+1}(1 - c dt) <= (1 + gamma dt) E^n + dt src"""
    c = 2.0 * params.alpha_incidence + params.gamma
    return c + 1.0 if params.is_sars else c


def envelope_source(params: ModelParams, domain_measure: float) -> float:
    if not params.is_sars:
        return 0.0
    return (params.A**2 + params.r**2) * domain_measure


def envelope_step(params: ModelParams, dt: float, previous: float, domain_measure: float) -> float:
    """B^{n+1} = ((1 + gamma dt) B^n + dt src) / (1 - c dt)"""
    c = envelope_rate(params)
    src = envelope_source(params, domain_measure)
    return ((1.0 + params.gamma * dt) * previous + dt * src) / (1.0 - c * dt)


def energy_envelope(params: ModelParams, dt: float, initial_energy: float, n_steps: int, domain_measure: float) -> List[float]:
    """B^0 = E^0, ..., B^N; empty when c dt >= 1, where the recursion gives no bound"""
    if envelope_rate(params) * dt >= 1.0:
        return []
    values = [initial_energy]
    for _ in range(n_steps):
        values.append(envelope_step(params, dt, values[-1], domain_measure))
    return values


class RunMonitor(RunSink):
    """
    Checks each new state as the run advances. With `strict` a breach raises
    MonitorError; otherwise it is logged and recorded in `violations`.
    """

    def __init__(self, mesh: Mesh, params: ModelParams, cfg: SolverConfig, manufactured: bool = False):
        self.mesh = mesh
        self.params = params
        self.cfg = cfg
        self.strict = cfg.strict_monitors
        self.envelope_applies = not manufactured and envelope_rate(params) * cfg.dt < 1.0
        self.violations: List[str] = []

        self.min_value = np.inf
        self.energy_max = 0.0
        self.envelope: Optional[float] = None
        self.envelope_max: Optional[float] = None
        self.within_envelope = True
        self.species_l2_max = [0.0, 0.0, 0.0]
        self.gradient_sums = [0.0, 0.0, 0.0]
        self.incidence_sum = 0.0

        if not manufactured and not self.envelope_applies:
            logger.info(f"📊 Energy envelope not applicable: c*dt = {envelope_rate(params) * cfg.dt:g} >= 1")

    def _breach(self, message: str) -> None:
        self.violations.append(message)
        logger.warning(f"⚠️ {message}")
        if self.strict:
            raise MonitorError(message)

    def _observe_norms(self, state: State) -> float:
        norms = [l2_norm(self.mesh, f) for f in state.fields]
        for i, value in enumerate(norms):
            self.species_l2_max[i] = max(self.species_l2_max[i], value)
        energy = sum(v * v for v in norms)
        self.energy_max = max(self.energy_max, energy)

        minimum = state.min()
        self.min_value = min(self.min_value, minimum)
        if minimum < -self.cfg.nonnegativity_tol:
            self._breach(f"step {state.step_index}: value {minimum:.3e} below -{self.cfg.nonnegativity_tol:g}")
        return energy

    def on_start(self, state: State, row: TimeSeriesRow) -> None:
        energy = self._observe_norms(state)
        if self.envelope_applies:
            self.envelope = energy
            self.envelope_max = energy

    def on_step(self, previous: State, state: State, report: StepReport, row: TimeSeriesRow) -> None:
        dt = self.cfg.dt
        energy = self._observe_norms(state)
        raw_minimum = min(report.min_raw)
        self.min_value = min(self.min_value, raw_minimum)
        if raw_minimum < -self.cfg.nonnegativity_tol:
            self._breach(f"step {state.step_index}: linear solve value {raw_minimum:.3e} below -{self.cfg.nonnegativity_tol:g}")

        for i, f in enumerate(state.fields):
            self.gradient_sums[i] += dt * h1_seminorm(self.mesh, f) ** 2

        u1n = previous.u1.values
        u1, u2, u3 = (f.values for f in state.fields)
        alpha = self.params.alpha_incidence
        sigma_lag = incidence(u1n, u2, u3, alpha)
        sigma_new = incidence(u1, u2, u3, alpha)
        self.incidence_sum += dt * float(np.sum(self.mesh.measures * (sigma_lag**2 + sigma_new**2)))

        if not self.envelope_applies:
            return
        self.envelope = envelope_step(self.params, dt, self.envelope, self.mesh.domain_measure)
        self.envelope_max = max(self.envelope_max, self.envelope)
        bound = self.cfg.energy_envelope_factor * self.envelope * (1.0 + ENVELOPE_RTOL)
        if energy > bound:
            self.within_envelope = False
            self._breach(f"step {state.step_index}: energy {energy:.6e} exceeds envelope {bound:.6e}")

    def summary(self) -> MonitorSummary:
        return MonitorSummary(
            min_value=float(self.min_value),
            nonnegative=self.min_value >= -self.cfg.nonnegativity_tol,
            energy_max=self.energy_max,
            energy_envelope_max=self.envelope_max,
            energy_within_envelope=self.within_envelope if self.envelope_applies else None,
            species_l2_max=tuple(self.species_l2_max),
            gradient_sums=tuple(self.gradient_sums),
            incidence_sum=self.incidence_sum,
        )

    def on_finish(self, result) -> None:
        s = self.summary()
        logger.info(
            f"📊 Monitors: min {s.min_value:.3e}, energy max {s.energy_max:.6e}, "
            f"envelope {'n/a' if s.energy_envelope_max is None else f'{s.energy_envelope_max:.6e}'}, "
            f"gradient sums {', '.join(f'{g:.6e}' for g in s.gradient_sums)}"
        )
