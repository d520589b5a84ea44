from typing import List, Optional

from pydantic import BaseModel


class SolveReport(BaseModel):
    iterations: int
    residual: float  # final ||Ax - b||_2
    tolerance: float  # absolute threshold tol * ||b||_2 the residual was held to
    converged: bool
    residual_history: List[float] = []


class StepReport(BaseModel):
    step_index: int
    time: float
    picard_iterations: int
    picard_residual: float
    damping: float
    coefficients: tuple[float, float, float]  # a_i evaluated at the time-n masses
    solve_reports: List[SolveReport]  # last linear solve of each species, in order u1, u2, u3
    cg_iterations: int  # all conjugate gradient iterations spent in this step
    min_raw: tuple[float, float, float]  # smallest value of the last linear solve of each species, unclipped


class TimeSeriesRow(BaseModel):
    t: float
    a1: float
    a2: float
    a3: float
    mass1: float
    mass2: float
    mass3: float
    min_u1: float
    min_u2: float
    min_u3: float
    max_u1: float
    max_u2: float
    max_u3: float


class MonitorSummary(BaseModel):
    min_value: float  # over every species, cell and step
    nonnegative: bool
    energy_max: float  # max_n sum_i ||u_i^n||^2
    energy_envelope_max: Optional[float] = None
    energy_within_envelope: Optional[bool] = None  # None when the envelope does not apply
    species_l2_max: tuple[float, float, float]
    gradient_sums: tuple[float, float, float]
    incidence_sum: float


class RunSummary(BaseModel):
    steps: int
    final_time: float
    picard_iterations_total: int
    picard_iterations_max: int
    cg_iterations_total: int
    monitors: MonitorSummary
    failed: bool = False
    failure: Optional[str] = None


class Equilibria(BaseModel):
    E1: tuple[float, float, float]
    E2: tuple[float, float, float]
    discriminant: float
    E1_positive: bool
    E2_positive: bool


class StabilityReport(BaseModel):
    point: tuple[float, float, float]
    jacobian: List[List[float]]
    eigenvalues: List[tuple[float, float]]  # (real, imaginary)
    quadratic: tuple[float, float, float]  # 1, b, c of lambda^2 + b lambda + c
    routh_condition_holds: bool  # the inequality form
    coefficient_test_holds: bool  # b > 0 and c > 0
    cubic_eigenvalues: List[tuple[float, float]]


class TuringVerdict(BaseModel):
    turing_unstable: bool
    witness_k2: Optional[float] = None
    max_growth: float
    polynomial_value: Optional[float] = None  # only when d1 == d3
    polynomial_unstable: Optional[bool] = None
    agree: Optional[bool] = None


class CrossCheckRow(BaseModel):
    d1: float
    d2: float
    polynomial_value: float
    polynomial_unstable: bool
    scan_unstable: bool
    agree: bool


class ConvergenceRow(BaseModel):
    level: int
    h: float
    dt: float
    error: float  # L2(Q_T) error, or the difference with the next finer level
    order: Optional[float] = None  # observed order between this level and the previous one


class TranslateRow(BaseModel):
    kind: str  # "space" or "time"
    shift: tuple[float, ...]
    magnitude: float
    value: float
