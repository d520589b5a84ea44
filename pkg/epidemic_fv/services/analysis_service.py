"""
Discrete norms, SARS equilibria, linear stability and Turing (diffusion-driven)
instability analysis.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..exceptions import NoEquilibriumError, ParameterError
from ..models.mesh import FieldLike, Mesh, field_values
from ..schemas.params import ModelParams
from ..schemas.reports import CrossCheckRow, Equilibria, StabilityReport, TuringVerdict

logger = logging.getLogger(__name__)

# coefficients of the printed Turing polynomial at the Example 2 parameters and E2, d1 = d3:
# (c0 + c1 d1) d2 + c2 - c3 d1 < 0 means diffusion-driven instability
TURING_POLYNOMIAL = (5.114590203, 9.0, 3.289620038, 2.20024467)

K2_MODES = 64
K2_POINTS = 256


def l2_norm(mesh: Mesh, f: FieldLike) -> float:
    """sqrt(sum_K m(K) u_K^2)"""
    u = field_values(mesh, f)
    return math.sqrt(float(np.sum(mesh.measures * u * u)))


def h1_seminorm(mesh: Mesh, f: FieldLike) -> float:
    """
    sqrt(sum over interfaces of tau_KL (u_L - u_K)^2).

    Each unordered interface is counted once, which equals half the double sum over
    ordered neighbor pairs.
    """
    u = field_values(mesh, f)
    if mesh.n_interfaces == 0:
        return 0.0
    pairs = mesh.cell_pairs
    jumps = u[pairs[:, 1]] - u[pairs[:, 0]]
    return math.sqrt(float(np.sum(mesh.transmissibilities * jumps * jumps)))


def _require_sars(params: ModelParams) -> None:
    if not params.is_sars:
        raise ParameterError("this analysis applies to the SARS variant only")
    if params.alpha_incidence <= 0.0 or params.mu <= 0.0:
        raise ParameterError("SARS equilibria need alpha > 0 and mu > 0")


def sars_equilibria(params: ModelParams) -> Equilibria:
    """The two equilibria with v > 0 (treatment active); E1 takes the smaller root in v."""
    _require_sars(params)
    A, r, mu, gamma, alpha = params.A, params.r, params.mu, params.gamma, params.alpha_incidence
    R0 = mu + gamma
    discriminant = (r * alpha - A * R0 - A * alpha) ** 2 - 4.0 * A * A * R0 * alpha
    if discriminant < 0.0:
        raise NoEquilibriumError(f"no real equilibria: discriminant {discriminant:.6g} < 0")

    base = (A - r) / (2.0 * R0) - A / (2.0 * alpha)
    spread = math.sqrt(discriminant) / (2.0 * alpha * R0)

    def point(v: float) -> tuple[float, float, float]:
        return (A - r - R0 * v) / mu, v, (gamma * v + r) / mu

    E1 = point(base - spread)
    E2 = point(base + spread)
    result = Equilibria(
        E1=E1,
        E2=E2,
        discriminant=discriminant,
        E1_positive=all(c > 0.0 for c in E1),
        E2_positive=all(c > 0.0 for c in E2),
    )
    for name, p, ok in (("E1", E1, result.E1_positive), ("E2", E2, result.E2_positive)):
        if not ok:
            logger.warning(f"⚠️ {name} = {p} has a nonpositive component")
    return result


def sars_jacobian(params: ModelParams, point: Sequence[float]) -> np.ndarray:
    """Jacobian of the SARS reaction terms at (u, v, w), treatment held at its v > 0 branch"""
    u, v, w = (float(c) for c in point)
    total = u + v + w
    if total <= 0.0:
        raise ParameterError(f"total population u+v+w must be positive, got {total}")
    alpha, mu, gamma = params.alpha_incidence, params.mu, params.gamma
    s = alpha * u * v / total**2
    p = alpha * v / total
    q = alpha * u / total
    return np.array(
        [
            [-p + s - mu, -q + s, s],
            [p - s, q - s - gamma - mu, -s],
            [0.0, gamma, -mu],
        ]
    )


def _pairs(values) -> list[tuple[float, float]]:
    return [(float(np.real(z)), float(np.imag(z))) for z in values]


def stability(params: ModelParams, point: Sequence[float]) -> StabilityReport:
    """
    Linear stability of the SARS reaction system at `point`.

    (1, 1, 1) is a left eigenvector of the Jacobian for -mu at every point, so the other
    two eigenvalues are the roots of lambda^2 + b lambda + c with
    b = (2mu + gamma) + alpha (v - u)/S and c = (mu + gamma) mu + alpha ((mu + gamma) v - mu u)/S.
    Both real parts are negative iff b > 0 and c > 0.
    """
    _require_sars(params)
    J = sars_jacobian(params, point)
    u, v, w = (float(c) for c in point)
    total = u + v + w
    alpha, mu, gamma = params.alpha_incidence, params.mu, params.gamma

    b = (2.0 * mu + gamma) + alpha * (v - u) / total
    c = (mu + gamma) * mu + alpha * ((mu + gamma) * v - mu * u) / total
    eigenvalues = [complex(-mu)] + [complex(z) for z in np.roots([1.0, b, c])]

    # characteristic polynomial of the full 3x3 matrix as an independent check
    trace = float(np.trace(J))
    minors = (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
        + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    )
    cubic = np.roots([1.0, -trace, minors, -float(np.linalg.det(J))])

    routh = total / alpha > max((u - v) / (2.0 * mu + gamma), u / (mu + gamma) - v / mu)
    coefficients = b > 0.0 and c > 0.0
    if routh != coefficients:
        logger.warning(f"⚠️ stability inequality and quadratic coefficients disagree at {point}")

    return StabilityReport(
        point=(u, v, w),
        jacobian=J.tolist(),
        eigenvalues=_pairs(eigenvalues),
        quadratic=(1.0, b, c),
        routh_condition_holds=routh,
        coefficient_test_holds=coefficients,
        cubic_eigenvalues=_pairs(sorted(cubic, key=lambda z: (z.real, z.imag))),
    )


def turing_polynomial(d1: float, d2: float) -> float:
    """The printed Turing polynomial; negative means Turing-unstable (valid for d1 == d3)"""
    c0, c1, c2, c3 = TURING_POLYNOMIAL
    return (c0 + c1 * d1) * d2 + c2 - c3 * d1


def default_k2_grid(length: float = 1.0, modes: int = K2_MODES, points: int = K2_POINTS) -> np.ndarray:
    """0 followed by a logarithmic grid from the first to the `modes`-th Neumann box mode"""
    lowest = (math.pi / length) ** 2
    highest = (math.pi * modes / length) ** 2
    return np.concatenate(([0.0], np.geomspace(lowest, highest, points)))


def _max_growth(J: np.ndarray, diffusivities: np.ndarray, k2: float) -> float:
    M = J - k2 * np.diag(diffusivities)
    trace = np.trace(M)
    minors = (
        M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    )
    roots = np.roots([1.0, -trace, minors, -np.linalg.det(M)])
    return float(np.max(roots.real))


def turing_scan(
    params: ModelParams,
    point: Sequence[float],
    d1: float,
    d2: float,
    d3: float,
    k2_grid: Optional[Sequence[float]] = None,
) -> TuringVerdict:
    """
    Diffusion-driven instability: some k^2 on the grid with max Re eig(J - k^2 diag(d)) > 0.

    When d1 == d3 the printed polynomial is evaluated as well and both verdicts are
    reported; a disagreement is logged, not resolved.
    """
    if not stability(params, point).routh_condition_holds:
        raise ParameterError(f"Turing analysis needs a linearly stable point, {tuple(point)} is not")
    J = sars_jacobian(params, point)
    diffusivities = np.array([d1, d2, d3], dtype=float)
    if np.any(diffusivities < 0.0):
        raise ParameterError("diffusivities must be nonnegative")
    grid = default_k2_grid() if k2_grid is None else np.asarray(k2_grid, dtype=float)

    growth = np.array([_max_growth(J, diffusivities, k2) for k2 in grid])
    # the k^2 = 0 mode is the stable homogeneous point; only diffusive modes count
    diffusive = grid > 0.0
    unstable = diffusive & (growth > 0.0)
    witness = float(grid[unstable][np.argmax(growth[unstable])]) if unstable.any() else None

    verdict = TuringVerdict(
        turing_unstable=bool(unstable.any()),
        witness_k2=witness,
        max_growth=float(growth[diffusive].max()) if diffusive.any() else float(growth.max()),
    )
    if d1 == d3:
        value = turing_polynomial(d1, d2)
        verdict.polynomial_value = value
        verdict.polynomial_unstable = value < 0.0
        verdict.agree = verdict.polynomial_unstable == verdict.turing_unstable
        if not verdict.agree:
            logger.info(
                f"📊 Turing verdicts differ at d1=d3={d1:g}, d2={d2:g}: "
                f"polynomial {value:.6g}, eigenvalue scan growth {verdict.max_growth:.6g}"
            )
    return verdict


def turing_cross_check(
    params: ModelParams,
    point: Sequence[float],
    d1_values: Sequence[float],
    d2_values: Sequence[float],
    k2_grid: Optional[Sequence[float]] = None,
) -> list[CrossCheckRow]:
    """Printed polynomial versus eigenvalue scan on a (d1, d2) grid with d3 = d1"""
    rows = []
    for d1 in d1_values:
        for d2 in d2_values:
            verdict = turing_scan(params, point, d1, d2, d1, k2_grid)
            rows.append(
                CrossCheckRow(
                    d1=d1,
                    d2=d2,
                    polynomial_value=verdict.polynomial_value,
                    polynomial_unstable=verdict.polynomial_unstable,
                    scan_unstable=verdict.turing_unstable,
                    agree=verdict.agree,
                )
            )
    disagreements = sum(1 for row in rows if not row.agree)
    logger.info(f"📊 Turing cross-check: {len(rows)} points, {disagreements} disagreements")
    return rows
