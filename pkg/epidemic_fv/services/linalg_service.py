"""
Sparse symmetric positive definite systems and a Jacobi-preconditioned conjugate
gradient solver.

Inner products are summed strictly left to right (cumulative sum) so two runs of the
same problem produce bit-identical iterates.
"""
from dataclasses import dataclass
import logging
from typing import Optional

import numpy as np
from scipy import sparse

from ..exceptions import LinearSolveError, MeshError
from ..schemas.reports import SolveReport

logger = logging.getLogger(__name__)

# the recursively updated residual drifts from b - Ax; recompute it this often
RESIDUAL_REPLACEMENT = 50


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed-row matrix. `symmetric` is set when (i, j) and (j, i) were mirrored at assembly."""

    csr: sparse.csr_matrix
    symmetric: bool = False

    def __post_init__(self):
        csr = sparse.csr_matrix(self.csr, dtype=float)
        if csr.shape[0] != csr.shape[1]:
            raise MeshError(f"matrix must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        object.__setattr__(self, "csr", csr)

    @classmethod
    def from_entries(cls, n: int, rows, cols, values, symmetric: bool = False) -> "SparseMatrix":
        """Finalize (row, col, value) triplets; duplicates are summed"""
        coo = sparse.coo_matrix((np.asarray(values, dtype=float), (rows, cols)), shape=(n, n))
        return cls(coo.tocsr(), symmetric=symmetric)

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ x

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


def ordered_dot(x: np.ndarray, y: np.ndarray) -> float:
    """x . y accumulated left to right"""
    if x.size == 0:
        return 0.0
    return float(np.cumsum(x * y)[-1])


def _norm(x: np.ndarray) -> float:
    return ordered_dot(x, x) ** 0.5


def cg_solve(
    A: SparseMatrix,
    b: np.ndarray,
    tol: float,
    max_iter: int,
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, SolveReport]:
    """
    Solve Ax = b for symmetric positive definite A to ||Ax - b|| <= tol * ||b||.

    The returned iterate is the one with the smallest residual seen, so the reported
    residual history never increases. Raises LinearSolveError carrying the report when
    max_iter iterations do not reach the tolerance.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise MeshError(f"right-hand side has shape {b.shape}, matrix is {A.n}x{A.n}")

    b_norm = _norm(b)
    threshold = tol * b_norm
    if b_norm == 0.0:
        return np.zeros(A.n), SolveReport(iterations=0, residual=0.0, tolerance=0.0, converged=True)

    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise LinearSolveError("matrix has a nonpositive diagonal entry; it is not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=float)
    r = b - A.matvec(x)
    r_norm = _norm(r)
    best_x, best_norm = x.copy(), r_norm
    history = [best_norm]

    z = inv_diag * r
    p = z.copy()
    rz = ordered_dot(r, z)
    iterations = 0

    while best_norm > threshold and iterations < max_iter:
        Ap = A.matvec(p)
        pAp = ordered_dot(p, Ap)
        if pAp <= 0.0:
            break
        step = rz / pAp
        x = x + step * p
        iterations += 1

        if iterations % RESIDUAL_REPLACEMENT == 0:
            r = b - A.matvec(x)
        else:
            r = r - step * Ap
        r_norm = _norm(r)

        if r_norm <= threshold:
            # trust only the true residual for the stopping decision
            r = b - A.matvec(x)
            r_norm = _norm(r)

        if r_norm < best_norm:
            best_x, best_norm = x.copy(), r_norm
        history.append(best_norm)

        z = inv_diag * r
        rz_next = ordered_dot(r, z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    report = SolveReport(
        iterations=iterations,
        residual=best_norm,
        tolerance=threshold,
        converged=best_norm <= threshold,
        residual_history=history,
    )
    if not report.converged:
        logger.warning(f"⚠️ CG stopped after {iterations} iterations, residual {best_norm:.3e} > {threshold:.3e}")
        raise LinearSolveError(
            f"conjugate gradient did not converge in {iterations} iterations "
            f"(residual {best_norm:.3e}, tolerance {threshold:.3e})",
            report,
        )
    return best_x, report
