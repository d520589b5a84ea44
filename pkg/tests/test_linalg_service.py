import numpy as np
import pytest
from scipy import sparse

from epidemic_fv.exceptions import LinearSolveError, MeshError
from epidemic_fv.services.linalg_service import SparseMatrix, cg_solve, ordered_dot


def test_identity():
    A = SparseMatrix(sparse.identity(3, format="csr"), symmetric=True)
    x, report = cg_solve(A, np.array([1.0, 2.0, 3.0]), tol=1e-12, max_iter=10)
    np.testing.assert_allclose(x, [1.0, 2.0, 3.0])
    assert report.iterations == 1
    assert report.converged


def test_two_by_two():
    A = SparseMatrix.from_entries(2, [0, 0, 1, 1], [0, 1, 0, 1], [2.0, 1.0, 1.0, 2.0], symmetric=True)
    x, report = cg_solve(A, np.array([3.0, 3.0]), tol=1e-12, max_iter=10)
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-12)
    assert report.residual <= report.tolerance


def test_zero_rhs_converges_immediately():
    A = SparseMatrix(sparse.identity(4, format="csr"))
    x, report = cg_solve(A, np.zeros(4), tol=1e-10, max_iter=5)
    np.testing.assert_array_equal(x, np.zeros(4))
    assert report.iterations == 0
    assert report.converged


def test_from_entries_sums_duplicates():
    A = SparseMatrix.from_entries(2, [0, 0, 1], [0, 0, 1], [1.0, 2.0, 4.0])
    np.testing.assert_array_equal(A.toarray(), [[3.0, 0.0], [0.0, 4.0]])


def test_rejects_non_square():
    with pytest.raises(MeshError):
        SparseMatrix(sparse.csr_matrix(np.ones((2, 3))))


def test_rhs_shape_mismatch():
    A = SparseMatrix(sparse.identity(3, format="csr"))
    with pytest.raises(MeshError):
        cg_solve(A, np.ones(2), tol=1e-10, max_iter=5)


def _laplacian_1d(n):
    main = np.full(n, 2.0 + 1e-3)
    off = np.full(n - 1, -1.0)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr")


def test_matches_dense_solve(rng):
    csr = _laplacian_1d(60)
    b = rng.random(60)
    x, report = cg_solve(SparseMatrix(csr, symmetric=True), b, tol=1e-12, max_iter=1000)
    np.testing.assert_allclose(x, np.linalg.solve(csr.toarray(), b), rtol=1e-8)
    history = report.residual_history
    assert all(later <= earlier for earlier, later in zip(history, history[1:]))


def test_non_convergence_carries_report(rng):
    A = SparseMatrix(_laplacian_1d(200), symmetric=True)
    with pytest.raises(LinearSolveError) as excinfo:
        cg_solve(A, rng.random(200), tol=1e-14, max_iter=2)
    report = excinfo.value.report
    assert report.iterations == 2
    assert not report.converged
    assert excinfo.value.exit_code == 3


def test_nonpositive_diagonal_rejected():
    A = SparseMatrix.from_entries(2, [0, 1], [0, 1], [1.0, -1.0])
    with pytest.raises(LinearSolveError):
        cg_solve(A, np.ones(2), tol=1e-10, max_iter=5)


def test_ordered_dot_is_reproducible(rng):
    x, y = rng.random(1000), rng.random(1000)
    assert ordered_dot(x, y) == ordered_dot(x.copy(), y.copy())
    assert ordered_dot(x, y) == pytest.approx(float(np.dot(x, y)), rel=1e-12)
    assert ordered_dot(np.array([]), np.array([])) == 0.0
