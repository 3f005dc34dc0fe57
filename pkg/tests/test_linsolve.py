import numpy as np
import pytest
import scipy.sparse as sp

from hofv.errors import NonConvergence, SingularSystem
from hofv.fvcore import assemble_system
from hofv.linsolve import as_csr, relative_residual, solve_direct, solve_iterative
from hofv.meshdual import build_uniform_mesh
from hofv.problems import get_problem


def test_direct_examples():
    x, res = solve_direct(sp.csr_matrix([[3.0]]), np.array([0.25]))
    assert x == pytest.approx([1 / 12], abs=1e-16) and res <= 1e-15
    x, _ = solve_direct(sp.csr_matrix([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 4.0]))
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-15)


def test_direct_detects_singularity():
    with pytest.raises(SingularSystem):
        solve_direct(sp.csr_matrix([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        solve_direct(sp.csr_matrix(np.eye(2)), np.ones(3))


def test_as_csr_finalizes():
    A = sp.coo_matrix(([1.0, 2.0, 0.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = as_csr(A)
    assert C.nnz == 1 and C[0, 1] == 3.0 and C.has_sorted_indices


def test_relative_residual_examples():
    A = sp.csr_matrix(np.eye(2))
    assert relative_residual(A, np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 0.5
    assert relative_residual(A, np.array([1e-3, 0.0]), np.zeros(2)) == 1e-3


@pytest.fixture(scope="module")
def fv_system():
    return assemble_system(build_uniform_mesh(0, 1, 0, 1, 8, 8), 3, get_problem("paper").f)


def test_direct_residual_on_fv_system(fv_system):
    x, res = solve_direct(fv_system.matrix, fv_system.rhs)
    assert res <= 1e-12
    assert relative_residual(fv_system.matrix, x, fv_system.rhs) == pytest.approx(res)


def test_iterative_matches_direct(fv_system):
    A, b = fv_system.matrix, fv_system.rhs
    xd, _ = solve_direct(A, b)
    xi, its = solve_iterative(A, b, tol=1e-12)
    assert relative_residual(A, xi, b) <= 1e-12
    assert its > 0
    np.testing.assert_allclose(xi, xd, atol=1e-9 * np.abs(xd).max())


def test_iterative_failure_carries_best_iterate(fv_system):
    with pytest.raises(NonConvergence) as info:
        solve_iterative(fv_system.matrix, fv_system.rhs, tol=1e-12, max_iter=2)
    err = info.value
    assert err.best.shape == fv_system.rhs.shape
    assert 0 < err.residual < 1 and err.iterations == 2
    assert relative_residual(fv_system.matrix, err.best, fv_system.rhs) == pytest.approx(err.residual)


def test_iterative_rejects_tight_tolerance(fv_system):
    with pytest.raises(ValueError):
        solve_iterative(fv_system.matrix, fv_system.rhs, tol=1e-15)


def test_zero_rhs_gives_zero():
    x, its = solve_iterative(sp.csr_matrix(np.eye(3)), np.zeros(3))
    assert its == 0 and not x.any()
