"""Sparse linear solves for the nonsymmetric FV system."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import NonConvergence, SingularSystem

log = logging.getLogger(__name__)


def as_csr(A):
    """Finalize ``A`` as CSR with sorted column indices and no explicit zeros."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def relative_residual(A, x, b):
    """``||Ax - b||_inf / ||b||_inf`` (absolute residual when b = 0)."""
    r = np.abs(A @ x - b).max(initial=0.0)
    nb = np.abs(b).max(initial=0.0)
    return float(r / nb) if nb > 0 else float(r)


def solve_direct(A, b, refine=2):
    """Sparse LU with partial pivoting after a reverse Cuthill-McKee reordering.

    A few steps of iterative refinement are applied while they still reduce
    the residual. Returns ``(x, relative_residual)``.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise ValueError(f"incompatible system: A {A.shape}, b {b.shape}")
    if A.shape[0] == 0:
        return np.zeros(0), 0.0
    perm = reverse_cuthill_mckee(A, symmetric_mode=False)
    Ap = A[perm][:, perm].tocsc()
    try:
        lu = spla.splu(Ap, permc_spec="NATURAL", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularSystem(f"sparse LU failed: {exc}") from exc
    y = lu.solve(b[perm])
    if not np.all(np.isfinite(y)):
        raise SingularSystem("sparse LU produced non-finite values")
    x = np.empty_like(y)
    x[perm] = y
    res = relative_residual(A, x, b)
    for _ in range(refine):
        dy = lu.solve((b - A @ x)[perm])
        x_new = x.copy()
        x_new[perm] += dy
        res_new = relative_residual(A, x_new, b)
        if not res_new < res:
            break
        x, res = x_new, res_new
    log.debug("direct solve n=%d residual=%.3e", A.shape[0], res)
    return x, res


def solve_iterative(A, b, tol=1e-12, max_iter=None):
    """BiCGSTAB with Jacobi preconditioning.

    Converges on ``||Ax - b||_inf / ||b||_inf <= tol``. Returns
    ``(x, iterations)``; raises :class:`NonConvergence` carrying the best
    iterate when ``max_iter`` is exhausted.
    """
    if tol < 1e-14:
        raise ValueError("tol must be >= 1e-14")
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    max_iter = 10 * n if max_iter is None else int(max_iter)
    d = A.diagonal()
    if np.any(d == 0.0):
        raise SingularSystem("zero diagonal entry; Jacobi preconditioner undefined")
    dinv = 1.0 / d
    nb = np.abs(b).max(initial=0.0)
    if nb == 0.0:
        return np.zeros(n), 0

    x = np.zeros(n)
    r = b.copy()
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    best, best_res = x.copy(), 1.0
    for it in range(1, max_iter + 1):
        rho_new = r_hat @ r
        if rho_new == 0.0:
            r_hat = r.copy()  # breakdown: restart the shadow residual
            rho_new = r_hat @ r
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        ph = dinv * p
        v = A @ ph
        alpha = rho / (r_hat @ v)
        s = r - alpha * v
        sh = dinv * s
        t = A @ sh
        tt = t @ t
        omega = (t @ s) / tt if tt > 0 else 0.0
        x = x + alpha * ph + omega * sh
        r = s - omega * t
        res = np.abs(b - A @ x).max() / nb
        if res < best_res:
            best, best_res = x.copy(), res
        if res <= tol:
            return x, it
        if omega == 0.0:
            break
    raise NonConvergence(f"BiCGSTAB did not reach {tol:g} in {max_iter} iterations "
                         f"(best relative residual {best_res:.3e})",
                         best=best, residual=best_res, iterations=it)
