"""Pure-numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module. The
stiffness assembly here exploits the tensor structure (1D flux and mass
tables combined with a Kronecker product), the trial-to-test sweep is a
double cumulative sum, and point evaluation is vectorized over points.
"""
import numpy as np
import scipy.sparse as sp

from .polyquad import lagrange_table

BACKEND = "python"


def _locate(breaks, t):
    m = breaks.size - 1
    e = np.clip(np.searchsorted(breaks, t, side="left") - 1, 0, m - 1)
    lo, hi = breaks[e], breaks[e + 1]
    return e, (2.0 * t - (lo + hi)) / (hi - lo), hi - lo


def flux_tables(breaks, k, g, gnodes, gweights):
    """1D tables over control-volume intervals ``[g[I-1], g[I]]``.

    Returns ``(D, M)``, sparse ``(N-1, N+1)`` with ``N = k*m``:
    ``D[I-1, Q] = X_Q'(g[I]) - X_Q'(g[I-1])`` and
    ``M[I-1, Q] = integral of X_Q over the interval``, X_Q being the global
    1D Lagrange function of lattice index Q.
    """
    N = g.size
    nrow, ncol = N - 1, N + 1
    rows = np.arange(nrow)

    # derivative differences at the two Gauss ends (Gauss points are interior
    # to a single element, so the derivative is single-valued there)
    d_rows, d_cols, d_vals = [], [], []
    for gidx, sign in ((rows + 1, 1.0), (rows, -1.0)):
        e, s, h = _locate(breaks, g[gidx])
        _, der = lagrange_table(k, s)
        der = der * (2.0 / h)[:, None]
        cols = e[:, None] * k + np.arange(k + 1)[None, :]
        d_rows.append(np.repeat(rows, k + 1))
        d_cols.append(cols.ravel())
        d_vals.append(sign * der.ravel())
    D = sp.coo_matrix((np.concatenate(d_vals), (np.concatenate(d_rows), np.concatenate(d_cols))),
                      shape=(nrow, ncol)).tocsr()

    # pieces of each interval cut at element interfaces: interval I-1 contains
    # the lattice node I, which is an interface iff I % k == 0
    lo, hi = g[:-1], g[1:]
    e_lo = rows // k  # element of g[I-1]
    e_hi = (rows + 1) // k  # element of g[I]
    cut = e_lo != e_hi
    p_row = np.concatenate((rows, rows[cut]))
    p_elem = np.concatenate((e_lo, e_hi[cut]))
    p_lo = np.concatenate((lo, breaks[e_hi[cut]]))
    p_hi = np.concatenate((np.where(cut, breaks[e_hi], hi), hi[cut]))

    half = 0.5 * (p_hi - p_lo)
    xq = 0.5 * (p_lo + p_hi)[:, None] + half[:, None] * gnodes[None, :]
    elo, ehi = breaks[p_elem], breaks[p_elem + 1]
    s = (2.0 * xq - (elo + ehi)[:, None]) / (ehi - elo)[:, None]
    val, _ = lagrange_table(k, s)  # (pieces, k, k+1)
    integ = np.einsum("q,pqi->pi", gweights, val) * half[:, None]
    cols = p_elem[:, None] * k + np.arange(k + 1)[None, :]
    M = sp.coo_matrix((integ.ravel(), (np.repeat(p_row, k + 1), cols.ravel())),
                      shape=(nrow, ncol)).tocsr()
    return D, M


def assemble_rows(x_breaks, y_breaks, k, gx, gy, gnodes, gweights):
    """Extended stiffness in CSR form: rows = interior nodes, cols = all lattice nodes.

    Returns ``(indptr, indices, data)``. Row ``(I, J)`` is numbered
    ``(J-1)*(nx-2) + I-1``, column ``(I, J)`` is ``J*nx + I``.
    """
    Dx, Mx = flux_tables(x_breaks, k, gx, gnodes, gweights)
    Dy, My = flux_tables(y_breaks, k, gy, gnodes, gweights)
    A = -(sp.kron(My, Dx, format="csr") + sp.kron(Dy, Mx, format="csr"))
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data


def pi_sweep(r):
    """Dual values from prescribed double-layer jumps ``r`` (Gauss lattice).

    Returns ``(V, residual)`` where ``V`` has the Lobatto lattice shape with
    zero boundary, and ``residual`` is the largest violation among the jump
    equations not used by the sweep (top row / right column).
    """
    r = np.asarray(r, dtype=float)
    Nx, Ny = r.shape
    V = np.zeros((Nx + 1, Ny + 1))
    V[1:Nx, 1:Ny] = np.cumsum(np.cumsum(r[:Nx - 1, :Ny - 1], axis=0), axis=1)
    jumps = V[1:, 1:] + V[:-1, :-1] - V[:-1, 1:] - V[1:, :-1]
    res = np.abs(jumps - r)
    unused = max(res[Nx - 1, :].max(), res[:, Ny - 1].max())
    return V, float(unused)


def eval_points(coeffs, x_breaks, y_breaks, k, px, py):
    """Value and gradient of the lattice field ``coeffs[I, J]`` at points."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    ex, s, hx = _locate(x_breaks, px)
    ey, t, hy = _locate(y_breaks, py)
    vx, dx = lagrange_table(k, s)
    vy, dy = lagrange_table(k, t)
    loc = np.arange(k + 1)
    C = coeffs[(ex[:, None] * k + loc)[:, :, None], (ey[:, None] * k + loc)[:, None, :]]
    cy = np.einsum("pij,pj->pi", C, vy)
    val = np.einsum("pi,pi->p", vx, cy)
    gx = np.einsum("pi,pi->p", dx, cy) * (2.0 / hx)
    gy = np.einsum("pi,pij,pj->p", vx, C, dy) * (2.0 / hy)
    return val, gx, gy
