# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Row-by-row flux assembly over control-volume boundaries, the lexicographic
trial-to-test sweep, and scattered point evaluation of lattice fields.
Signatures match ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport fabs

from .polyquad import lobatto_points, _bary_weights, _diff_matrix

cnp.import_array()

BACKEND = "cython"


cdef inline Py_ssize_t _locate(const double[::1] breaks, double t) noexcept nogil:
    # element containing t; ties go to the lower-index element
    cdef Py_ssize_t lo = 0, hi = breaks.shape[0] - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if breaks[mid] < t:
            lo = mid
        else:
            hi = mid
    return lo


cdef void _lagrange(int k, const double[::1] nodes, const double[::1] bary,
                    const double[:, ::1] dmat, double s,
                    double* val, double* der) noexcept nogil:
    cdef int i, m, hit = -1
    cdef double total = 0.0, d
    for i in range(k + 1):
        d = s - nodes[i]
        if fabs(d) < 1e-14:  # snap to the node
            hit = i
            break
        val[i] = bary[i] / d
        total += val[i]
    if hit >= 0:
        for i in range(k + 1):
            val[i] = 1.0 if i == hit else 0.0
    else:
        for i in range(k + 1):
            val[i] /= total
    for i in range(k + 1):
        der[i] = 0.0
        for m in range(k + 1):
            der[i] += val[m] * dmat[m, i]


cdef void _flux_row(int k, const double[::1] breaks, const double[::1] g, Py_ssize_t I,
                    const double[::1] nodes, const double[::1] bary, const double[:, ::1] dmat,
                    const double[::1] gnodes, const double[::1] gweights,
                    double* dtab, double* mtab, double* val, double* der,
                    Py_ssize_t* first, int* count) noexcept nogil:
    # 1D factors of the control interval [g[I-1], g[I]]: derivative jump and
    # per-element k-point Gauss integral of every lattice function touching it
    cdef Py_ssize_t e0 = (I - 1) // k, e1 = I // k, e, c
    cdef int i, q, ncols = <int>((e1 - e0) * k + k + 1)
    cdef double lo = g[I - 1], hi = g[I], a, b, pa, pb, half, x, s, hel
    first[0] = e0 * k
    count[0] = ncols
    for i in range(ncols):
        dtab[i] = 0.0
        mtab[i] = 0.0
    # derivative at the right end (element e1) minus the left end (element e0)
    a = breaks[e1]; b = breaks[e1 + 1]
    _lagrange(k, nodes, bary, dmat, (2.0 * hi - (a + b)) / (b - a), val, der)
    for i in range(k + 1):
        dtab[(e1 - e0) * k + i] += der[i] * 2.0 / (b - a)
    a = breaks[e0]; b = breaks[e0 + 1]
    _lagrange(k, nodes, bary, dmat, (2.0 * lo - (a + b)) / (b - a), val, der)
    for i in range(k + 1):
        dtab[i] -= der[i] * 2.0 / (b - a)
    for e in range(e0, e1 + 1):
        a = breaks[e]; b = breaks[e + 1]
        pa = lo if lo > a else a
        pb = hi if hi < b else b
        half = 0.5 * (pb - pa)
        hel = b - a
        c = (e - e0) * k
        for q in range(k):
            x = 0.5 * (pa + pb) + half * gnodes[q]
            s = (2.0 * x - (a + b)) / hel
            _lagrange(k, nodes, bary, dmat, s, val, der)
            for i in range(k + 1):
                mtab[c + i] += gweights[q] * half * val[i]


def assemble_rows(x_breaks, y_breaks, int k, gx, gy, gnodes, gweights):
    cdef const double[::1] xb = np.ascontiguousarray(x_breaks, dtype=float)
    cdef const double[::1] yb = np.ascontiguousarray(y_breaks, dtype=float)
    cdef const double[::1] gxv = np.ascontiguousarray(gx, dtype=float)
    cdef const double[::1] gyv = np.ascontiguousarray(gy, dtype=float)
    cdef const double[::1] gn = np.ascontiguousarray(gnodes, dtype=float)
    cdef const double[::1] gw = np.ascontiguousarray(gweights, dtype=float)
    cdef const double[::1] nodes = np.ascontiguousarray(lobatto_points(k).nodes)
    cdef const double[::1] bary = np.ascontiguousarray(_bary_weights(k))
    cdef const double[:, ::1] dmat = np.ascontiguousarray(_diff_matrix(k))

    cdef Py_ssize_t Nx = gxv.shape[0], Ny = gyv.shape[0]
    cdef Py_ssize_t nx = Nx + 1, nrows = (Nx - 1) * (Ny - 1)
    cdef Py_ssize_t width = 2 * k + 1
    cdef Py_ssize_t cap = nrows * width * width
    indptr_a = np.zeros(nrows + 1, dtype=np.int64)
    indices_a = np.empty(cap, dtype=np.int64)
    data_a = np.empty(cap, dtype=float)
    cdef cnp.int64_t[::1] indptr = indptr_a
    cdef cnp.int64_t[::1] indices = indices_a
    cdef double[::1] data = data_a

    cdef double* work = <double*>malloc(sizeof(double) * (6 * width + 2 * (k + 1)))
    if work == NULL:
        raise MemoryError()
    cdef double* dx = work
    cdef double* mx = work + width
    cdef double* dy = work + 2 * width
    cdef double* my = work + 3 * width
    cdef double* val = work + 4 * width
    cdef double* der = work + 4 * width + (k + 1)
    cdef Py_ssize_t I, J, fx, fy, row = 0, nnz = 0
    cdef int cx, cy, a, b
    cdef double v
    try:
        with nogil:
            for J in range(1, Ny):
                _flux_row(k, yb, gyv, J, nodes, bary, dmat, gn, gw, dy, my, val, der, &fy, &cy)
                for I in range(1, Nx):
                    _flux_row(k, xb, gxv, I, nodes, bary, dmat, gn, gw, dx, mx, val, der, &fx, &cx)
                    for b in range(cy):
                        for a in range(cx):
                            # minus the outward flux: right - left edges give
                            # dx*my, top - bottom edges give mx*dy
                            v = -(dx[a] * my[b] + mx[a] * dy[b])
                            if v != 0.0:
                                indices[nnz] = (fy + b) * nx + fx + a
                                data[nnz] = v
                                nnz += 1
                    row += 1
                    indptr[row] = nnz
    finally:
        free(work)
    return indptr_a, indices_a[:nnz].copy(), data_a[:nnz].copy()


def pi_sweep(r_in):
    cdef const double[:, ::1] r = np.ascontiguousarray(r_in, dtype=float)
    cdef Py_ssize_t Nx = r.shape[0], Ny = r.shape[1], i, j
    V_a = np.zeros((Nx + 1, Ny + 1))
    cdef double[:, ::1] V = V_a
    cdef double res = 0.0, d
    with nogil:
        # lexicographic from the lower-left: x fastest, then y
        for j in range(Ny - 1):
            for i in range(Nx - 1):
                V[i + 1, j + 1] = r[i, j] - V[i, j] + V[i, j + 1] + V[i + 1, j]
        for j in range(Ny):
            for i in range(Nx):
                if i == Nx - 1 or j == Ny - 1:
                    d = fabs(V[i + 1, j + 1] + V[i, j] - V[i, j + 1] - V[i + 1, j] - r[i, j])
                    if d > res:
                        res = d
    return V_a, res


def eval_points(coeffs, x_breaks, y_breaks, int k, px, py):
    cdef const double[:, ::1] C = np.ascontiguousarray(coeffs, dtype=float)
    cdef const double[::1] xb = np.ascontiguousarray(x_breaks, dtype=float)
    cdef const double[::1] yb = np.ascontiguousarray(y_breaks, dtype=float)
    cdef const double[::1] xs = np.ascontiguousarray(px, dtype=float).ravel()
    cdef const double[::1] ys = np.ascontiguousarray(py, dtype=float).ravel()
    cdef const double[::1] nodes = np.ascontiguousarray(lobatto_points(k).nodes)
    cdef const double[::1] bary = np.ascontiguousarray(_bary_weights(k))
    cdef const double[:, ::1] dmat = np.ascontiguousarray(_diff_matrix(k))
    cdef Py_ssize_t n = xs.shape[0], p, ex, ey
    cdef int i, j
    val_a = np.empty(n)
    gxa = np.empty(n)
    gya = np.empty(n)
    cdef double[::1] val = val_a, gxo = gxa, gyo = gya
    cdef double* w = <double*>malloc(sizeof(double) * 4 * (k + 1))
    if w == NULL:
        raise MemoryError()
    cdef double* vx = w
    cdef double* dxp = w + (k + 1)
    cdef double* vy = w + 2 * (k + 1)
    cdef double* dyp = w + 3 * (k + 1)
    cdef double a, b, c, d, acc, sv, sx, sy
    try:
        with nogil:
            for p in range(n):
                ex = _locate(xb, xs[p])
                ey = _locate(yb, ys[p])
                a = xb[ex]; b = xb[ex + 1]
                c = yb[ey]; d = yb[ey + 1]
                _lagrange(k, nodes, bary, dmat, (2.0 * xs[p] - (a + b)) / (b - a), vx, dxp)
                _lagrange(k, nodes, bary, dmat, (2.0 * ys[p] - (c + d)) / (d - c), vy, dyp)
                sv = 0.0; sx = 0.0; sy = 0.0
                for i in range(k + 1):
                    acc = 0.0
                    for j in range(k + 1):
                        acc += C[ex * k + i, ey * k + j] * vy[j]
                        sy += vx[i] * C[ex * k + i, ey * k + j] * dyp[j]
                    sv += vx[i] * acc
                    sx += dxp[i] * acc
                val[p] = sv
                gxo[p] = sx * 2.0 / (b - a)
                gyo[p] = sy * 2.0 / (d - c)
    finally:
        free(w)
    return val_a, gxa, gya
