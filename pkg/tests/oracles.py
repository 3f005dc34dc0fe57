"""Independent reference computations used by the tests.

Nothing here calls into hofv numerics: basis functions use the product
form of the Lagrange polynomial and integrals use numpy's Gauss-Legendre
nodes on a 20-point composite rule.
"""
from functools import lru_cache

import numpy as np

_X20, _W20 = np.polynomial.legendre.leggauss(5)


def composite(fun, a, b, cuts=()):
    """Integral of ``fun`` over [a, b], split at ``cuts``, 4 panels x 5 points per piece."""
    pts = np.unique(np.concatenate(([a, b], [c for c in cuts if a < c < b])))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        edges = np.linspace(lo, hi, 5)
        for p0, p1 in zip(edges[:-1], edges[1:]):
            t = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * _X20
            total += 0.5 * (p1 - p0) * float(_W20 @ fun(t))
    return total


def lattice_coords(breaks, k):
    """Lobatto lattice coordinates from numpy's Legendre roots."""
    r = np.polynomial.Legendre.basis(k).deriv().roots().real if k > 1 else np.array([])
    ref = np.concatenate(([-1.0], np.sort(r), [1.0]))
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        out.extend(0.5 * (a + b) + 0.5 * (b - a) * ref[1:])
    out = np.array(out)
    out[::k] = breaks
    return out


def gauss_coords(breaks, k):
    g, _ = np.polynomial.legendre.leggauss(k)
    return np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * g for a, b in zip(breaks[:-1], breaks[1:])])


def basis_1d(coords, breaks, k, I, t, deriv=False):
    """Piecewise Lagrange cardinal function of lattice node I (or its derivative).

    Evaluation points must not sit on element interfaces.
    """
    t = np.atleast_1d(np.asarray(t, float))
    e = np.clip(np.searchsorted(breaks, t, side="right") - 1, 0, breaks.size - 2)
    out = np.zeros_like(t)
    for ee in np.unique(e):
        loc = I - ee * k
        if 0 <= loc <= k:
            sel = e == ee
            out[sel] = _cardinal(tuple(coords[ee * k:ee * k + k + 1]), loc, deriv)(t[sel])
    return out


@lru_cache(maxsize=None)
def _cardinal(nodes, loc, deriv):
    nodes = np.array(nodes)
    others = np.delete(nodes, loc)
    poly = np.polynomial.Polynomial.fromroots(others) / np.prod(nodes[loc] - others)
    return poly.deriv() if deriv else poly


def brute_stiffness(x_breaks, y_breaks, k):
    return _brute_stiffness(tuple(x_breaks), tuple(y_breaks), k).copy()


@lru_cache(maxsize=None)
def _brute_stiffness(x_breaks, y_breaks, k):
    """Dense extended stiffness ``-contour flux of phi_Q over dK_P``."""
    x_breaks, y_breaks = np.array(x_breaks), np.array(y_breaks)
    xs, ys = lattice_coords(x_breaks, k), lattice_coords(y_breaks, k)
    gx, gy = gauss_coords(x_breaks, k), gauss_coords(y_breaks, k)
    nx, ny = xs.size, ys.size
    A = np.zeros(((nx - 2) * (ny - 2), nx * ny))
    for J in range(1, ny - 1):
        for I in range(1, nx - 1):
            x0, x1, y0, y1 = gx[I - 1], gx[I], gy[J - 1], gy[J]
            row = (J - 1) * (nx - 2) + (I - 1)
            for QJ in range(ny):
                if abs(QJ - J) > 2 * k:
                    continue
                for QI in range(nx):
                    if abs(QI - I) > 2 * k:
                        continue
                    X = lambda t: basis_1d(xs, x_breaks, k, QI, t)
                    dX = lambda t: basis_1d(xs, x_breaks, k, QI, t, deriv=True)
                    Y = lambda t: basis_1d(ys, y_breaks, k, QJ, t)
                    dY = lambda t: basis_1d(ys, y_breaks, k, QJ, t, deriv=True)
                    right = composite(lambda y: dX(np.full_like(y, x1)) * Y(y), y0, y1, y_breaks)
                    left = composite(lambda y: dX(np.full_like(y, x0)) * Y(y), y0, y1, y_breaks)
                    top = composite(lambda x: X(x) * dY(np.full_like(x, y1)), x0, x1, x_breaks)
                    bottom = composite(lambda x: X(x) * dY(np.full_like(x, y0)), x0, x1, x_breaks)
                    A[row, QJ * nx + QI] = -(right - left + top - bottom)
    return A
