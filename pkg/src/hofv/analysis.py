"""Field evaluation, projection-based interpolants, error measures and rates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidSequence, OutOfDomain
from .fvcore import TrialField, gauss_tables
from .meshdual import LobattoLattice, TensorMesh, build_lattices
from .polyquad import MAX_ORDER, gauss_rule, lagrange_table, legendre, lobatto_poly

ROUNDOFF_FLOOR = 1e-12
ERROR_KINDS = ("e_G", "e_L", "e_N", "L2", "H1")


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution of -Laplace(u) = f with homogeneous Dirichlet data."""

    u: Callable
    grad: Callable  # (x, y) -> (ux, uy)
    f: Callable
    name: str = ""

    def __call__(self, x, y):
        return self.u(x, y)


def _values(func, x, y):
    return np.asarray(func(x, y), dtype=float) * np.ones(np.broadcast(x, y).shape)


def eval_field(v: TrialField, x, y, backend=None):
    """Value and gradient ``(value, (dx, dy))`` of a lattice field at points.

    On element interfaces the lower-index element is used.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    b = v.mesh.bounds
    if np.any((x < b.x0) | (x > b.x1) | (y < b.y0) | (y > b.y1)):
        raise OutOfDomain("evaluation point outside the closed domain")
    val, gx, gy = v.evaluate(x, y, backend=backend)
    if val.ndim == 0:
        return float(val), np.array([float(gx), float(gy)])
    return val, (gx, gy)


class BandProjection:
    """Truncated Lobatto-series projection along one axis, element by element.

    Evaluating at ``(x, y)`` (direction ``"x"``) takes the element band that
    contains ``x`` and sums ``b_r(y) phi_r(s)`` for ``r <= p``. The Lobatto
    coefficients use the integrated-by-parts form

        b_r = (2r-1)/2 * ([v P_{r-1}]_{-1}^{1} - integral v P_{r-1}'),

    so only point values of the projected function are needed, and
    projections compose (``project_band(project_band(u, "y", ...), "x", ...)``).
    """

    def __init__(self, func, direction, p, mesh: TensorMesh, k):
        if direction not in ("x", "y"):
            raise ValueError("direction must be 'x' or 'y'")
        if p < 1:
            raise ValueError("projection degree p must be >= 1")
        self.func = func
        self.direction = direction
        self.p = int(p)
        self.mesh = mesh
        self.k = int(k)
        rule = gauss_rule(min(self.k + 6, MAX_ORDER))
        self._sample = np.concatenate(([-1.0, 1.0], rule.nodes))
        F = np.zeros((self.p + 1, self._sample.size))
        F[0, 0] = 1.0
        F[1, 1] = 1.0
        for r in range(2, self.p + 1):
            c = 0.5 * (2 * r - 1)
            _, dP = legendre(r - 1, rule.nodes)
            F[r, 1] = c
            F[r, 0] = -c * (-1.0) ** (r - 1)
            F[r, 2:] = -c * rule.weights * dP
        self._functional = F

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        along, across = (x, y) if self.direction == "x" else (y, x)
        breaks = self.mesh.x_breaks if self.direction == "x" else self.mesh.y_breaks
        e = np.clip(np.searchsorted(breaks, along, side="left") - 1, 0, breaks.size - 2)
        lo, hi = breaks[e], breaks[e + 1]
        s = (2.0 * along - (lo + hi)) / (hi - lo)
        phi = np.stack([np.asarray(lobatto_poly(r, s)) for r in range(self.p + 1)], axis=-1)
        comb = phi @ self._functional  # weights on the sample points
        pts = 0.5 * (lo + hi)[..., None] + 0.5 * (hi - lo)[..., None] * self._sample
        other = np.broadcast_to(across[..., None], pts.shape)
        vals = _values(self.func, pts, other) if self.direction == "x" \
            else _values(self.func, other, pts)
        return np.sum(comb * vals, axis=-1)

    def residual(self):
        """The complementary operator ``v - Q v`` as a callable."""
        return lambda x, y: _values(self.func, x, y) - self(x, y)


def project_band(u, direction, p, mesh: TensorMesh, k) -> BandProjection:
    return BandProjection(u, direction, p, mesh, k)


def interpolant_uI(u, mesh: TensorMesh, k, lattice: LobattoLattice | None = None) -> TrialField:
    """The tensor projection Q^x_k Q^y_k u sampled on the Lobatto lattice."""
    if lattice is None:
        lattice, _ = build_lattices(mesh, k)
    qxy = project_band(project_band(u, "y", k, mesh, k), "x", k, mesh, k)
    X, Y = np.meshgrid(lattice.xs, lattice.ys, indexing="ij")
    return TrialField(lattice, qxy(X, Y))


def lobatto_interpolant(u, lattice: LobattoLattice) -> TrialField:
    """Field interpolating ``u`` at all Lobatto lattice nodes (boundary set to 0)."""
    return TrialField.sample(lattice, u, zero_boundary=True)


def _grad(u, x, y):
    gx, gy = u.grad(x, y)
    shape = np.broadcast(x, y).shape
    return np.asarray(gx, float) * np.ones(shape), np.asarray(gy, float) * np.ones(shape)


def point_errors(u_h: TrialField, u: ExactSolution, dual=None, grad_norm="l1"):
    """Maximum errors at mesh vertices, Lobatto points and (gradient) Gauss points.

    Returns ``(e_N, e_L, e_G)``. The gradient error vector at a Gauss point
    is measured with ``grad_norm``: ``"l1"`` (|ex| + |ey|, the default),
    ``"euclid"`` or ``"max"``.
    """
    lattice = u_h.lattice
    if dual is None:
        _, dual = build_lattices(lattice.mesh, lattice.k)
    X, Y = np.meshgrid(lattice.xs, lattice.ys, indexing="ij")
    err = np.abs(_values(u.u, X, Y) - u_h.coeffs)
    e_L = float(err.max())
    e_N = float(err[lattice.vertex_slices()].max())

    mesh, k = lattice.mesh, lattice.k
    xv, xd, _ = gauss_tables(mesh.x_breaks, k, dual.gx)
    yv, yd, _ = gauss_tables(mesh.y_breaks, k, dual.gy)
    C = u_h.coeffs
    GX, GY = np.meshgrid(dual.gx, dual.gy, indexing="ij")
    ux, uy = _grad(u, GX, GY)
    dx = ux - xd @ C @ yv.T
    dy = uy - xv @ C @ yd.T
    if grad_norm == "l1":
        e_G = float((np.abs(dx) + np.abs(dy)).max())
    elif grad_norm == "euclid":
        e_G = float(np.sqrt(dx * dx + dy * dy).max())
    elif grad_norm == "max":
        e_G = float(np.maximum(np.abs(dx), np.abs(dy)).max())
    else:
        raise ValueError(f"unknown gradient norm {grad_norm!r}")
    return e_N, e_L, e_G


def _element_quadrature(breaks, k, q):
    rule = gauss_rule(q)
    m = breaks.size - 1
    h = np.diff(breaks)
    pts = (0.5 * (breaks[:-1] + breaks[1:]))[:, None] + 0.5 * h[:, None] * rule.nodes
    wts = 0.5 * h[:, None] * rule.weights
    val, der = lagrange_table(k, np.broadcast_to(rule.nodes, (m, q)))
    N = k * m
    B = np.zeros((m * q, N + 1))
    D = np.zeros((m * q, N + 1))
    rows = np.arange(m * q).reshape(m, q)[:, :, None]
    cols = (np.arange(m) * k)[:, None, None] + np.arange(k + 1)[None, None, :]
    B[rows, cols] = val
    D[rows, cols] = der * (2.0 / h)[:, None, None]
    return pts.ravel(), wts.ravel(), B, D


def _quadrature_grid(lattice: LobattoLattice, q):
    mesh, k = lattice.mesh, lattice.k
    return (_element_quadrature(mesh.x_breaks, k, q),
            _element_quadrature(mesh.y_breaks, k, q))


def norm_errors(u_h: TrialField, u, q=None):
    """``(||u - u_h||_0, |u - u_h|_1)`` by tensor q-point Gauss on each element.

    ``u`` is an :class:`ExactSolution` or another :class:`TrialField` on the
    same lattice.
    """
    k = u_h.k
    q = k + 3 if q is None else int(q)
    if q < k + 3:
        raise ValueError(f"norm quadrature needs q >= k+3 = {k + 3}")
    (px, wx, Bx, Dx), (py, wy, By, Dy) = _quadrature_grid(u_h.lattice, q)
    C = u_h.coeffs
    if isinstance(u, TrialField):
        C = C - u.coeffs
        ev = -(Bx @ C @ By.T)
        ex = -(Dx @ C @ By.T)
        ey = -(Bx @ C @ Dy.T)
    else:
        X, Y = np.meshgrid(px, py, indexing="ij")
        ux, uy = _grad(u, X, Y)
        ev = _values(u.u, X, Y) - Bx @ C @ By.T
        ex = ux - Dx @ C @ By.T
        ey = uy - Bx @ C @ Dy.T
    W = wx[:, None] * wy[None, :]
    l2 = float(np.sqrt(np.sum(W * ev * ev)))
    h1 = float(np.sqrt(np.sum(W * (ex * ex + ey * ey))))
    return l2, h1


def field_sup(v: TrialField, q=None):
    """Max of |v| over the lattice nodes and an element-wise Gauss sample grid."""
    k = v.k
    q = k + 3 if q is None else int(q)
    (_, _, Bx, _), (_, _, By, _) = _quadrature_grid(v.lattice, q)
    inner = np.abs(Bx @ v.coeffs @ By.T).max()
    return float(max(inner, np.abs(v.coeffs).max()))


@dataclass
class LevelResult:
    N: int
    h: float
    errors: dict  # kind -> value, kinds from ERROR_KINDS plus extras
    residual: float = float("nan")


@dataclass
class ConvergenceReport:
    k: int
    levels: list
    rates: dict = field(default_factory=dict)  # kind -> list of rate or None

    def rate(self, kind, i):
        """Rate between level ``i`` and ``i+1`` (None when floored)."""
        return self.rates[kind][i]


def observed_rate(coarse, fine, floor=ROUNDOFF_FLOOR):
    """log2(coarse / fine), or None when either value is at the roundoff floor."""
    if coarse is None or fine is None or coarse <= floor or fine <= floor:
        return None
    return float(np.log2(coarse / fine))


def rate_table(levels, k=0, kinds=None, floor=ROUNDOFF_FLOOR) -> ConvergenceReport:
    """Successive log2 rates over a mesh sequence whose h halves each level."""
    levels = list(levels)
    if len(levels) < 2:
        raise InvalidSequence("need at least two levels")
    for a, b in zip(levels, levels[1:]):
        if not np.isclose(a.h, 2.0 * b.h, rtol=1e-12, atol=0.0):
            raise InvalidSequence(f"h does not halve: {a.h} -> {b.h}")
    kinds = list(levels[0].errors) if kinds is None else list(kinds)
    rates = {kind: [observed_rate(a.errors.get(kind), b.errors.get(kind), floor)
                    for a, b in zip(levels, levels[1:])] for kind in kinds}
    return ConvergenceReport(k, levels, rates)
