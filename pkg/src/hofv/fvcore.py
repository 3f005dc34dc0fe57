"""Finite volume system assembly, trial/test fields and the trial-to-test map.

The trial space is continuous piecewise bi-k polynomials represented by
their values on the Lobatto lattice (tensor Lagrange basis). The test
space is piecewise constant on the control volumes. The FV equation for
interior node P reads ``-flux(u_h, dK_P) = integral of f over K_P``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InconsistentJump
from .kernels import get_backend
from .meshdual import DofMap, DualGrid, LobattoLattice, TensorMesh, build_lattices
from .polyquad import gauss_rule, lagrange_table


@dataclass(frozen=True)
class TrialField:
    """A piecewise bi-k function given by its values on the Lobatto lattice.

    ``coeffs[I, J]`` is the value at ``(lattice.xs[I], lattice.ys[J])``.
    Members of the trial space vanish on the boundary; fields that do not
    (e.g. interpolants of arbitrary functions) are still valid for
    evaluation.
    """

    lattice: LobattoLattice
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != self.lattice.shape:
            raise ValueError(f"coeffs shape {c.shape} != lattice shape {self.lattice.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def k(self):
        return self.lattice.k

    @property
    def mesh(self):
        return self.lattice.mesh

    @property
    def vanishes_on_boundary(self):
        c = self.coeffs
        return not (c[0].any() or c[-1].any() or c[:, 0].any() or c[:, -1].any())

    @classmethod
    def from_interior(cls, lattice, dof: DofMap, values):
        return cls(lattice, dof.scatter(values))

    @classmethod
    def sample(cls, lattice, func, zero_boundary=True):
        """Field whose lattice values are ``func`` sampled at the nodes."""
        X, Y = np.meshgrid(lattice.xs, lattice.ys, indexing="ij")
        c = np.asarray(func(X, Y), dtype=float) * np.ones(X.shape)
        if zero_boundary:
            c[0] = c[-1] = 0.0
            c[:, 0] = c[:, -1] = 0.0
        return cls(lattice, c)

    def __sub__(self, other):
        return TrialField(self.lattice, self.coeffs - other.coeffs)

    def evaluate(self, x, y, backend=None):
        """Value and gradient at points (no domain check; see analysis.eval_field)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        mesh = self.mesh
        val, gx, gy = get_backend(backend).eval_points(
            self.coeffs, mesh.x_breaks, mesh.y_breaks, self.k, x.ravel(), y.ravel())
        return val.reshape(x.shape), gx.reshape(x.shape), gy.reshape(x.shape)


@dataclass(frozen=True)
class DualField:
    """Piecewise constant on control volumes; ``values[I, J]`` on K_(I,J)."""

    lattice: LobattoLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.lattice.shape:
            raise ValueError("values must have the lattice shape")
        if v[0].any() or v[-1].any() or v[:, 0].any() or v[:, -1].any():
            raise ValueError("dual field must vanish on boundary nodes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FvSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof: DofMap
    lattice: LobattoLattice
    dual: DualGrid
    extended: sp.csr_matrix  # rows: interior nodes, cols: all lattice nodes

    def local_imbalance(self, field: TrialField):
        """Per control volume ``-flux(u_h) - integral(f)``."""
        return self.extended @ _lattice_vector(field.coeffs) - self.rhs


def _lattice_vector(coeffs):
    # all lattice nodes, x fastest (matches extended column numbering)
    return np.ascontiguousarray(np.asarray(coeffs).T).ravel()


def assemble_stiffness(mesh: TensorMesh, k, dual: DualGrid, dof: DofMap,
                       extended=False, backend=None):
    """Stiffness matrix with entries ``-flux of phi_Q through dK_P``.

    With ``extended=True`` the columns run over every lattice node (boundary
    included, numbered ``J*nx + I``), otherwise over interior nodes in
    ``dof`` order.
    """
    rule = gauss_rule(k)
    indptr, indices, data = get_backend(backend).assemble_rows(
        mesh.x_breaks, mesh.y_breaks, k, dual.gx, dual.gy, rule.nodes, rule.weights)
    A = sp.csr_matrix((data, indices, indptr), shape=(dof.count, dof.nx * dof.ny))
    if extended:
        return A
    cols = np.arange(dof.nx * dof.ny).reshape(dof.ny, dof.nx)[1:-1, 1:-1].ravel()
    A = A[:, cols].tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def _load_pieces(breaks, g, q):
    """Quadrature points/weights per control interval, cut at element breaks.

    Returns ``(pts, wts)`` of shape ``(N-1, 2q)``; intervals without a cut
    are padded with zero-weight copies of their left end.
    """
    rule = gauss_rule(q)
    N = g.size
    k = N // (breaks.size - 1)
    rows = np.arange(N - 1)
    lo, hi = g[:-1], g[1:]
    cut = (rows // k) != ((rows + 1) // k)
    mid = np.where(cut, breaks[(rows + 1) // k], hi)
    p1, w1 = _map_rule(rule, lo, mid)
    p2, w2 = _map_rule(rule, mid, hi)
    w2[~cut] = 0.0
    p2[~cut] = lo[~cut, None]
    return np.hstack((p1, p2)), np.hstack((w1, w2))


def _map_rule(rule, a, b):
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * rule.nodes[None, :]
    return pts, half[:, None] * rule.weights[None, :]


def assemble_load(mesh: TensorMesh, k, dual: DualGrid, dof: DofMap, f, q=None):
    """Control-volume integrals of ``f`` by tensor q-point Gauss per sub-rectangle."""
    q = k + 2 if q is None else int(q)
    if q < k + 1:
        raise ValueError(f"load quadrature order q={q} must be >= k+1={k + 1}")
    px, wx = _load_pieces(mesh.x_breaks, dual.gx, q)
    py, wy = _load_pieces(mesh.y_breaks, dual.gy, q)
    out = np.empty((py.shape[0], px.shape[0]))
    chunk = max(1, 2_000_000 // (px.size * py.shape[1]))
    for j0 in range(0, py.shape[0], chunk):
        sl = slice(j0, j0 + chunk)
        F = f(px[None, :, None, :], py[sl, None, :, None])
        F = np.broadcast_to(np.asarray(F, dtype=float), (py[sl].shape[0],) + px.shape[:1]
                            + (py.shape[1], px.shape[1]))
        out[sl] = np.einsum("jiqp,ip,jq->ji", F, wx, wy[sl])
    return out.ravel()


def assemble_system(mesh: TensorMesh, k, f, q=None, backend=None) -> FvSystem:
    lattice, dual = build_lattices(mesh, k)
    dof = DofMap.for_lattice(lattice)
    A_ext = assemble_stiffness(mesh, k, dual, dof, extended=True, backend=backend)
    cols = np.arange(dof.nx * dof.ny).reshape(dof.ny, dof.nx)[1:-1, 1:-1].ravel()
    A = A_ext[:, cols].tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    b = assemble_load(mesh, k, dual, dof, f, q)
    return FvSystem(A, b, dof, lattice, dual, A_ext)


# --- Gauss-lattice tables ---------------------------------------------------

def gauss_tables(breaks, k, g):
    """Dense 1D tables at Gauss coordinates ``g`` over lattice functions X_I.

    Returns ``(val, der, anti)``, each ``(N, N+1)``: X_I(g), X_I'(g) and the
    exact antiderivative from the left domain edge, integral_a^g X_I.
    """
    N, m = g.size, breaks.size - 1
    e = np.arange(N) // k
    h = np.diff(breaks)
    s = (2.0 * g - (breaks[e] + breaks[e + 1])) / h[e]
    lv, ld = lagrange_table(k, s)
    cols = e[:, None] * k + np.arange(k + 1)[None, :]
    rows = np.arange(N)[:, None]
    val = np.zeros((N, N + 1))
    der = np.zeros((N, N + 1))
    val[rows, cols] = lv
    der[rows, cols] = ld * (2.0 / h[e])[:, None]

    # degree-k integrands: the k-point rule is exact
    rule = gauss_rule(k)
    full_loc, _ = lagrange_table(k, rule.nodes)
    full_loc = rule.weights @ full_loc  # integral over [-1, 1] of each l_i
    elem_int = np.zeros((m, N + 1))
    for ex in range(m):
        elem_int[ex, ex * k:ex * k + k + 1] = 0.5 * h[ex] * full_loc
    before = np.vstack((np.zeros((1, N + 1)), np.cumsum(elem_int, axis=0)))[e]
    # partial integral [-1, s] mapped: points (s+1)/2*(t+1) - 1
    tq = (s[:, None] + 1.0) * 0.5 * (rule.nodes[None, :] + 1.0) - 1.0
    pv, _ = lagrange_table(k, tq)
    part = np.einsum("q,nqi->ni", rule.weights, pv) * ((s + 1.0) * 0.5 * 0.5 * h[e])[:, None]
    anti = before.copy()
    anti[rows, cols] += part
    return val, der, anti


def gauss_weights(dual: DualGrid):
    """Per-direction mapped Gauss weights (h_tau/2) A_i over the Gauss lattice."""
    A = gauss_rule(dual.k).weights
    out = []
    for breaks, g in ((dual.mesh.x_breaks, dual.gx), (dual.mesh.y_breaks, dual.gy)):
        h = np.diff(breaks)
        out.append(np.repeat(0.5 * h, dual.k) * np.tile(A, breaks.size - 1))
    return out[0], out[1]


def _tables(dual):
    mesh = dual.mesh
    return (gauss_tables(mesh.x_breaks, dual.k, dual.gx),
            gauss_tables(mesh.y_breaks, dual.k, dual.gy))


def mixed_terms(w: TrialField, dual: DualGrid):
    """At the Gauss lattice: (dx^-1 dy w, dy^-1 dx w, dxy w)."""
    (xv, xd, xa), (yv, yd, ya) = _tables(dual)
    C = w.coeffs
    return xa @ C @ yd.T, xd @ C @ ya.T, xd @ C @ yd.T


def discrete_inner(v1, v2, dual: DualGrid):
    """Gauss-point discrete inner product over the whole mesh.

    ``v1``/``v2`` are arrays on the Gauss lattice (shape ``(k*m, k*n)``) or
    callables ``f(x, y)``.
    """
    X, Y = np.meshgrid(dual.gx, dual.gy, indexing="ij")
    a = v1(X, Y) if callable(v1) else np.asarray(v1)
    b = v2(X, Y) if callable(v2) else np.asarray(v2)
    ax, ay = gauss_weights(dual)
    return float(np.einsum("i,j,ij->", ax, ay, a * b * np.ones(X.shape)))


def all_jumps(v: DualField):
    """Double-layer jump at every Gauss lattice point, shape ``(k*m, k*n)``."""
    V = v.values
    return V[1:, 1:] + V[:-1, :-1] - V[:-1, 1:] - V[1:, :-1]


def jump(v: DualField, g):
    """Double-layer jump at Gauss lattice point ``g = (gI, gJ)``."""
    i, j = g
    V = v.values
    return float(V[i + 1, j + 1] + V[i, j] - V[i, j + 1] - V[i + 1, j])


def pi_map(v: TrialField, dual: DualGrid | None = None, backend=None, rtol=1e-10) -> DualField:
    """Trial-to-test map prescribing jumps ``A^x A^y dxy v`` at Gauss points."""
    if not v.vanishes_on_boundary:
        raise ValueError("pi_map requires a field vanishing on the boundary")
    if dual is None:
        _, dual = build_lattices(v.mesh, v.k)
    _, _, dxy = mixed_terms(v, dual)
    ax, ay = gauss_weights(dual)
    r = ax[:, None] * ay[None, :] * dxy
    V, residual = get_backend(backend).pi_sweep(r)
    scale = float(np.abs(v.coeffs).max())
    if residual > rtol * scale:
        raise InconsistentJump(
            f"unused jump equations violated by {residual:.3e} (> {rtol:g} * {scale:.3e})")
    return DualField(v.lattice, V)


def apply_bilinear_jump_form(w: TrialField, v: DualField, dual: DualGrid | None = None):
    """a_h(w, v) as a Gauss-lattice sum of mixed antiderivatives times jumps."""
    if dual is None:
        _, dual = build_lattices(w.mesh, w.k)
    f1, f2, _ = mixed_terms(w, dual)
    return float(-np.sum((f1 + f2) * all_jumps(v)))


def apply_bilinear_flux_form(w: TrialField, v: DualField, extended=None):
    """a_h(w, v) = sum_P v_P * (-flux of w through dK_P) from the assembled rows."""
    if extended is None:
        mesh, k = w.mesh, w.k
        lattice, dual = build_lattices(mesh, k)
        extended = assemble_stiffness(mesh, k, dual, DofMap.for_lattice(lattice), extended=True)
    dof = DofMap.for_lattice(w.lattice)
    return float(dof.gather(v.values) @ (extended @ _lattice_vector(w.coeffs)))
