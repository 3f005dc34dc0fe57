"""Tensor-product primal mesh, Gauss/Lobatto lattices and the dual partition.

Lattice indexing convention used throughout the package: a Lobatto lattice
node is addressed by ``(I, J)`` with ``0 <= I <= k*m`` and ``0 <= J <= k*n``;
element ``ex`` owns x-indices ``ex*k .. ex*k + k``. Gauss lattice points are
addressed by ``(gI, gJ)`` with ``0 <= gI < k*m``; the Gauss index ``gI``
lies in element ``gI // k`` strictly between Lobatto indices ``gI`` and
``gI + 1``. The control volume of interior node ``(I, J)`` is therefore
``[gx[I-1], gx[I]] x [gy[J-1], gy[J]]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidDomain, NotInterior
from .polyquad import _check_order, _readonly, gauss_rule, lobatto_points


class Rectangle(NamedTuple):
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class TensorMesh:
    x_breaks: np.ndarray
    y_breaks: np.ndarray

    def __post_init__(self):
        for name in ("x_breaks", "y_breaks"):
            b = _readonly(getattr(self, name))
            if b.ndim != 1 or b.size < 2 or not np.all(np.diff(b) > 0):
                raise InvalidDomain(f"{name} must be strictly increasing with >= 2 entries")
            object.__setattr__(self, name, b)

    @property
    def m(self):
        return self.x_breaks.size - 1

    @property
    def n(self):
        return self.y_breaks.size - 1

    @property
    def hx(self):
        return np.diff(self.x_breaks)

    @property
    def hy(self):
        return np.diff(self.y_breaks)

    @property
    def h(self):
        return float(max(self.hx.max(), self.hy.max()))

    @property
    def quasi_uniformity(self):
        """max(h) / min(h) over all element edges."""
        lengths = np.concatenate((self.hx, self.hy))
        return float(lengths.max() / lengths.min())

    @property
    def bounds(self):
        return Rectangle(self.x_breaks[0], self.x_breaks[-1],
                         self.y_breaks[0], self.y_breaks[-1])


def build_uniform_mesh(a, b, c, d, m, n) -> TensorMesh:
    """Equispaced m x n mesh of [a, b] x [c, d]."""
    if not (a < b and c < d):
        raise InvalidDomain(f"degenerate domain [{a}, {b}] x [{c}, {d}]")
    if m < 1 or n < 1:
        raise InvalidDomain("m and n must be positive")
    return TensorMesh(np.linspace(a, b, m + 1), np.linspace(c, d, n + 1))


def _mapped_coords(breaks, ref, keep_right):
    # affine images generated from the break values directly, so interface
    # coordinates are bit-identical to the breaks
    lo, hi = breaks[:-1, None], breaks[1:, None]
    pts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * ref[None, :]
    if keep_right:
        pts[:, 0] = breaks[:-1]
        pts[:, -1] = breaks[1:]
        return np.concatenate((pts[:, :-1].ravel(), breaks[-1:]))
    return pts.ravel()


@dataclass(frozen=True)
class LobattoLattice:
    k: int
    mesh: TensorMesh
    xs: np.ndarray
    ys: np.ndarray

    @property
    def shape(self):
        return self.xs.size, self.ys.size

    @property
    def interior_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask

    @property
    def interior_count(self):
        return (self.xs.size - 2) * (self.ys.size - 2)

    def vertex_slices(self):
        """Index slices selecting mesh vertices from a lattice-shaped array."""
        return slice(None, None, self.k), slice(None, None, self.k)


@dataclass(frozen=True)
class DualGrid:
    k: int
    mesh: TensorMesh
    gx: np.ndarray
    gy: np.ndarray

    @property
    def lattice_shape(self):
        return self.gx.size + 1, self.gy.size + 1


def build_lattices(mesh: TensorMesh, k) -> tuple[LobattoLattice, DualGrid]:
    """Global Lobatto lattice and Gauss (dual) grid for degree ``k``."""
    k = _check_order(k)
    lob = lobatto_points(k).nodes
    gau = gauss_rule(k).nodes
    lattice = LobattoLattice(
        k, mesh,
        _readonly(_mapped_coords(mesh.x_breaks, lob, True)),
        _readonly(_mapped_coords(mesh.y_breaks, lob, True)),
    )
    dual = DualGrid(
        k, mesh,
        _readonly(_mapped_coords(mesh.x_breaks, gau, False)),
        _readonly(_mapped_coords(mesh.y_breaks, gau, False)),
    )
    return lattice, dual


@dataclass(frozen=True)
class DofMap:
    """Interior lattice node <-> equation index, lexicographic with x fastest."""

    nx: int  # lattice nodes in x, boundary included
    ny: int

    @classmethod
    def for_lattice(cls, lattice: LobattoLattice):
        return cls(*lattice.shape)

    @property
    def count(self):
        return (self.nx - 2) * (self.ny - 2)

    def index(self, I, J):
        if not (0 < I < self.nx - 1 and 0 < J < self.ny - 1):
            raise NotInterior(f"lattice node ({I}, {J}) is on the boundary")
        return (J - 1) * (self.nx - 2) + (I - 1)

    def node(self, r):
        if not 0 <= r < self.count:
            raise IndexError(r)
        J, I = divmod(r, self.nx - 2)
        return I + 1, J + 1

    def scatter(self, values):
        """Interior unknown vector -> lattice array (boundary zero), indexed [I, J]."""
        out = np.zeros((self.nx, self.ny))
        out[1:-1, 1:-1] = np.asarray(values).reshape(self.ny - 2, self.nx - 2).T
        return out

    def gather(self, lattice_values):
        """Lattice array indexed [I, J] -> interior unknown vector."""
        return np.ascontiguousarray(np.asarray(lattice_values)[1:-1, 1:-1].T).ravel()


def control_volume(dual: DualGrid, P) -> Rectangle:
    """Control volume of interior lattice node ``P = (I, J)``."""
    I, J = P
    nx, ny = dual.lattice_shape
    if not (0 < I < nx - 1 and 0 < J < ny - 1):
        raise NotInterior(f"lattice node {P} is on the boundary and has no control volume")
    return Rectangle(dual.gx[I - 1], dual.gx[I], dual.gy[J - 1], dual.gy[J])


def _split(lo, hi, breaks):
    inner = breaks[(breaks > lo) & (breaks < hi)]
    edges = np.concatenate(([lo], inner, [hi]))
    # element index of each piece: the one containing its midpoint
    mids = 0.5 * (edges[:-1] + edges[1:])
    ids = np.searchsorted(breaks, mids) - 1
    return list(zip(ids.tolist(), edges[:-1].tolist(), edges[1:].tolist()))


def elements_overlapping(dual: DualGrid, P):
    """Pieces of the control volume of ``P`` cut along element boundaries.

    Returns a list of ``((ex, ey), Rectangle)``; at most four entries.
    """
    cv = control_volume(dual, P)
    mesh = dual.mesh
    out = []
    for ey, y0, y1 in _split(cv.y0, cv.y1, mesh.y_breaks):
        for ex, x0, x1 in _split(cv.x0, cv.x1, mesh.x_breaks):
            out.append(((ex, ey), Rectangle(x0, x1, y0, y1)))
    return out
