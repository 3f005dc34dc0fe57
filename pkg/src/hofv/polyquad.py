"""Legendre / Lobatto polynomial kernels, Gauss rules and the Lobatto nodal basis.

Everything here works on the reference interval [-1, 1]. Rules and node
sets are cached and returned with read-only arrays, so they can be shared
freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IterationFailure

MAX_ORDER = 12
_MAX_NEWTON = 100


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_order(k):
    if not (1 <= int(k) <= MAX_ORDER) or int(k) != k:
        raise ValueError(f"order k must be an integer in [1, {MAX_ORDER}], got {k!r}")
    return int(k)


@dataclass(frozen=True)
class QuadRule:
    """k-point Gauss-Legendre rule on [-1, 1]."""

    k: int
    nodes: np.ndarray
    weights: np.ndarray

    def mapped(self, a, b):
        """Nodes and weights affinely mapped onto ``[a, b]``."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


@dataclass(frozen=True)
class LobattoSet:
    """The k+1 Lobatto points: -1, 1 and the zeros of P_k'."""

    k: int
    nodes: np.ndarray

    @property
    def bary_weights(self):
        return _bary_weights(self.k)

    @property
    def diff_matrix(self):
        return _diff_matrix(self.k)


def legendre(r, t):
    """Legendre polynomial P_r and its derivative at ``t``.

    Uses the three-term recurrence for the values and
    ``P'_{n+1} = P'_{n-1} + (2n+1) P_n`` for the derivatives, which stays
    regular at the endpoints. ``t`` may be a scalar or an array.
    """
    if r < 0:
        raise ValueError("degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    p_prev, p = np.ones_like(t), t.copy()
    d_prev, d = np.zeros_like(t), np.ones_like(t)
    if r == 0:
        return _out(p_prev), _out(d_prev)
    for n in range(1, r):
        p_next = ((2 * n + 1) * t * p - n * p_prev) / (n + 1)
        d_next = d_prev + (2 * n + 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return _out(p), _out(d)


def _out(a):
    return float(a) if a.ndim == 0 else a


def _newton(f_df, x0, what):
    x = np.array(x0, dtype=float)
    for _ in range(_MAX_NEWTON):
        f, df = f_df(x)
        dx = f / df
        x = x - dx
        if np.max(np.abs(dx), initial=0.0) < 1e-15:
            # one polishing step past the stagnation point
            f, df = f_df(x)
            return x - f / df
    raise IterationFailure(f"Newton iteration for {what} did not converge "
                           f"in {_MAX_NEWTON} steps")


def _symmetrize(x):
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    if x.size % 2:
        x[x.size // 2] = 0.0
    return x


@lru_cache(maxsize=None)
def gauss_rule(k) -> QuadRule:
    """k-point Gauss-Legendre rule, nodes ascending."""
    k = _check_order(k)
    j = np.arange(k)
    guess = np.cos(np.pi * (j + 0.75) / (k + 0.5))
    x = _symmetrize(_newton(lambda t: legendre(k, t), guess, f"P_{k} roots"))
    _, dp = legendre(k, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadRule(k, _readonly(x), _readonly(w))


def _dlegendre_newton(k):
    def f_df(t):
        p, dp = legendre(k, t)
        # Legendre ODE: (1 - t^2) P'' = 2 t P' - k (k + 1) P
        ddp = (2.0 * t * dp - k * (k + 1) * p) / (1.0 - t * t)
        return dp, ddp
    return f_df


@lru_cache(maxsize=None)
def lobatto_points(k) -> LobattoSet:
    """Endpoints plus the zeros of P_k', ascending (k+1 points)."""
    k = _check_order(k)
    if k == 1:
        return LobattoSet(1, _readonly([-1.0, 1.0]))
    g = gauss_rule(k).nodes
    guess = 0.5 * (g[:-1] + g[1:])
    inner = _symmetrize(_newton(_dlegendre_newton(k), guess, f"P_{k}' roots"))
    return LobattoSet(k, _readonly(np.concatenate(([-1.0], inner, [1.0]))))


def lobatto_poly(r, t):
    """Lobatto polynomial phi_r: (1-t)/2, (1+t)/2, then the integrals of P_{r-1}."""
    if r < 0:
        raise ValueError("degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    if r == 0:
        return _out(0.5 * (1.0 - t))
    if r == 1:
        return _out(0.5 * (1.0 + t))
    p_r, _ = legendre(r, t)
    p_r2, _ = legendre(r - 2, t)
    return _out((np.asarray(p_r) - p_r2) / (2 * r - 1))


@lru_cache(maxsize=None)
def _bary_weights(k):
    x = lobatto_points(k).nodes
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return _readonly(w / np.max(np.abs(w)))


@lru_cache(maxsize=None)
def _diff_matrix(k):
    """D[m, i] = l_i'(x_m) for the Lobatto cardinal functions."""
    x = lobatto_points(k).nodes
    w = _bary_weights(k)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return _readonly(d)


_NODE_SNAP = 1e-14


def lagrange_table(k, t):
    """Values and derivatives of all k+1 Lobatto cardinal functions at ``t``.

    Returns two arrays of shape ``t.shape + (k+1,)``. The value uses the
    barycentric form; the derivative is reconstructed from the nodal
    differentiation matrix, which avoids the cancellation of the
    barycentric derivative formula near a node.
    """
    x = lobatto_points(k).nodes
    w = _bary_weights(k)
    t = np.asarray(t, dtype=float)
    flat = t.reshape(-1)
    d = flat[:, None] - x[None, :]
    # snap to a node when 1/d would lose all precision or overflow
    hit = np.abs(d) < _NODE_SNAP
    on_node = hit.any(axis=1)
    hit &= on_node[:, None] & (np.abs(d) == np.abs(d).min(axis=1, keepdims=True))
    vals = hit.astype(float)
    off = ~on_node
    a = w[None, :] / d[off]
    vals[off] = a / a.sum(axis=1, keepdims=True)
    ders = vals @ _diff_matrix(k)
    shape = t.shape + (k + 1,)
    return vals.reshape(shape), ders.reshape(shape)


def nodal_basis_1d(nodes: LobattoSet, i, t):
    """Value and derivative of the i-th Lagrange cardinal function on ``nodes``."""
    if not 0 <= i <= nodes.k:
        raise IndexError(f"basis index {i} outside 0..{nodes.k}")
    vals, ders = lagrange_table(nodes.k, t)
    return _out(vals[..., i]), _out(ders[..., i])
