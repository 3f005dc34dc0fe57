"""Registry of model problems with closed-form solutions on the unit square."""
from __future__ import annotations

import numpy as np

from .analysis import ExactSolution
from .errors import RegistrationError

PROBLEMS: dict[str, ExactSolution] = {}

# sixth-order central second-derivative stencil (7 points)
_FD_OFFSETS = np.arange(-3, 4)
_FD_COEFFS = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])


def fd_laplacian(u, x, y, h=5e-3):
    """-Laplace(u) by 7-point stencils along each axis."""
    lap = np.zeros(np.broadcast(x, y).shape)
    for off, c in zip(_FD_OFFSETS, _FD_COEFFS):
        lap = lap + c * (u(x + off * h, y) + u(x, y + off * h))
    return -lap / (h * h)


def self_consistency(problem: ExactSolution, npts=100, seed=0, domain=(0.0, 1.0, 0.0, 1.0)):
    """Max |FD(-Laplace u) - f| over random interior points."""
    a, b, c, d = domain
    rng = np.random.default_rng(seed)
    pad = 0.02
    x = rng.uniform(a + pad, b - pad, npts)
    y = rng.uniform(c + pad, d - pad, npts)
    return float(np.abs(fd_laplacian(problem.u, x, y) - problem.f(x, y)).max())


def register_problem(pid, u, grad, f, tol=1e-5, replace=False):
    """Add a problem after checking that f matches -Laplace(u) numerically."""
    if pid in PROBLEMS and not replace:
        raise RegistrationError(f"problem {pid!r} is already registered")
    problem = ExactSolution(u, grad, f, pid)
    dev = self_consistency(problem)
    if not dev <= tol:
        raise RegistrationError(f"problem {pid!r}: -Laplace(u) and f differ by {dev:.3e} (> {tol:g})")
    PROBLEMS[pid] = problem
    return problem


def get_problem(pid) -> ExactSolution:
    try:
        return PROBLEMS[pid]
    except KeyError:
        raise KeyError(f"unknown problem {pid!r}; known: {sorted(PROBLEMS)}") from None


pi = np.pi


def _paper_u(x, y):
    return np.sin(pi * x) * np.sin(2 * pi * y) * np.exp(x - 0.5 + y * y)


def _paper_grad(x, y):
    e = np.exp(x - 0.5 + y * y)
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    sy, cy = np.sin(2 * pi * y), np.cos(2 * pi * y)
    return ((pi * cx + sx) * sy * e,
            sx * (2 * pi * cy + 2 * y * sy) * e)


def _paper_f(x, y):
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    sy, cy = np.sin(2 * pi * y), np.cos(2 * pi * y)
    return ((5 * pi ** 2 - 4 * y * y - 3) * sx * sy
            - 8 * pi * y * sx * cy
            - 2 * pi * cx * sy) * np.exp(x - 0.5 + y * y)


register_problem("paper", _paper_u, _paper_grad, _paper_f)

register_problem(
    "polynomial",
    lambda x, y: x * (1 - x) * y * (1 - y),
    lambda x, y: ((1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)),
    lambda x, y: 2 * y * (1 - y) + 2 * x * (1 - x),
)

register_problem(
    "separable",
    lambda x, y: np.sin(pi * x) * np.sin(pi * y),
    lambda x, y: (pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)),
    lambda x, y: 2 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y),
)

register_problem(
    "zero",
    lambda x, y: np.zeros(np.broadcast(x, y).shape),
    lambda x, y: (np.zeros(np.broadcast(x, y).shape), np.zeros(np.broadcast(x, y).shape)),
    lambda x, y: np.zeros(np.broadcast(x, y).shape),
)
