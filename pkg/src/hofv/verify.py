"""Structural property suite run by ``hofv verify``.

Each check returns ``(passed, detail)``; ``run_all`` collects them.
"""
from __future__ import annotations

import numpy as np

from .fvcore import (DualField, TrialField, apply_bilinear_flux_form, apply_bilinear_jump_form,
                     assemble_stiffness, discrete_inner, mixed_terms, pi_map)
from .meshdual import DofMap, TensorMesh, build_lattices, build_uniform_mesh
from .polyquad import gauss_rule
from .problems import get_problem
from .study import solve_level


def _random_mesh(rng, m, n):
    def breaks(count):
        h = rng.uniform(0.6, 1.4, count)
        return np.concatenate(([0.0], np.cumsum(h) / h.sum()))
    return TensorMesh(breaks(m), breaks(n))


def _setup(mesh, k):
    lattice, dual = build_lattices(mesh, k)
    dof = DofMap.for_lattice(lattice)
    A = assemble_stiffness(mesh, k, dual, dof, extended=True)
    return lattice, dual, dof, A


def _random_trial(rng, lattice, dof):
    return TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))


def check_quadrature(kmax=8):
    worst = 0.0
    for k in range(1, kmax + 1):
        rule = gauss_rule(k)
        for p in range(2 * k):
            exact = 2.0 / (p + 1) if p % 2 == 0 else 0.0
            worst = max(worst, abs(rule.weights @ rule.nodes ** p - exact))
    return worst <= 1e-13, f"max monomial error {worst:.2e} (tol 1e-13)"


def check_flux_jump(seed=0, samples=3):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(1, 5):
        for m, n in ((2, 3), (4, 4)):
            lattice, dual, dof, A = _setup(_random_mesh(rng, m, n), k)
            for _ in range(samples):
                w = _random_trial(rng, lattice, dof)
                v = DualField(lattice, dof.scatter(rng.standard_normal(dof.count)))
                a_flux = apply_bilinear_flux_form(w, v, A)
                a_jump = apply_bilinear_jump_form(w, v, dual)
                worst = max(worst, abs(a_flux - a_jump) / (1.0 + abs(a_flux)))
    return worst <= 1e-11, f"max |flux - jump| / (1 + |flux|) = {worst:.2e} (tol 1e-11)"


def check_pi_consistency(seed=1, samples=5):
    """Sweep residual on the unused jump equations, relative to ||v||_inf."""
    rng = np.random.default_rng(seed)
    from .kernels import get_backend
    from .fvcore import gauss_weights
    worst = 0.0
    for k in range(1, 5):
        lattice, dual, dof, _ = _setup(_random_mesh(rng, 3, 4), k)
        ax, ay = gauss_weights(dual)
        for _ in range(samples):
            v = _random_trial(rng, lattice, dof)
            _, _, dxy = mixed_terms(v, dual)
            _, res = get_backend().pi_sweep(ax[:, None] * ay[None, :] * dxy)
            worst = max(worst, res / np.abs(v.coeffs).max())
    return worst <= 1e-10, f"max unused-jump residual {worst:.2e} * ||v|| (tol 1e-10)"


def check_fem_identity(seed=2, samples=3):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(1, 5):
        lattice, dual, dof, A = _setup(_random_mesh(rng, 3, 3), k)
        for _ in range(samples):
            w = _random_trial(rng, lattice, dof)
            v = _random_trial(rng, lattice, dof)
            lhs = apply_bilinear_flux_form(w, pi_map(v, dual), A)
            f1, f2, _ = mixed_terms(w, dual)
            _, _, dxy = mixed_terms(v, dual)
            rhs = -discrete_inner(f1, dxy, dual) - discrete_inner(f2, dxy, dual)
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst <= 1e-10, f"max relative gap {worst:.2e} (tol 1e-10)"


def check_coercivity(seed=3, samples=100):
    rng = np.random.default_rng(seed)
    smallest = np.inf
    for k in range(1, 5):
        lattice, dual, dof, A = _setup(build_uniform_mesh(0, 1, 0, 1, 4, 4), k)
        for _ in range(samples):
            v = _random_trial(rng, lattice, dof)
            smallest = min(smallest, apply_bilinear_flux_form(v, pi_map(v, dual), A))
    return smallest > 0, f"min a_h(v, Pi v) = {smallest:.3e} over {4 * samples} fields"


def check_polynomial_exactness():
    problem = get_problem("polynomial")
    worst = 0.0
    for k in (2, 3, 4):
        for N in (2, 4, 8):
            run = solve_level(problem, k, N)
            worst = max(worst, run.result.errors["e_L"])
    return worst <= 1e-10, f"max lattice-node error {worst:.2e} (tol 1e-10)"


def check_conservation():
    worst = 0.0
    for pid in ("paper", "polynomial"):
        for k in (2, 3, 4):
            run = solve_level(get_problem(pid), k, 8)
            worst = max(worst, run.conservation)
    return worst <= 1e-9, f"max |flux + load| / ||b|| = {worst:.2e} (tol 1e-9)"


CHECKS = {
    "quadrature exactness": check_quadrature,
    "flux/jump duality": check_flux_jump,
    "pi-map consistency": check_pi_consistency,
    "quadrature-of-FEM identity": check_fem_identity,
    "coercivity a_h(v, Pi v) > 0": check_coercivity,
    "polynomial exactness": check_polynomial_exactness,
    "local conservation": check_conservation,
}


def run_all(echo=print):
    """Run every check, echo one line each; returns True when all pass."""
    ok = True
    for name, check in CHECKS.items():
        passed, detail = check()
        ok &= bool(passed)
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
