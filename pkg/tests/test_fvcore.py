import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hofv.errors import InconsistentJump
from hofv.fvcore import (DualField, TrialField, all_jumps, apply_bilinear_flux_form,
                         apply_bilinear_jump_form, assemble_load, assemble_stiffness,
                         assemble_system, discrete_inner, gauss_weights, jump, mixed_terms, pi_map)
from hofv.kernels import get_backend
from hofv.meshdual import DofMap, TensorMesh, build_lattices, build_uniform_mesh, control_volume

from oracles import brute_stiffness, composite


def setup(mesh, k):
    lattice, dual = build_lattices(mesh, k)
    dof = DofMap.for_lattice(lattice)
    return lattice, dual, dof, assemble_stiffness(mesh, k, dual, dof, extended=True)


def random_breaks(rng, m, lo=0.0):
    h = rng.uniform(0.5, 1.5, m)
    return lo + np.concatenate(([0.0], np.cumsum(h) / h.sum()))


meshes = st.builds(
    lambda m, n, seed: TensorMesh(random_breaks(np.random.default_rng(seed), m),
                                  random_breaks(np.random.default_rng(seed + 1), n)),
    st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))


def test_stiffness_k1_hand_value():
    mesh = build_uniform_mesh(0, 1, 0, 1, 2, 2)
    lattice, dual, dof, _ = setup(mesh, 1)
    A = assemble_stiffness(mesh, 1, dual, dof)
    assert A.shape == (1, 1) and A[0, 0] == pytest.approx(3.0, abs=1e-14)


@pytest.mark.parametrize("k,xb,yb", [
    (1, [0, 0.4, 1.0], [0, 0.7, 1.0]),
    (2, [0, 0.3, 1.0], [0, 0.6, 1.0, 1.2]),
    (3, [0, 0.4, 1.0], [0, 1.0]),
    (4, [0, 1.0], [0, 0.5, 1.0]),
])
def test_stiffness_matches_brute_force_flux(k, xb, yb, backend):
    mesh = TensorMesh(np.array(xb, float), np.array(yb, float))
    lattice, dual = build_lattices(mesh, k)
    A = assemble_stiffness(mesh, k, dual, DofMap.for_lattice(lattice), extended=True,
                           backend=backend).toarray()
    ref = brute_stiffness(mesh.x_breaks, mesh.y_breaks, k)
    np.testing.assert_allclose(A, ref, atol=1e-12 * np.abs(ref).max())


def test_stiffness_sparsity_bound():
    mesh = build_uniform_mesh(0, 1, 0, 1, 4, 4)
    for k in range(1, 5):
        _, dual = build_lattices(mesh, k)
        lattice, dual, dof, A = setup(mesh, k)
        assert np.diff(A.indptr).max() <= (2 * k + 1) ** 2


@settings(max_examples=25, deadline=None)
@given(mesh=meshes, k=st.integers(1, 4))
def test_constants_carry_no_flux(mesh, k):
    _, _, _, A = setup(mesh, k)
    np.testing.assert_allclose(A @ np.ones(A.shape[1]), 0.0, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(mesh=meshes, k=st.integers(2, 4))
def test_quadratic_flux_is_exact(mesh, k):
    # u = x^2 + 3y^2 - xy lies in the trial space for k >= 2; -Lap u = -8
    lattice, dual, dof, A = setup(mesh, k)
    u = TrialField.sample(lattice, lambda x, y: x * x + 3 * y * y - x * y, zero_boundary=False)
    flux = A @ np.ascontiguousarray(u.coeffs.T).ravel()
    area = np.array([control_volume(dual, dof.node(r)).area for r in range(dof.count)])
    np.testing.assert_allclose(flux, -8.0 * area, atol=1e-10)


def test_load_examples():
    mesh = build_uniform_mesh(0, 1, 0, 1, 2, 2)
    lattice, dual, dof, _ = setup(mesh, 1)
    assert assemble_load(mesh, 1, dual, dof, lambda x, y: x) == pytest.approx([0.125], abs=1e-15)
    assert assemble_load(mesh, 1, dual, dof, lambda x, y: 1.0 + 0 * x) == pytest.approx([0.25])
    with pytest.raises(ValueError):
        assemble_load(mesh, 3, *build_lattices(mesh, 3)[1:], DofMap.for_lattice(build_lattices(mesh, 3)[0]),
                      lambda x, y: x, q=3)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_load_against_composite_rule(k, rng):
    mesh = TensorMesh(random_breaks(rng, 3), random_breaks(rng, 2))
    lattice, dual, dof, _ = setup(mesh, k)
    f = lambda x, y: np.exp(x) * np.cos(2 * y) + x ** 3 * y
    b = assemble_load(mesh, k, dual, dof, f, q=10)
    for r in range(dof.count):
        cv = control_volume(dual, dof.node(r))
        ref = composite(lambda y: np.array([composite(lambda x: f(x, yy), cv.x0, cv.x1) for yy in y]),
                        cv.y0, cv.y1)
        assert b[r] == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_load_polynomial_exact_at_default_order():
    mesh = TensorMesh(np.array([0, 0.35, 1.0]), np.array([0, 0.55, 1.0]))
    k = 3
    lattice, dual, dof, _ = setup(mesh, k)
    b = assemble_load(mesh, k, dual, dof, lambda x, y: x ** 9 * y ** 4)  # q = 5 is exact to degree 9
    for r in range(dof.count):
        x0, x1, y0, y1 = control_volume(dual, dof.node(r))
        ref = (x1 ** 10 - x0 ** 10) / 10 * (y1 ** 5 - y0 ** 5) / 5
        assert b[r] == pytest.approx(ref, rel=1e-12, abs=1e-16)


def test_assemble_system_k1():
    s = assemble_system(build_uniform_mesh(0, 1, 0, 1, 2, 2), 1, lambda x, y: 1.0 + 0 * x)
    np.testing.assert_allclose(s.matrix.toarray(), [[3.0]], atol=1e-14)
    assert s.rhs == pytest.approx([0.25])


def test_trial_and_dual_fields_are_guarded():
    lattice, _ = build_lattices(build_uniform_mesh(0, 1, 0, 1, 2, 2), 1)
    u = TrialField(lattice, np.zeros(lattice.shape))
    with pytest.raises(ValueError):
        u.coeffs[1, 1] = 2.0
    with pytest.raises(ValueError):
        TrialField(lattice, np.zeros((2, 2)))
    bad = np.zeros(lattice.shape)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        DualField(lattice, bad)


def test_jump_examples():
    lattice, dual = build_lattices(build_uniform_mesh(0, 1, 0, 1, 2, 2), 1)
    V = np.zeros(lattice.shape)
    V[1, 1] = 1.0
    v = DualField(lattice, V)
    assert jump(v, (0, 0)) == 1.0 and jump(v, (1, 1)) == 1.0
    assert jump(v, (0, 1)) == -1.0 and jump(v, (1, 0)) == -1.0
    assert all_jumps(v).tolist() == [[1.0, -1.0], [-1.0, 1.0]]
    assert all_jumps(DualField(lattice, np.zeros(lattice.shape))).sum() == 0.0


def test_discrete_inner_examples():
    _, dual = build_lattices(build_uniform_mesh(0, 1, 0, 1, 2, 2), 2)
    one = lambda x, y: np.ones_like(x)
    assert discrete_inner(one, one, dual) == pytest.approx(1.0, abs=1e-15)
    assert discrete_inner(lambda x, y: x, one, dual) == pytest.approx(0.5, abs=1e-15)
    ax, ay = gauss_weights(dual)
    assert np.all(ax > 0) and ax.sum() == pytest.approx(1.0)


def _jump_operator(lattice):
    """Dense map from interior dual values to all Gauss-lattice jumps."""
    nx, ny = lattice.shape
    dof = DofMap.for_lattice(lattice)
    cols = []
    for r in range(dof.count):
        V = np.zeros(lattice.shape)
        V[dof.node(r)] = 1.0
        cols.append(all_jumps(DualField(lattice, V)).ravel())
    return np.array(cols).T, dof


@pytest.mark.parametrize("k,m,n", [(1, 2, 2), (2, 3, 2), (3, 2, 3)])
def test_pi_map_matches_least_squares(k, m, n, rng, backend):
    mesh = TensorMesh(random_breaks(rng, m), random_breaks(rng, n))
    lattice, dual = build_lattices(mesh, k)
    dof = DofMap.for_lattice(lattice)
    v = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    _, _, dxy = mixed_terms(v, dual)
    ax, ay = gauss_weights(dual)
    target = (ax[:, None] * ay[None, :] * dxy).ravel()
    G, _ = _jump_operator(lattice)
    sol, *_ = np.linalg.lstsq(G, target, rcond=None)
    assert np.abs(G @ sol - target).max() <= 1e-12  # the jump system is consistent
    pv = pi_map(v, dual, backend=backend)
    np.testing.assert_allclose(dof.gather(pv.values), sol, atol=1e-11)


def test_pi_map_rejections():
    lattice, dual = build_lattices(build_uniform_mesh(0, 1, 0, 1, 2, 2), 2)
    u = TrialField.sample(lattice, lambda x, y: 1.0 + x, zero_boundary=False)
    with pytest.raises(ValueError):
        pi_map(u, dual)


def test_pi_sweep_detects_inconsistent_jumps(backend, rng, monkeypatch):
    _, res = get_backend(backend).pi_sweep(rng.standard_normal((4, 4)))
    assert res > 1e-3
    lattice, dual = build_lattices(build_uniform_mesh(0, 1, 0, 1, 2, 2), 2)
    dof = DofMap.for_lattice(lattice)
    v = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    import hofv.fvcore as fv
    monkeypatch.setattr(fv, "mixed_terms", lambda w, d: (None, None, rng.standard_normal((4, 4))))
    with pytest.raises(InconsistentJump):
        pi_map(v, dual)


@settings(max_examples=30, deadline=None)
@given(mesh=meshes, k=st.integers(1, 4), seed=st.integers(0, 2 ** 31))
def test_flux_form_equals_jump_form(mesh, k, seed):
    rng = np.random.default_rng(seed)
    lattice, dual, dof, A = setup(mesh, k)
    if dof.count == 0:
        return
    w = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    v = DualField(lattice, dof.scatter(rng.standard_normal(dof.count)))
    a_flux = apply_bilinear_flux_form(w, v, A)
    a_jump = apply_bilinear_jump_form(w, v, dual)
    assert abs(a_flux - a_jump) <= 1e-11 * (1 + abs(a_flux))


@settings(max_examples=30, deadline=None)
@given(mesh=meshes, k=st.integers(1, 4), seed=st.integers(0, 2 ** 31))
def test_quadrature_of_fem_identity(mesh, k, seed):
    rng = np.random.default_rng(seed)
    lattice, dual, dof, A = setup(mesh, k)
    if dof.count == 0:
        return
    w = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    v = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    lhs = apply_bilinear_flux_form(w, pi_map(v, dual), A)
    f1, f2, _ = mixed_terms(w, dual)
    _, _, dxy = mixed_terms(v, dual)
    rhs = -discrete_inner(f1, dxy, dual) - discrete_inner(f2, dxy, dual)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1e-12)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 4), seed=st.integers(0, 2 ** 31))
def test_coercivity(k, seed):
    rng = np.random.default_rng(seed)
    lattice, dual, dof, A = setup(build_uniform_mesh(0, 1, 0, 1, 4, 4), k)
    v = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    assert apply_bilinear_flux_form(v, pi_map(v, dual), A) > 0


def test_default_arguments_rebuild_operators(rng):
    mesh = build_uniform_mesh(0, 1, 0, 1, 2, 3)
    lattice, dual, dof, A = setup(mesh, 2)
    w = TrialField.from_interior(lattice, dof, rng.standard_normal(dof.count))
    v = pi_map(w)
    assert apply_bilinear_flux_form(w, v) == pytest.approx(apply_bilinear_flux_form(w, v, A))
    assert apply_bilinear_jump_form(w, v) == pytest.approx(apply_bilinear_jump_form(w, v, dual))
