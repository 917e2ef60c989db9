import numpy as np
import pytest

from base_nonlinearity import regularize
from base_scheme import SchemeConfig
from infra.fe_problem import BoundarySpec, FeProblem
from infra.fields import FieldP0, FieldP1
from infra.mesh import build_mesh
from m_scheme import MScheme
from model_registry import build_model
from splitting import (
    clip_positive,
    compute_h_field,
    initial_w_guess,
    linear_iteration,
    stopping_error,
    time_discrete_residual,
)


def _problem(domain=(-1.0, 1.0), h=0.05, u_boundary="dirichlet_zero") -> FeProblem:
    mesh = build_mesh(list(domain), h)
    return FeProblem(mesh, BoundarySpec.from_dict({"u": {"all": u_boundary}}))


def _bump(problem: FeProblem) -> FieldP0:
    return FieldP0.from_function(
        problem.mesh, lambda x: np.maximum(0.5 - np.abs(x[:, 0]), 0.0)
    )


def test_h_field():
    problem = _problem()
    model = build_model("biofilm")
    v = FieldP0.constant(problem.mesh, 0.01)
    h_field = compute_h_field(model, v, 0.1)
    assert h_field.values == pytest.approx(np.full(problem.mesh.n_cells, 1 - 0.1 * 0.08))
    pme = build_model("pme", {"beta_reaction": 1})
    assert compute_h_field(pme, v, 0.01).values == pytest.approx(0.99)


def test_h_field_samples_p1_substrate_at_centroids():
    problem = _problem(h=0.5)
    model = build_model("biofilm", {"mu": 1})
    v = FieldP1.interpolate(problem.mesh, lambda x: 0.01 + 0 * x[:, 0])
    assert compute_h_field(model, v, 0.1).values == pytest.approx(0.992)


def test_linear_iteration_two_cells_by_hand():
    # one free vertex: (2·0.25²/0.5 + 1·4)·w = 2·0.25·1, ũ_c = 0.25·w/0.5
    problem = _problem(domain=(0.0, 1.0), h=0.5)
    mesh = problem.mesh
    assert problem.mixed_mass.toarray()[1].tolist() == pytest.approx([0.25, 0.25])
    ones = FieldP0.constant(mesh, 1.0)
    u_tilde, w = linear_iteration(
        problem, ones, ones, FieldP0.constant(mesh, 0.0), ones, build_model("pme").phi, 1.0
    )
    assert w.values == pytest.approx([0.0, 2 / 17, 0.0], abs=1e-12)
    assert u_tilde.values == pytest.approx([1 / 17, 1 / 17], abs=1e-12)


def test_linear_iteration_of_zero_data_is_zero():
    problem = _problem()
    zero = FieldP0.constant(problem.mesh, 0.0)
    ones = FieldP0.constant(problem.mesh, 1.0)
    u_tilde, w = linear_iteration(problem, ones, zero, zero, ones, build_model("pme").phi, 0.01)
    assert np.all(u_tilde.values == 0.0)
    assert np.all(w.values == 0.0)


def test_converged_step_is_a_fixed_point_of_the_iteration():
    problem = _problem(domain=(0.0, 1.0), h=0.05)
    model = build_model("nondegenerate")
    phi = regularize(model.phi, 1.0)
    tau = 0.05
    u_prev = FieldP0.from_function(problem.mesh, lambda x: 0.25 * np.sin(np.pi * x[:, 0]))
    v = FieldP0.constant(problem.mesh, 0.0)
    scheme = MScheme(SchemeConfig(type="m", M=0.5, gamma=1.0, tol=1e-13))
    u_n, w_n, trace = scheme.solve_nonlinear_step(problem, model, phi, u_prev, v, tau)
    assert trace.converged
    h_field = compute_h_field(model, v, tau)
    L_field = scheme.l_factor_field(phi, u_n, tau)
    u_tilde, w = linear_iteration(problem, h_field, u_prev, u_n, L_field, phi, tau)
    assert u_tilde.values == pytest.approx(u_n.values, abs=1e-5)
    assert w.values == pytest.approx(w_n.values, abs=1e-5)


def test_pre_clip_mass_identity():
    problem = _problem(u_boundary="neumann_zero")
    model = build_model("pme", {"beta_reaction": 0})
    phi = model.phi
    u_prev = _bump(problem)
    h_field = compute_h_field(model, FieldP0.constant(problem.mesh, 0.0), 0.01)
    scheme = MScheme(SchemeConfig(type="m", M=1e-3, gamma=1 / 3))
    L_field = scheme.l_factor_field(phi, u_prev, 0.01)
    u_tilde, _ = linear_iteration(problem, h_field, u_prev, u_prev, L_field, phi, 0.01)
    volumes = problem.mesh.volumes
    assert np.sum(u_tilde.values * volumes) == pytest.approx(np.sum(u_prev.values * volumes), rel=1e-10)


def test_linear_iteration_respects_dirichlet_w():
    problem = _problem()
    model = build_model("pme", {"beta_reaction": 0})
    u_prev = _bump(problem)
    h_field = FieldP0.constant(problem.mesh, 1.0)
    L_field = FieldP0.constant(problem.mesh, 1.0)
    _, w = linear_iteration(problem, h_field, u_prev, u_prev, L_field, model.phi, 0.01)
    assert w.values[problem.w_dirichlet].tolist() == [0.0, 0.0]


def test_linear_iteration_rejects_bad_factors():
    problem = _problem(h=0.5)
    phi = build_model("pme").phi
    u = FieldP0.constant(problem.mesh, 0.1)
    ones = FieldP0.constant(problem.mesh, 1.0)
    zeros = FieldP0.constant(problem.mesh, 0.0)
    with pytest.raises(ValueError, match="Linearisation factor"):
        linear_iteration(problem, ones, u, u, zeros, phi, 0.1)
    with pytest.raises(ValueError, match="Growth factor"):
        linear_iteration(problem, zeros, u, u, ones, phi, 0.1)


def test_clip_is_non_expansive():
    mesh = build_mesh([0.0, 1.0], 1e-3)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a = FieldP0(mesh, rng.normal(size=mesh.n_cells))
        b = FieldP0(mesh, rng.normal(size=mesh.n_cells))
        clipped_a, clipped_b = clip_positive(a), clip_positive(b)
        assert np.all(clipped_a.values >= 0)
        assert np.all(np.abs(clipped_a.values - clipped_b.values) <= np.abs(a.values - b.values))


def test_stopping_error_example():
    mesh = build_mesh([0.0, 1.0], 0.5)
    u = FieldP0.constant(mesh, 1.0)
    hat = FieldP1(mesh, [0.0, 1.0, 0.0])
    error = stopping_error(u, u, hat, FieldP1.zeros(mesh), FieldP0.constant(mesh, 1.0), 0.1)
    assert error == pytest.approx(0.4)


def test_stopping_error_density_term():
    mesh = build_mesh([0.0, 1.0], 0.5)
    w = FieldP1.zeros(mesh)
    L_field = FieldP0(mesh, [2.0, 4.0])
    error = stopping_error(
        FieldP0(mesh, [1.0, 1.0]), FieldP0(mesh, [0.0, 0.5]), w, w, L_field, 0.1
    )
    assert error == pytest.approx(2.0 * 0.5 + 4.0 * 0.25 * 0.5)


def test_initial_w_guess():
    problem = _problem(h=0.5)
    phi = build_model("pme").phi
    w = initial_w_guess(problem, phi, FieldP0.constant(problem.mesh, 0.5))
    assert w.values.tolist() == pytest.approx([0.0, 0.0625, 0.0625, 0.0625, 0.0])
    neumann = _problem(h=0.5, u_boundary="neumann_zero")
    w = initial_w_guess(neumann, phi, FieldP0.constant(neumann.mesh, 0.5))
    assert w.values == pytest.approx(np.full(5, 0.0625))


def test_residual_of_converged_step_is_below_tolerance():
    problem = _problem(domain=(0.0, 1.0), h=0.02)
    model = build_model("nondegenerate")
    phi = regularize(model.phi, 1.0)
    tau, tol = 0.05, 1e-8
    u_prev = FieldP0.from_function(problem.mesh, lambda x: 0.25 * np.sin(np.pi * x[:, 0]))
    v = FieldP0.constant(problem.mesh, 0.0)
    scheme = MScheme(SchemeConfig(type="m", M=0.5, gamma=1.0, tol=tol))
    u_n, w_n, trace = scheme.solve_nonlinear_step(problem, model, phi, u_prev, v, tau)
    assert trace.converged
    h_field = compute_h_field(model, v, tau)
    L_field = scheme.l_factor_field(phi, u_n, tau)
    residual = time_discrete_residual(problem, h_field, u_prev, u_n, w_n, phi, L_field, tau)
    assert residual <= 10 * tol


def test_residual_detects_inconsistent_pair():
    problem = _problem(domain=(0.0, 1.0), h=0.1)
    model = build_model("nondegenerate")
    u = FieldP0.constant(problem.mesh, 0.2)
    h_field = FieldP0.constant(problem.mesh, 1.0)
    L_field = FieldP0.constant(problem.mesh, 2.0)
    residual = time_discrete_residual(
        problem, h_field, u, u, FieldP1.zeros(problem.mesh), model.phi, L_field, 0.1
    )
    phi_u = 0.2 + 0.2**4
    assert residual == pytest.approx(phi_u**2 / 2.0)
