"""
Building blocks of one splitting iteration on the P0/P1 discretisation.

The iteration unknowns are the cell densities ũ (P0) and the vertex values of
w ≈ Φ̆(u) (P1). The cell equation L_c·ũ_c·|c| − ∫_c w = L_c·u_c·|c| − Φ̆(u_c)·|c|
is eliminated exactly, leaving one SPD system for w per iteration.
"""

import numpy as np
import scipy.sparse as sp

from base_nonlinearity import BaseNonlinearity
from infra.assembly import SparseSpd
from infra.fe_problem import FeProblem
from infra.fields import Field, FieldP0, FieldP1, gradient_norm_squared
from infra.linear_solver import solve_spd
from model_system import ModelSystem


def compute_h_field(model: ModelSystem, v_prev: Field, tau: float) -> FieldP0:
    """
    Cell-wise 1 − τ·f(v_prev), with P1 substrates sampled at cell centroids
    """
    values = 1.0 - tau * model.growth(v_prev.at_centroids())
    return FieldP0(v_prev.mesh, values)


def linear_iteration(
    problem: FeProblem,
    h_field: FieldP0,
    u_prev_time: FieldP0,
    u_prev_iter: FieldP0,
    L_field: FieldP0,
    phi_breve: BaseNonlinearity,
    tau: float,
) -> tuple[FieldP0, FieldP1]:
    """
    Solve (h·ũ, φ) + τ(∇w, ∇φ) = (u_prev_time, φ) together with the linearised
    cell relation between ũ and w
    :return: (ũ before clipping, w)
    """
    mesh = problem.mesh
    L = L_field.values
    h = h_field.values
    if np.any(L <= 0):
        raise ValueError("Linearisation factor must be positive on every cell")
    if np.any(h <= 0):
        raise ValueError("Growth factor 1 - tau*f must be positive on every cell")

    u_iter = u_prev_iter.values
    offset = u_iter - phi_breve.value(u_iter) / L
    scale = L * mesh.volumes
    B = problem.mixed_mass
    reduced = B @ sp.diags(h / scale) @ B.T + tau * problem.stiffness.full
    system = SparseSpd(reduced.tocsr(), problem.w_free)
    rhs = B @ (u_prev_time.values - h * offset)

    w = system.expand(solve_spd(system, system.restrict(rhs), problem.solver))
    u_tilde = offset + (B.T @ w) / scale
    return FieldP0(mesh, u_tilde), FieldP1(mesh, w, dirichlet_mask=problem.w_mask())


def clip_positive(u_tilde: FieldP0) -> FieldP0:
    return FieldP0(u_tilde.mesh, np.maximum(u_tilde.values, 0.0))


def stopping_error(
    u_i: FieldP0,
    u_prev: FieldP0,
    w_i: FieldP1,
    w_prev: FieldP1,
    L_field: FieldP0,
    tau: float,
) -> float:
    """
    ∫ L·|u_i − u_prev|² + τ·‖∇(w_i − w_prev)‖², compared against the absolute tolerance
    """
    mesh = u_i.mesh
    du = u_i.values - u_prev.values
    dw = FieldP1(mesh, w_i.values - w_prev.values)
    weighted = float(np.sum(L_field.values * du**2 * mesh.volumes))
    return weighted + tau * gradient_norm_squared(dw)


def initial_w_guess(
    problem: FeProblem, phi_breve: BaseNonlinearity, u0: FieldP0
) -> FieldP1:
    """
    Lumped projection of Φ̆(u0) onto P1, zero on the Dirichlet vertices of w
    """
    projected = problem.mixed_mass @ phi_breve.value(u0.values)
    values = np.divide(
        projected,
        problem.lumped_mass,
        out=np.zeros_like(projected),
        where=problem.lumped_mass > 0,
    )
    values[problem.w_dirichlet] = 0.0
    return FieldP1(problem.mesh, values, dirichlet_mask=problem.w_mask())


def time_discrete_residual(
    problem: FeProblem,
    h_field: FieldP0,
    u_prev_time: FieldP0,
    u_n: FieldP0,
    w_n: FieldP1,
    phi_breve: BaseNonlinearity,
    L_field: FieldP0,
    tau: float,
) -> float:
    """
    Residual of (u_n, w_n) in the time-discrete system, measured in the units of
    the stopping functional: the diffusion equation in the dual norm of τK + M,
    and the cell averages of w against Φ̆(u_n) weighted by 1/L
    """
    mesh = problem.mesh
    B = problem.mixed_mass
    stiffness = problem.stiffness
    equation = (
        B @ (h_field.values * u_n.values)
        + tau * (stiffness.full @ w_n.values)
        - B @ u_prev_time.values
    )
    norm_operator = SparseSpd(
        (tau * stiffness.full + problem.mass.full).tocsr(), problem.w_free
    )
    r = norm_operator.restrict(equation)
    dual = float(r @ solve_spd(norm_operator, r, problem.solver))
    averages = (B.T @ w_n.values) / mesh.volumes
    mismatch = averages - phi_breve.value(u_n.values)
    return dual + float(np.sum(mesh.volumes * mismatch**2 / L_field.values))
