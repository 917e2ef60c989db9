from typing import Callable

import numpy as np

from benchmark_utils import BarenblattParams, barenblatt, exact_modified_pme
from infra.fe_problem import FeProblem
from infra.fields import Field, FieldP0, FieldP1
from model_system import ModelSystem

SUPPORT_MARGIN = 0.2

INITIAL_CONDITION_KEYS = {
    "barenblatt": {"m", "beta", "C", "t0"},
    "hemispheres": {"height", "radius", "x1", "x2"},
    "zero": set(),
    "sine": {"amplitude"},
}
COMMON_KEYS = {"type", "v0"}


def barenblatt_params(ic: dict, model_params: dict, bounds: tuple) -> BarenblattParams:
    """
    Resolve the Barenblatt descriptor; without C, the support at t0 keeps a
    distance of SUPPORT_MARGIN·|Ω| from the boundary (profile centred at the origin)
    """
    m = ic.get("m") if ic.get("m") is not None else model_params.get("m", 4.0)
    beta = ic.get("beta")
    if beta is None:
        beta = model_params.get("beta_reaction", 0.0)
    dim = len(bounds)
    if ic.get("C") is not None:
        return BarenblattParams(m, dim, ic["C"], beta)
    radius = min(min(-lo, hi) - SUPPORT_MARGIN * (hi - lo) for lo, hi in bounds)
    if radius <= 0:
        raise ValueError(
            f"Domain {bounds} leaves no room for a Barenblatt support around the origin"
        )
    return BarenblattParams.with_support(m, dim, radius, ic["t0"], beta)


def _hemispheres(ic: dict, bounds: tuple) -> Callable:
    height, radius = ic["height"], ic["radius"]
    centers = [ic["x1"], ic["x2"]]
    y_mid = 0.5 * sum(bounds[1]) if len(bounds) > 1 else None

    def profile(x: np.ndarray) -> np.ndarray:
        total = np.zeros(x.shape[0])
        for c in centers:
            squared = (x[:, 0] - c) ** 2
            if y_mid is not None:
                squared = squared + (x[:, 1] - y_mid) ** 2
            total += np.sqrt(np.maximum(radius**2 - squared, 0.0))
        return height / radius * total

    return profile


def initial_density(ic: dict, model_params: dict, problem: FeProblem) -> FieldP0:
    mesh = problem.mesh
    kind = ic["type"]
    if kind == "barenblatt":
        p = barenblatt_params(ic, model_params, mesh.bounds)
        t0 = ic["t0"]
        if p.beta == 0:
            return FieldP0.from_function(mesh, lambda x: barenblatt(x, t0, p))
        return FieldP0.from_function(mesh, lambda x: exact_modified_pme(x, t0, p))
    if kind == "hemispheres":
        return FieldP0.from_function(mesh, _hemispheres(ic, mesh.bounds))
    if kind == "zero":
        return FieldP0.constant(mesh, 0.0)
    if kind == "sine":
        def sine(x):
            values = np.full(x.shape[0], float(ic["amplitude"]))
            for k, (lo, hi) in enumerate(mesh.bounds):
                values *= np.sin(np.pi * (x[:, k] - lo) / (hi - lo))
            return values

        return FieldP0.from_function(mesh, sine)
    raise ValueError(f"Unsupported initial condition type: {kind}")


def initial_substrate(ic: dict, model: ModelSystem, problem: FeProblem) -> Field:
    """
    Constant substrate v0, P1 with the Dirichlet values imposed when mu = 1, P0 otherwise
    """
    mesh = problem.mesh
    value = float(ic.get("v0", 0.0))
    if model.mu == 1:
        values = np.full(mesh.n_vertices, value)
        fixed = problem.v_fixed_values()
        values[problem.v_dirichlet] = fixed[problem.v_dirichlet]
        return FieldP1(
            mesh, values, dirichlet_mask=problem.v_mask(), boundary_values=fixed
        )
    return FieldP0.constant(mesh, value)
