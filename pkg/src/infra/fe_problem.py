import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Union

import numpy as np

from infra.assembly import (
    SparseSpd,
    assemble_mass_p1,
    assemble_mixed_mass,
    assemble_stiffness_p1,
)
from infra.linear_solver import SOLVER_METHODS
from infra.mesh import Mesh, MeshError

logger = logging.getLogger(__name__)


class BoundaryKind(Enum):
    DIRICHLET_ZERO = "dirichlet_zero"
    DIRICHLET_VALUE = "dirichlet_value"
    NEUMANN_ZERO = "neumann_zero"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: BoundaryKind
    value: float = 0.0

    @classmethod
    def parse(cls, raw: Union[str, float, int, dict]) -> "BoundaryCondition":
        """
        "dirichlet_zero", "neumann_zero", a number (Dirichlet value), or
        {"dirichlet_value": c}
        """
        if isinstance(raw, bool):
            raise ValueError(f"Invalid boundary condition: {raw}")
        if isinstance(raw, (int, float)):
            return cls(BoundaryKind.DIRICHLET_VALUE, float(raw))
        if isinstance(raw, dict) and set(raw) == {"dirichlet_value"}:
            return cls(BoundaryKind.DIRICHLET_VALUE, float(raw["dirichlet_value"]))
        if isinstance(raw, str):
            return cls(BoundaryKind(raw))
        raise ValueError(f"Invalid boundary condition: {raw}")

    def is_dirichlet(self) -> bool:
        return self.kind != BoundaryKind.NEUMANN_ZERO

    def to_raw(self):
        if self.kind == BoundaryKind.DIRICHLET_VALUE:
            return self.value
        return self.kind.value


@dataclass(frozen=True)
class BoundarySpec:
    """
    Per-variable, per-segment boundary conditions. Segments not listed fall back
    to the "all" entry, then to homogeneous Dirichlet for u and homogeneous
    Neumann for v.
    """

    u: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        for segment, condition in self.u.items():
            if condition.kind == BoundaryKind.DIRICHLET_VALUE:
                raise ValueError(
                    f"u boundary segment '{segment}' must be dirichlet_zero or neumann_zero"
                )

    @classmethod
    def from_dict(cls, raw: dict) -> "BoundarySpec":
        unknown = set(raw) - {"u", "v"}
        if unknown:
            raise ValueError(f"Unknown boundary variable: {sorted(unknown)[0]}")
        return cls(
            u={k: BoundaryCondition.parse(c) for k, c in raw.get("u", {}).items()},
            v={k: BoundaryCondition.parse(c) for k, c in raw.get("v", {}).items()},
        )

    def to_dict(self) -> dict:
        return {
            "u": {k: c.to_raw() for k, c in self.u.items()},
            "v": {k: c.to_raw() for k, c in self.v.items()},
        }

    @staticmethod
    def _condition(
        conditions: dict, segment: str, default: BoundaryCondition
    ) -> BoundaryCondition:
        return conditions.get(segment, conditions.get("all", default))

    def u_condition(self, segment: str) -> BoundaryCondition:
        return self._condition(
            self.u, segment, BoundaryCondition(BoundaryKind.DIRICHLET_ZERO)
        )

    def v_condition(self, segment: str) -> BoundaryCondition:
        return self._condition(
            self.v, segment, BoundaryCondition(BoundaryKind.NEUMANN_ZERO)
        )

    def validate_segments(self, mesh: Mesh):
        known = set(mesh.boundary_tags) | {"all"}
        for segment in list(self.u) + list(self.v):
            if segment not in known:
                raise MeshError(
                    f"Boundary segment '{segment}' does not exist on a {mesh.dim}D mesh"
                )


class FeProblem:
    """
    One spatial discretisation: mesh, boundary description, Dirichlet vertex sets
    and the operators that do not change between time steps.
    """

    def __init__(self, mesh: Mesh, boundary: BoundarySpec, solver: str = "direct"):
        if solver not in SOLVER_METHODS:
            raise ValueError(f"Unknown linear solver method: {solver}")
        boundary.validate_segments(mesh)
        self.mesh = mesh
        self.boundary = boundary
        self.solver = solver
        self.w_dirichlet = self._dirichlet_vertices(boundary.u_condition)
        self.v_dirichlet_values = self._v_boundary_values()
        self.v_dirichlet = np.flatnonzero(~np.isnan(self.v_dirichlet_values))
        self.w_free = np.setdiff1d(np.arange(mesh.n_vertices), self.w_dirichlet)
        self.v_free = np.setdiff1d(np.arange(mesh.n_vertices), self.v_dirichlet)
        logger.debug(
            f"Problem on {mesh.n_cells} cells: {self.w_free.size} free w unknowns, "
            f"{self.v_dirichlet.size} Dirichlet v vertices"
        )

    def _dirichlet_vertices(self, condition_of) -> np.ndarray:
        segments = [
            s for s in self.mesh.boundary_tags if condition_of(s).is_dirichlet()
        ]
        return self.mesh.boundary_vertices(segments)

    def _v_boundary_values(self) -> np.ndarray:
        # NaN marks vertices without a Dirichlet value; corners take the later segment
        values = np.full(self.mesh.n_vertices, np.nan)
        for segment, vertices in self.mesh.boundary_tags.items():
            condition = self.boundary.v_condition(segment)
            if condition.is_dirichlet():
                values[vertices] = condition.value
        return values

    @cached_property
    def stiffness(self) -> SparseSpd:
        """
        :return: unit-weight stiffness on the free unknowns of w
        """
        return assemble_stiffness_p1(self.mesh, 1.0, free=self.w_free)

    @cached_property
    def mass(self) -> SparseSpd:
        return assemble_mass_p1(self.mesh, free=self.w_free)

    @cached_property
    def mixed_mass(self):
        return assemble_mixed_mass(self.mesh, 1.0)

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        return np.asarray(self.mixed_mass.sum(axis=1)).ravel()

    def v_fixed_values(self) -> np.ndarray:
        return np.nan_to_num(self.v_dirichlet_values, nan=0.0)

    def v_mask(self) -> np.ndarray:
        mask = np.zeros(self.mesh.n_vertices, dtype=bool)
        mask[self.v_dirichlet] = True
        return mask

    def w_mask(self) -> np.ndarray:
        mask = np.zeros(self.mesh.n_vertices, dtype=bool)
        mask[self.w_dirichlet] = True
        return mask
