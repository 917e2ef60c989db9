from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from infra.mesh import Mesh, MeshError


@dataclass(frozen=True, eq=False)
class FieldP0:
    """
    Piecewise constant field, one value per cell
    """

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.mesh.n_cells:
            raise MeshError(
                f"P0 field has {values.shape[0]} values for {self.mesh.n_cells} cells"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "FieldP0":
        return cls(mesh, np.full(mesh.n_cells, float(value)))

    @classmethod
    def from_function(cls, mesh: Mesh, func: Callable) -> "FieldP0":
        """
        Sample func at cell centroids
        :param func: maps points (n, dim) to values (n,)
        """
        return cls(mesh, func(mesh.centroids))

    def at_quadrature(self) -> np.ndarray:
        bary, _ = self.mesh.quadrature()
        return np.repeat(self.values[:, None], bary.shape[0], axis=1)

    def at_centroids(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True, eq=False)
class FieldP1:
    """
    Continuous piecewise linear field, one value per vertex. Vertices flagged in
    dirichlet_mask carry the prescribed boundary value.
    """

    mesh: Mesh
    values: np.ndarray
    dirichlet_mask: Optional[np.ndarray] = None
    boundary_values: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.mesh.n_vertices:
            raise MeshError(
                f"P1 field has {values.shape[0]} values for {self.mesh.n_vertices} vertices"
            )
        object.__setattr__(self, "values", values)
        if self.dirichlet_mask is not None:
            mask = np.asarray(self.dirichlet_mask, dtype=bool)
            prescribed = (
                np.zeros_like(values)
                if self.boundary_values is None
                else np.broadcast_to(
                    np.asarray(self.boundary_values, dtype=float), values.shape
                )
            )
            if np.any(values[mask] != prescribed[mask]):
                raise MeshError("P1 field violates its Dirichlet values")
            object.__setattr__(self, "dirichlet_mask", mask)
            object.__setattr__(self, "boundary_values", prescribed)

    @classmethod
    def zeros(cls, mesh: Mesh) -> "FieldP1":
        return cls(mesh, np.zeros(mesh.n_vertices))

    @classmethod
    def interpolate(cls, mesh: Mesh, func: Callable) -> "FieldP1":
        return cls(mesh, func(mesh.vertices))

    def at_quadrature(self) -> np.ndarray:
        bary, _ = self.mesh.quadrature()
        return self.values[self.mesh.cells] @ bary.T

    def at_centroids(self) -> np.ndarray:
        return self.values[self.mesh.cells].mean(axis=1)

    def cell_gradients(self) -> np.ndarray:
        return np.einsum("ck,ckd->cd", self.values[self.mesh.cells], self.mesh.gradients)


Field = Union[FieldP0, FieldP1]
Weight = Union[FieldP0, float, None]


def _weight_values(mesh: Mesh, weight: Weight) -> np.ndarray:
    if weight is None:
        return np.ones(mesh.n_cells)
    if isinstance(weight, FieldP0):
        if weight.mesh is not mesh:
            raise MeshError("Weight field lives on a different mesh")
        return weight.values
    return np.full(mesh.n_cells, float(weight))


def _integrate_squared(mesh: Mesh, values_at_q: np.ndarray, weight: Weight) -> float:
    _, q_weights = mesh.quadrature()
    per_cell = (values_at_q**2) @ q_weights
    return float(np.sum(_weight_values(mesh, weight) * mesh.volumes * per_cell))


def l2_norm(field: Field, weight: Weight = None) -> float:
    """
    (Weighted) L² norm, exact for P0 and for P1 by Gauss quadrature
    :param field: P0 or P1 field
    :param weight: optional cell-wise weight
    """
    return float(np.sqrt(_integrate_squared(field.mesh, field.at_quadrature(), weight)))


def l2_distance(first: Field, second: Field, weight: Weight = None) -> float:
    if first.mesh is not second.mesh:
        raise MeshError("Fields live on different meshes")
    diff = first.at_quadrature() - second.at_quadrature()
    return float(np.sqrt(_integrate_squared(first.mesh, diff, weight)))


def l2_error(field: Field, func: Callable, weight: Weight = None) -> float:
    """
    L² distance between a field and an analytic function
    :param func: maps points (..., dim) to values (...)
    """
    mesh = field.mesh
    diff = field.at_quadrature() - func(mesh.quadrature_points())
    return float(np.sqrt(_integrate_squared(mesh, diff, weight)))


def gradient_norm_squared(field: FieldP1) -> float:
    grads = field.cell_gradients()
    return float(np.sum(field.mesh.volumes * np.sum(grads**2, axis=1)))
