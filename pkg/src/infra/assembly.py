from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from infra.fields import FieldP0
from infra.mesh import Mesh


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseSpd:
    """
    Symmetric sparse operator over all vertices together with the set of free
    (non-Dirichlet) unknowns it is solved on.
    """

    full: sp.csr_matrix
    free: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "SparseSpd":
        matrix = sp.csr_matrix(matrix)
        return cls(matrix, np.arange(matrix.shape[0]))

    @cached_property
    def fixed(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.full.shape[0]), self.free)

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return self.full[self.free][:, self.free].tocsr()

    @cached_property
    def coupling(self) -> sp.csr_matrix:
        return self.full[self.free][:, self.fixed].tocsr()

    def with_free(self, free: np.ndarray) -> "SparseSpd":
        return SparseSpd(self.full, np.asarray(free, dtype=int))

    def restrict(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(vector, dtype=float)[self.free]

    def lift(self, fixed_values: np.ndarray) -> np.ndarray:
        """
        :param fixed_values: full-length vector whose fixed entries hold the boundary data
        :return: contribution of the boundary data to the free equations
        """
        if self.fixed.size == 0:
            return np.zeros(self.free.size)
        return self.coupling @ np.asarray(fixed_values, dtype=float)[self.fixed]

    def expand(
        self, x_free: np.ndarray, fixed_values: Optional[np.ndarray] = None
    ) -> np.ndarray:
        out = (
            np.zeros(self.full.shape[0])
            if fixed_values is None
            else np.array(fixed_values, dtype=float)
        )
        out[self.free] = x_free
        return out


def _cell_weights(mesh: Mesh, weight: Union[FieldP0, float, np.ndarray]) -> np.ndarray:
    if isinstance(weight, FieldP0):
        values = weight.values
    else:
        values = np.broadcast_to(np.asarray(weight, dtype=float), (mesh.n_cells,))
    return values


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    n_local = mesh.dim + 1
    rows = np.repeat(mesh.cells, n_local, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, n_local)).ravel()
    return sp.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(mesh.n_vertices, mesh.n_vertices)
    ).tocsr()


def _free_or_all(mesh: Mesh, free: Optional[np.ndarray]) -> np.ndarray:
    return np.arange(mesh.n_vertices) if free is None else np.asarray(free, dtype=int)


def assemble_stiffness_p1(
    mesh: Mesh,
    weight: Union[FieldP0, float, np.ndarray] = 1.0,
    free: Optional[np.ndarray] = None,
) -> SparseSpd:
    """
    K[j, k] = Σ_c weight_c ∫_c ∇φ_j·∇φ_k with cell-constant P1 gradients
    :param mesh: mesh
    :param weight: positive cell-wise coefficient
    :param free: indices of the unknowns that are not eliminated by Dirichlet data
    """
    weights = _cell_weights(mesh, weight)
    if np.any(weights <= 0):
        raise AssemblyError(
            f"Stiffness weight must be positive, minimum is {float(weights.min())}"
        )
    grads = mesh.gradients
    local = np.einsum("cjd,ckd->cjk", grads, grads) * (weights * mesh.volumes)[
        :, None, None
    ]
    return SparseSpd(_scatter(mesh, local), _free_or_all(mesh, free))


def assemble_mass_p1(mesh: Mesh, free: Optional[np.ndarray] = None) -> SparseSpd:
    """
    Consistent P1 mass matrix, element matrix |c|/((d+1)(d+2))·(1 + δ_jk)
    """
    n_local = mesh.dim + 1
    pattern = np.ones((n_local, n_local)) + np.eye(n_local)
    scale = mesh.volumes / ((mesh.dim + 1) * (mesh.dim + 2))
    local = scale[:, None, None] * pattern[None, :, :]
    return SparseSpd(_scatter(mesh, local), _free_or_all(mesh, free))


def assemble_mixed_mass(
    mesh: Mesh, coeff: Union[FieldP0, float, np.ndarray] = 1.0
) -> sp.csr_matrix:
    """
    Rectangular map from P0 to the P1 dual, B[j, c] = coeff_c·|c|/(dim + 1)
    :return: sparse matrix (n_vertices, n_cells)
    """
    values = _cell_weights(mesh, coeff) * mesh.volumes / (mesh.dim + 1)
    n_local = mesh.dim + 1
    rows = mesh.cells.ravel()
    cols = np.repeat(np.arange(mesh.n_cells), n_local)
    data = np.repeat(values, n_local)
    return sp.coo_matrix(
        (data, (rows, cols)), shape=(mesh.n_vertices, mesh.n_cells)
    ).tocsr()
