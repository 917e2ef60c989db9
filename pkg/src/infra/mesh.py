import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

_GAUSS_1D = (
    np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)]),
    np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]),
)
_GAUSS_2D = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.array([1 / 3, 1 / 3, 1 / 3]),
)


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Simplicial mesh of an interval or a rectangle.

    `h` is the grid spacing requested from the structured generator, while
    `diameter` is the largest cell diameter (the triangle hypotenuse in 2D).
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_tags: dict
    h: float
    bounds: tuple

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @cached_property
    def _jacobians(self) -> np.ndarray:
        corners = self.vertices[self.cells]
        return np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.abs(np.linalg.det(self._jacobians)) / math.factorial(self.dim)

    @cached_property
    def gradients(self) -> np.ndarray:
        """
        :return: array (n_cells, dim + 1, dim) of the constant hat-function gradients per cell
        """
        inverse = np.linalg.inv(self._jacobians)
        grads = np.empty((self.n_cells, self.dim + 1, self.dim))
        grads[:, 1:, :] = inverse
        grads[:, 0, :] = -inverse.sum(axis=1)
        return grads

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def diameter(self) -> float:
        corners = self.vertices[self.cells]
        diffs = corners[:, :, None, :] - corners[:, None, :, :]
        return float(np.sqrt((diffs**2).sum(axis=-1)).max())

    @property
    def domain_diameter(self) -> float:
        return float(math.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounds)))

    def boundary_vertices(self, labels: Sequence[str]) -> np.ndarray:
        selected = [self.boundary_tags[label] for label in labels]
        if not selected:
            return np.array([], dtype=int)
        return np.unique(np.concatenate(selected))

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """
        :return: barycentric points (n_q, dim + 1) and reference weights summing to one
        """
        if self.dim == 1:
            xi, weights = _GAUSS_1D
            return np.stack([1.0 - xi, xi], axis=1), weights
        return _GAUSS_2D

    def quadrature_points(self) -> np.ndarray:
        bary, _ = self.quadrature()
        return np.einsum("qk,ckd->cqd", bary, self.vertices[self.cells])


def _cell_count(extent: float, h_target: float) -> int:
    ratio = extent / h_target
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * ratio:
        return int(nearest)
    return max(1, math.ceil(ratio))


def _normalize_domain(domain) -> tuple:
    arr = np.asarray(domain, dtype=float)
    if arr.shape == (2,):
        return ((float(arr[0]), float(arr[1])),)
    if arr.shape == (2, 2):
        return tuple((float(lo), float(hi)) for lo, hi in arr)
    raise MeshError(f"Domain must be an interval or a rectangle, got {domain}")


def build_mesh(domain, h_target: float) -> Mesh:
    """
    Uniform mesh of an interval (a, b) or a rectangle ((x0, x1), (y0, y1))
    :param domain: interval or rectangle bounds
    :param h_target: requested grid spacing, the actual spacing does not exceed it
    :return: mesh with boundary vertices tagged left/right (and bottom/top in 2D)
    """
    if not h_target > 0:
        raise MeshError(f"Mesh size must be positive, got {h_target}")
    bounds = _normalize_domain(domain)
    for lo, hi in bounds:
        if not hi > lo:
            raise MeshError(f"Non-positive extent in domain {bounds}")
    counts = [_cell_count(hi - lo, h_target) for lo, hi in bounds]
    axes = [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(bounds, counts)]
    spacing = max((hi - lo) / n for (lo, hi), n in zip(bounds, counts))

    if len(bounds) == 1:
        (n,) = counts
        vertices = axes[0][:, None]
        cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
        tags = {"left": np.array([0]), "right": np.array([n])}
    else:
        nx, ny = counts
        xx, yy = np.meshgrid(axes[0], axes[1])
        vertices = np.stack([xx.ravel(), yy.ravel()], axis=1)
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        v00 = (i + j * (nx + 1)).ravel()
        v10, v01 = v00 + 1, v00 + nx + 1
        v11 = v01 + 1
        cells = np.concatenate(
            [np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)]
        )
        index = np.arange(vertices.shape[0]).reshape(ny + 1, nx + 1)
        tags = {
            "left": index[:, 0],
            "right": index[:, -1],
            "bottom": index[0, :],
            "top": index[-1, :],
        }
    mesh = Mesh(
        dim=len(bounds),
        vertices=vertices,
        cells=cells.astype(int),
        boundary_tags=tags,
        h=spacing,
        bounds=bounds,
    )
    if np.any(mesh.volumes <= 0):
        raise MeshError("Mesh contains cells with non-positive measure")
    logger.debug(f"Built {mesh.dim}D mesh: {mesh.n_cells} cells, h={mesh.h}")
    return mesh
