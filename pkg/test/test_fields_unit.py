import math

import numpy as np
import pytest

from infra.fields import (
    FieldP0,
    FieldP1,
    gradient_norm_squared,
    l2_distance,
    l2_error,
    l2_norm,
)
from infra.mesh import MeshError, build_mesh


@pytest.fixture
def interval():
    return build_mesh([0.0, 1.0], 0.5)


def _hat(mesh, vertex: int) -> FieldP1:
    values = np.zeros(mesh.n_vertices)
    values[vertex] = 1.0
    return FieldP1(mesh, values)


def test_p0_norms(interval):
    assert l2_norm(FieldP0.constant(interval, 2.0)) == pytest.approx(2.0)
    assert l2_norm(FieldP0(interval, [1.0, 3.0])) == pytest.approx(math.sqrt(5.0))
    weighted = l2_norm(FieldP0.constant(interval, 1.0), FieldP0(interval, [4.0, 0.0]))
    assert weighted == pytest.approx(math.sqrt(2.0))


def test_p1_hat_norms(interval):
    assert l2_norm(_hat(interval, 1)) ** 2 == pytest.approx(1.0 / 3.0)
    assert l2_norm(_hat(interval, 0)) ** 2 == pytest.approx(1.0 / 6.0)
    assert gradient_norm_squared(_hat(interval, 1)) == pytest.approx(4.0)
    assert gradient_norm_squared(_hat(interval, 2)) == pytest.approx(2.0)


def test_interpolated_linear_function():
    mesh = build_mesh([[0.0, 1.0], [0.0, 1.0]], 0.25)
    field = FieldP1.interpolate(mesh, lambda x: x[:, 0] + 2 * x[:, 1])
    assert gradient_norm_squared(field) == pytest.approx(5.0)
    assert field.cell_gradients() == pytest.approx(np.tile([1.0, 2.0], (mesh.n_cells, 1)))
    assert l2_error(field, lambda x: x[..., 0] + 2 * x[..., 1]) == pytest.approx(0.0, abs=1e-14)
    assert field.at_centroids() == pytest.approx(mesh.centroids @ np.array([1.0, 2.0]))


def test_distance_between_fields(interval):
    first = FieldP0(interval, [1.0, 2.0])
    second = FieldP0(interval, [1.0, 0.0])
    assert l2_distance(first, second) == pytest.approx(math.sqrt(2.0))
    other = build_mesh([0.0, 1.0], 0.5)
    with pytest.raises(MeshError, match="different meshes"):
        l2_distance(first, FieldP0(other, [1.0, 0.0]))


def test_p0_sampling(interval):
    field = FieldP0.from_function(interval, lambda x: x[:, 0])
    assert field.values.tolist() == [0.25, 0.75]
    assert field.at_quadrature().shape == (2, 3)
    assert l2_error(field, lambda x: x[..., 0]) ** 2 == pytest.approx(2 * 0.5**3 / 12)


def test_size_mismatch_is_rejected(interval):
    with pytest.raises(MeshError, match="3 values for 2 cells"):
        FieldP0(interval, [1.0, 2.0, 3.0])
    with pytest.raises(MeshError, match="vertices"):
        FieldP1(interval, [1.0])


def test_dirichlet_values_are_enforced(interval):
    mask = np.array([True, False, False])
    FieldP1(interval, [1.0, 5.0, 0.0], dirichlet_mask=mask, boundary_values=1.0)
    FieldP1(interval, [0.0, 5.0, 7.0], dirichlet_mask=mask)
    with pytest.raises(MeshError, match="Dirichlet"):
        FieldP1(interval, [0.5, 5.0, 0.0], dirichlet_mask=mask)


def test_zeros(interval):
    assert FieldP1.zeros(interval).values.tolist() == [0.0, 0.0, 0.0]
    assert FieldP0.constant(interval, 0.0).at_centroids().tolist() == [0.0, 0.0]
