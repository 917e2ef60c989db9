import numpy as np
import pytest

from infra.assembly import (
    AssemblyError,
    SparseSpd,
    assemble_mass_p1,
    assemble_mixed_mass,
    assemble_stiffness_p1,
)
from infra.fields import FieldP0
from infra.mesh import build_mesh


@pytest.fixture
def interval():
    return build_mesh([0.0, 1.0], 0.5)


@pytest.fixture
def square():
    return build_mesh([[0.0, 1.0], [0.0, 1.0]], 1.0)


def test_stiffness_two_intervals(interval):
    expected = np.array([[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]])
    stiffness = assemble_stiffness_p1(interval)
    assert np.abs(stiffness.full.toarray() - expected).max() <= 1e-12


def test_mass_two_intervals(interval):
    expected = np.array([[2.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 2.0]]) / 12.0
    assert np.abs(assemble_mass_p1(interval).full.toarray() - expected).max() <= 1e-12


def test_mixed_mass_two_intervals(interval):
    expected = np.array([[0.25, 0.0], [0.25, 0.25], [0.0, 0.25]])
    assert np.abs(assemble_mixed_mass(interval).toarray() - expected).max() <= 1e-12
    weighted = assemble_mixed_mass(interval, FieldP0(interval, [2.0, 4.0])).toarray()
    assert weighted == pytest.approx(np.array([[0.5, 0.0], [0.5, 1.0], [0.0, 1.0]]))


def test_stiffness_two_triangles(square):
    # vertices: 0=(0,0), 1=(1,0), 2=(0,1), 3=(1,1); cells (0,1,3) and (0,3,2)
    expected = np.array(
        [
            [1.0, -0.5, -0.5, 0.0],
            [-0.5, 1.0, 0.0, -0.5],
            [-0.5, 0.0, 1.0, -0.5],
            [0.0, -0.5, -0.5, 1.0],
        ]
    )
    assert np.abs(assemble_stiffness_p1(square).full.toarray() - expected).max() <= 1e-12
    doubled = assemble_stiffness_p1(square, 2.0).full.toarray()
    assert np.abs(doubled - 2 * expected).max() <= 1e-12


def test_mass_two_triangles(square):
    expected = np.array(
        [
            [4.0, 1.0, 1.0, 2.0],
            [1.0, 2.0, 0.0, 1.0],
            [1.0, 0.0, 2.0, 1.0],
            [2.0, 1.0, 1.0, 4.0],
        ]
    ) / 24.0
    assert np.abs(assemble_mass_p1(square).full.toarray() - expected).max() <= 1e-12


def test_operators_are_symmetric_and_consistent():
    mesh = build_mesh([[0.0, 1.0], [0.0, 2.0]], 0.25)
    stiffness = assemble_stiffness_p1(mesh).full
    mass = assemble_mass_p1(mesh).full
    assert abs(stiffness - stiffness.T).max() <= 1e-12
    assert abs(mass - mass.T).max() <= 1e-12
    assert np.abs(stiffness @ np.ones(mesh.n_vertices)).max() <= 1e-12
    assert mass.sum() == pytest.approx(2.0)
    column_sums = np.asarray(assemble_mixed_mass(mesh).sum(axis=0)).ravel()
    assert column_sums == pytest.approx(mesh.volumes)


def test_non_positive_weight_is_rejected(interval):
    with pytest.raises(AssemblyError, match="positive"):
        assemble_stiffness_p1(interval, FieldP0(interval, [1.0, 0.0]))
    with pytest.raises(AssemblyError):
        assemble_stiffness_p1(interval, -1.0)


def test_free_unknowns(interval):
    system = assemble_stiffness_p1(interval, free=np.array([1]))
    assert system.fixed.tolist() == [0, 2]
    assert system.matrix.toarray().tolist() == [[4.0]]
    assert system.restrict([1.0, 2.0, 3.0]).tolist() == [2.0]
    assert system.lift(np.array([1.0, 0.0, 3.0])).tolist() == [-8.0]
    assert system.expand(np.array([5.0]), np.array([1.0, 0.0, 3.0])).tolist() == [1.0, 5.0, 3.0]
    assert system.expand(np.array([5.0])).tolist() == [0.0, 5.0, 0.0]


def test_sparse_spd_from_matrix():
    system = SparseSpd.from_matrix(np.eye(3))
    assert system.free.tolist() == [0, 1, 2]
    assert system.fixed.size == 0
    assert system.lift(np.zeros(3)).tolist() == [0.0, 0.0, 0.0]
    assert system.with_free(np.array([0, 2])).matrix.shape == (2, 2)
