# This file is part of KerBil.
#
# KerBil is free software: you can redistribute it and/or modify it under the terms of
# the GNU General Public License as published by the Free Software Foundation, either
# version 3 of the License, or (at your option) any later version.
#
# KerBil is distributed in the hope that it will be useful, but WITHOUT ANY WARRANTY;
# without even the implied warranty of MERCHANTABILITY or FITNESS FOR A PARTICULAR
# PURPOSE.  See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with KerBil.
# If not, see <http://www.gnu.org/licenses/>.
#
# Copyright 2025-2026 the KerBil developers.
"""
Tests of the generic numerical algorithms.
"""
from __future__ import absolute_import, division, print_function

import numpy
import pytest

from kerbil.algorithms import generic_algorithms
from kerbil.utils import exceptions, named_tuples


def _spd_matrix(rng, size):
    factor = rng.standard_normal((size, size))
    return factor.dot(factor.T) + size * numpy.eye(size)


def test_cholesky_solve_matches_dense_solve(rng):
    matrix = _spd_matrix(rng, 6)
    rhs = rng.standard_normal((6, 2))
    factor = generic_algorithms.cholesky_nugget(matrix, 1e-3)
    solution = generic_algorithms.solve_chol(factor, rhs)
    expected = numpy.linalg.solve(matrix + 1e-3 * numpy.eye(6), rhs)
    numpy.testing.assert_allclose(solution, expected, rtol=1e-10, atol=1e-12)


def test_nugget_rescues_a_singular_matrix():
    vector = numpy.array([[1.0], [2.0], [3.0]])
    singular = vector.dot(vector.T)
    with pytest.raises(exceptions.KerbilNotPositiveDefiniteError):
        generic_algorithms.cholesky_nugget(-singular, 0.0)
    factor = generic_algorithms.cholesky_nugget(singular, 1e-6)
    assert numpy.all(numpy.diag(factor.lower) > 0)


@pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
def test_nugget_does_not_scale_with_the_matrix(scale, rng):
    matrix = scale * _spd_matrix(rng, 4)
    factor = generic_algorithms.cholesky_nugget(matrix, 0.5)
    assert factor.nugget == 0.5
    numpy.testing.assert_allclose(
        factor.lower.dot(factor.lower.T),
        matrix + 0.5 * numpy.eye(4),
        rtol=1e-10,
        atol=1e-10 * scale,
    )


def test_cholesky_rejects_non_finite_entries():
    with pytest.raises(exceptions.KerbilNotPositiveDefiniteError):
        generic_algorithms.cholesky_nugget(numpy.array([[numpy.nan]]), 1.0)


def test_solve_chol_checks_sizes(rng):
    factor = generic_algorithms.cholesky_nugget(_spd_matrix(rng, 3), 0.0)
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        generic_algorithms.solve_chol(factor, numpy.ones(4))


def test_kkt_solution_satisfies_constraints_and_stationarity(rng):
    hessian = _spd_matrix(rng, 5)
    constraints = rng.standard_normal((2, 5))
    gradient = rng.standard_normal(5)
    values = rng.standard_normal(2)
    primal, multipliers = generic_algorithms.solve_kkt(
        hessian, constraints, gradient, values
    )
    numpy.testing.assert_allclose(constraints.dot(primal), values, atol=1e-10)
    numpy.testing.assert_allclose(
        hessian.dot(primal) + gradient + constraints.T.dot(multipliers),
        numpy.zeros(5),
        atol=1e-9,
    )


def test_kkt_rejects_rank_deficient_constraints():
    constraints = numpy.array([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(exceptions.KerbilSingularKktError):
        generic_algorithms.solve_kkt(
            numpy.eye(2), constraints, numpy.zeros(2), numpy.ones(2)
        )


def test_kkt_checks_block_shapes():
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        generic_algorithms.solve_kkt(
            numpy.eye(2), numpy.ones((1, 3)), numpy.zeros(2), numpy.ones(1)
        )


def test_generators_are_reproducible():
    first = generic_algorithms.make_rng(7).standard_normal(5)
    second = generic_algorithms.make_rng(7).standard_normal(5)
    assert numpy.array_equal(first, second)
    spawned = [rng.uniform() for rng in generic_algorithms.spawn_rngs(7, 3)]
    assert spawned == [rng.uniform() for rng in generic_algorithms.spawn_rngs(7, 3)]
    assert len(set(spawned)) == 3


def test_derived_seeds_depend_on_the_index():
    first = generic_algorithms.make_rng(generic_algorithms.derive_seed(5, 0)).uniform()
    again = generic_algorithms.make_rng(generic_algorithms.derive_seed(5, 0)).uniform()
    other = generic_algorithms.make_rng(generic_algorithms.derive_seed(5, 1)).uniform()
    assert first == again
    assert first != other


def test_degenerate_box_is_rejected():
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        generic_algorithms.Box((0.0, 1.0), (1.0, 1.0))


def test_boundary_samples_lie_on_their_faces(rng):
    box = generic_algorithms.Box((0.0, -1.0), (1.0, 1.0))
    faces = (
        named_tuples.Face(axis=1, value=-1.0, tag="boundary"),
        named_tuples.Face(axis=1, value=1.0, tag="boundary"),
        named_tuples.Face(axis=0, value=0.0, tag="initial"),
    )
    region = generic_algorithms.BoundaryRegion(box, faces)
    points, indices = generic_algorithms.sample_boundary(region, 500, rng)
    assert points.shape == (500, 2)
    assert numpy.all(box.contains(points))
    for index, face in enumerate(faces):
        assert numpy.all(points[indices == index, face.axis] == face.value)
    # The initial face is as long as the two other faces together.
    share = numpy.mean(indices == 2)
    assert 0.4 < share < 0.6
    assert region.tags() == ["boundary", "initial"]


def test_uniform_samples(rng):
    box = generic_algorithms.Box((0.0, 0.0), (2.0, 1.0))
    points = generic_algorithms.sample_uniform(box, 100, rng)
    assert points.shape == (100, 2)
    assert numpy.all(box.contains(points))
    assert generic_algorithms.sample_uniform(box, 0, rng).shape == (0, 2)
    with pytest.raises(exceptions.KerbilInvalidCountsError):
        generic_algorithms.sample_uniform(box, -1, rng)


def test_cell_centered_grid_is_interior():
    box = generic_algorithms.Box((0.0, 0.0), (1.0, 1.0))
    axes, points = generic_algorithms.uniform_grid(box, 4)
    numpy.testing.assert_allclose(axes[0], [0.125, 0.375, 0.625, 0.875])
    assert points.shape == (16, 2)
    numpy.testing.assert_allclose(points[1], [0.125, 0.375])
    axes, _ = generic_algorithms.uniform_grid(box, 3, cell_centered=False)
    numpy.testing.assert_allclose(axes[1], [0.0, 0.5, 1.0])
