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
Generic algorithms.

This module contains the dense linear algebra, the factorizations and the seeded
random sampling used by all the other parts of KerBil.
"""
from __future__ import absolute_import, division, print_function

import warnings
from typing import Any, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from future.utils import raise_from
from scipy import linalg

from kerbil.utils import exceptions, named_tuples


# Relative size below which an LU pivot is considered zero.
_PIVOT_TOLERANCE = 1e-14


class CholFactor(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, lower, nugget):
        # type: (numpy.ndarray, float) -> None
        """
        Cholesky factor of a nugget-regularized symmetric matrix.

        Arguments:

            lower (numpy.ndarray): the lower triangular factor L of S + nugget * I.

            nugget (float): the nugget added to the diagonal.
        """
        self.lower = lower
        self.nugget = nugget
        self.n = lower.shape[0]


class KktFactor(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, lu_and_piv, n):
        # type: (Tuple[numpy.ndarray, numpy.ndarray], int) -> None
        """
        LU factorization of a symmetric saddle-point (KKT) matrix.

        Arguments:

            lu_and_piv (Tuple[numpy.ndarray, numpy.ndarray]): the output of
                scipy.linalg.lu_factor.

            n (int): the size of the matrix.
        """
        self.lu_and_piv = lu_and_piv
        self.n = n


def cholesky_nugget(matrix, nugget):
    # type: (numpy.ndarray, float) -> CholFactor
    """
    Cholesky factorization of S + nugget * I.

    Arguments:

        matrix (numpy.ndarray): a symmetric matrix.

        nugget (float): the non-negative value added to the diagonal.

    Returns:

        CholFactor: the lower triangular factor.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilNotPositiveDefiniteError`: if a pivot is
            not positive even after the nugget has been added.
    """
    regularized = numpy.array(matrix, dtype=numpy.float64)
    regularized[numpy.diag_indices_from(regularized)] += nugget
    if not numpy.all(numpy.isfinite(regularized)):
        raise exceptions.KerbilNotPositiveDefiniteError(
            "The matrix contains non-finite entries."
        )
    try:
        lower = linalg.cholesky(regularized, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise_from(
            exc=exceptions.KerbilNotPositiveDefiniteError(
                "Cholesky factorization failed with nugget {0}: {1}".format(nugget, exc)
            ),
            cause=exc,
        )
    if numpy.any(numpy.diag(lower) <= 0.0):
        raise exceptions.KerbilNotPositiveDefiniteError(
            "Non-positive pivot with nugget {0}.".format(nugget)
        )

    return CholFactor(lower=lower, nugget=nugget)


def solve_chol(factor, rhs):
    # type: (CholFactor, numpy.ndarray) -> numpy.ndarray
    """
    Solves (S + nugget * I) x = b with a Cholesky factor.

    Arguments:

        factor (CholFactor): the factor of S + nugget * I.

        rhs (numpy.ndarray): the right-hand side, a vector or a matrix whose columns
            are right-hand sides.

    Returns:

        numpy.ndarray: the solution, with the same shape as the right-hand side.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the size of
            the right-hand side does not match the factor.
    """
    rhs = numpy.asarray(rhs, dtype=numpy.float64)
    if rhs.shape[0] != factor.n:
        raise exceptions.KerbilDimensionMismatchError(
            "Right-hand side of size {0} for a system of size {1}.".format(
                rhs.shape[0], factor.n
            )
        )

    return linalg.cho_solve((factor.lower, True), rhs, check_finite=False)


def factor_kkt(matrix):
    # type: (numpy.ndarray) -> KktFactor
    """
    LU factorization of a saddle-point matrix.

    Arguments:

        matrix (numpy.ndarray): the square symmetric (possibly indefinite) matrix.

    Returns:

        KktFactor: the factorization.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilSingularKktError`: if the matrix is
            singular or contains non-finite entries.
    """
    matrix = numpy.asarray(matrix, dtype=numpy.float64)
    if not numpy.all(numpy.isfinite(matrix)):
        raise exceptions.KerbilSingularKktError(
            "The KKT matrix contains non-finite entries."
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu_and_piv = linalg.lu_factor(matrix, check_finite=False)
    pivots = numpy.abs(numpy.diag(lu_and_piv[0]))
    if pivots.size and pivots.min() <= _PIVOT_TOLERANCE * max(pivots.max(), 1.0):
        raise exceptions.KerbilSingularKktError(
            "The KKT matrix is singular (smallest pivot {0:.3e}).".format(pivots.min())
        )

    return KktFactor(lu_and_piv=lu_and_piv, n=matrix.shape[0])


def solve_factored_kkt(factor, rhs):
    # type: (KktFactor, numpy.ndarray) -> numpy.ndarray
    """
    Solves a saddle-point system with its LU factorization.

    Arguments:

        factor (KktFactor): the factorization.

        rhs (numpy.ndarray): a vector or a matrix whose columns are right-hand sides.

    Returns:

        numpy.ndarray: the solution.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the size of
            the right-hand side does not match the factor.
    """
    rhs = numpy.asarray(rhs, dtype=numpy.float64)
    if rhs.shape[0] != factor.n:
        raise exceptions.KerbilDimensionMismatchError(
            "Right-hand side of size {0} for a system of size {1}.".format(
                rhs.shape[0], factor.n
            )
        )

    return linalg.lu_solve(factor.lu_and_piv, rhs, check_finite=False)


def solve_kkt(hessian, constraints, gradient, constraint_values):
    # type: (numpy.ndarray, numpy.ndarray, numpy.ndarray, numpy.ndarray) -> Tuple[numpy.ndarray, numpy.ndarray]
    """
    Solves an equality-constrained quadratic program through its KKT system.

    The function solves [[H, A^T], [A, 0]] [x; y] = [-g; r], i.e. it minimizes
    x^T H x / 2 + g^T x subject to A x = r.

    Arguments:

        hessian (numpy.ndarray): the symmetric positive semi-definite matrix H,
            shape (n, n).

        constraints (numpy.ndarray): the constraint matrix A, shape (m, n).

        gradient (numpy.ndarray): the linear term g, shape (n,).

        constraint_values (numpy.ndarray): the right-hand side r, shape (m,).

    Returns:

        Tuple[numpy.ndarray, numpy.ndarray]: the primal solution x and the
        multipliers y.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the shapes
            of the blocks do not match.

        :class:`~kerbil.utils.exceptions.KerbilSingularKktError`: if the constraints
            are rank deficient.
    """
    hessian = numpy.atleast_2d(numpy.asarray(hessian, dtype=numpy.float64))
    constraints = numpy.atleast_2d(numpy.asarray(constraints, dtype=numpy.float64))
    gradient = numpy.atleast_1d(numpy.asarray(gradient, dtype=numpy.float64))
    constraint_values = numpy.atleast_1d(
        numpy.asarray(constraint_values, dtype=numpy.float64)
    )
    num_primal = hessian.shape[0]
    num_constraints = constraints.shape[0]
    if (
        hessian.shape[1] != num_primal
        or constraints.shape[1] != num_primal
        or gradient.shape[0] != num_primal
        or constraint_values.shape[0] != num_constraints
    ):
        raise exceptions.KerbilDimensionMismatchError(
            "Inconsistent KKT block shapes: H {0}, A {1}, g {2}, r {3}.".format(
                hessian.shape,
                constraints.shape,
                gradient.shape,
                constraint_values.shape,
            )
        )
    matrix = numpy.zeros((num_primal + num_constraints,) * 2)
    matrix[:num_primal, :num_primal] = 0.5 * (hessian + hessian.T)
    matrix[:num_primal, num_primal:] = constraints.T
    matrix[num_primal:, :num_primal] = constraints
    rhs = numpy.concatenate((-gradient, constraint_values))
    solution = solve_factored_kkt(factor_kkt(matrix), rhs)

    return solution[:num_primal], solution[num_primal:]


def make_rng(seed):
    # type: (Any) -> numpy.random.Generator
    """
    Creates the KerBil random generator.

    KerBil draws every random number from a Philox counter-based generator, whose
    streams are identical on all platforms.

    Arguments:

        seed (Union[int, numpy.random.SeedSequence]): the seed.

    Returns:

        numpy.random.Generator: the generator.
    """
    return numpy.random.Generator(numpy.random.Philox(seed))


def spawn_rngs(seed, count):
    # type: (int, int) -> List[numpy.random.Generator]
    """
    Creates independent random generators from one seed.

    Arguments:

        seed (int): the master seed.

        count (int): the number of generators.

    Returns:

        List[numpy.random.Generator]: the generators, always in the same order.
    """
    return [make_rng(child) for child in numpy.random.SeedSequence(seed).spawn(count)]


def derive_seed(master_seed, index):
    # type: (int, int) -> numpy.random.SeedSequence
    """
    Derives the seed of a work item from the master seed and the item index.

    Arguments:

        master_seed (int): the master seed.

        index (int): the index of the work item.

    Returns:

        numpy.random.SeedSequence: the seed of the work item.
    """
    return numpy.random.SeedSequence([int(master_seed), int(index)])


class Box(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, lower, upper):
        # type: (Sequence[float], Sequence[float]) -> None
        """
        An axis-aligned box.

        Arguments:

            lower (Sequence[float]): the lower corner.

            upper (Sequence[float]): the upper corner.
        """
        self.lower = numpy.asarray(lower, dtype=numpy.float64)
        self.upper = numpy.asarray(upper, dtype=numpy.float64)
        if self.lower.shape != self.upper.shape or numpy.any(self.upper <= self.lower):
            raise exceptions.KerbilDimensionMismatchError(
                "Degenerate box with corners {0} and {1}.".format(lower, upper)
            )
        self.dimension = self.lower.shape[0]

    def extents(self):
        # type: () -> numpy.ndarray
        """
        Returns the side lengths of the box.
        """
        return self.upper - self.lower

    def face_measure(self, axis):
        # type: (int) -> float
        """
        Returns the measure of a face orthogonal to the given axis.
        """
        return float(numpy.prod(numpy.delete(self.extents(), axis)))

    def contains(self, points, tolerance=1e-12):
        # type: (numpy.ndarray, float) -> numpy.ndarray
        """
        Checks which points lie in the closed box.
        """
        points = numpy.atleast_2d(points)
        return numpy.all(
            (points >= self.lower - tolerance) & (points <= self.upper + tolerance),
            axis=1,
        )


class BoundaryRegion(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, box, faces):
        # type: (Box, Sequence[named_tuples.Face]) -> None
        """
        A union of faces of an axis-aligned box.

        Arguments:

            box (Box): the box.

            faces (Sequence[:class:`~kerbil.utils.named_tuples.Face`]): the faces in
                the region.
        """
        self.box = box
        self.faces = tuple(faces)
        self.dimension = box.dimension
        self.measures = numpy.array([box.face_measure(face.axis) for face in faces])

    def tags(self):
        # type: () -> List[str]
        """
        Returns the distinct tags of the faces, in order of first appearance.
        """
        tags = []  # type: List[str]
        for face in self.faces:
            if face.tag not in tags:
                tags.append(face.tag)
        return tags


def sample_boundary(region, num_points, rng):
    # type: (BoundaryRegion, int, numpy.random.Generator) -> Tuple[numpy.ndarray, numpy.ndarray]
    """
    Samples points uniformly on a union of faces.

    Each point picks a face with probability proportional to the face measure, then a
    uniform location on that face.

    Arguments:

        region (BoundaryRegion): the faces.

        num_points (int): the number of points.

        rng (numpy.random.Generator): the random generator.

    Returns:

        Tuple[numpy.ndarray, numpy.ndarray]: the points, shape (n, d), and the index
        of the face of each point.
    """
    if num_points == 0 or not region.faces:
        return numpy.zeros((0, region.dimension)), numpy.zeros((0,), dtype=int)
    probabilities = region.measures / region.measures.sum()
    face_indices = rng.choice(len(region.faces), size=num_points, p=probabilities)
    points = rng.uniform(region.box.lower, region.box.upper, size=(num_points, region.dimension))
    for index, face in enumerate(region.faces):
        points[face_indices == index, face.axis] = face.value

    return points, face_indices


def sample_uniform(region, num_points, rng):
    # type: (Any, int, numpy.random.Generator) -> numpy.ndarray
    """
    Samples i.i.d. uniform points in a box or on a union of faces.

    Arguments:

        region (Union[Box, BoundaryRegion]): the region.

        num_points (int): the number of points (zero gives an empty array).

        rng (numpy.random.Generator): the random generator.

    Returns:

        numpy.ndarray: the points, shape (n, d).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilInvalidCountsError`: if the number of
            points is negative.
    """
    if num_points < 0:
        raise exceptions.KerbilInvalidCountsError(
            "Cannot sample {0} points.".format(num_points)
        )
    if isinstance(region, BoundaryRegion):
        return sample_boundary(region, num_points, rng)[0]

    return rng.uniform(region.lower, region.upper, size=(num_points, region.dimension))


def uniform_grid(box, num_per_axis, cell_centered=True):
    # type: (Box, int, bool) -> Tuple[List[numpy.ndarray], numpy.ndarray]
    """
    Builds a uniform tensor grid in a box.

    Arguments:

        box (Box): the box.

        num_per_axis (int): the number of nodes along every axis.

        cell_centered (bool): if True, the nodes are the centres of a uniform
            partition (so they all lie in the interior); otherwise they include the
            faces. Defaults to True.

    Returns:

        Tuple[List[numpy.ndarray], numpy.ndarray]: the axes of the grid and the
        points in row-major order, shape (num_per_axis ** d, d).
    """
    axes = []
    for lower, upper in zip(box.lower, box.upper):
        if cell_centered:
            step = (upper - lower) / num_per_axis
            axes.append(lower + step * (numpy.arange(num_per_axis) + 0.5))
        else:
            axes.append(numpy.linspace(lower, upper, num_per_axis))
    mesh = numpy.meshgrid(*axes, indexing="ij")
    points = numpy.stack([coordinate.ravel() for coordinate in mesh], axis=1)

    return axes, points
