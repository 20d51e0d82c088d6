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
Common machinery of the problem definitions.

This module contains the base class of all problems. A problem describes its domain,
its boundary and initial conditions, its nonlinear differential operator and the
Frechet derivative of that operator. From these, the base class derives the
Gauss-Newton linearization and the blocks of linear functionals that enter the
collocation systems.

In space-time problems the time is always coordinate 0.
"""
from __future__ import absolute_import, division, print_function

import collections
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from past.builtins import basestring

from kerbil.algorithms import generic_algorithms
from kerbil.utils import exceptions, named_tuples


ZERO = (0, 0)
D0 = (1, 0)
D1 = (0, 1)
D00 = (2, 0)
D11 = (0, 2)

INTERIOR_TAG = "interior"
OBSERVATION_TAG = "observation"


def feature(features, component, alpha):
    # type: (named_tuples.StateFeatures, str, Tuple[int, ...]) -> numpy.ndarray
    """
    Extracts one partial derivative of one component from a set of state features.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
            feature is missing.
    """
    try:
        return numpy.asarray(features.values[component][alpha], dtype=numpy.float64)
    except KeyError:
        raise exceptions.KerbilDimensionMismatchError(
            "The state features do not contain the derivative {0} of {1}.".format(
                alpha, component
            )
        )


def constant_part(component, alphas, coefficients, num_points):
    # type: (int, Sequence[Tuple[int, ...]], Sequence[Any], int) -> named_tuples.BlockPart
    """
    Builds a block part, broadcasting scalar coefficients to every point.
    """
    columns = [
        numpy.broadcast_to(numpy.asarray(coefficient, dtype=numpy.float64), (num_points,))
        for coefficient in coefficients
    ]
    return named_tuples.BlockPart(
        component=component,
        alphas=tuple(alphas),
        coefficients=numpy.stack(columns, axis=1)
        if columns
        else numpy.zeros((num_points, 0)),
    )


class Problem(object):
    """
    See documentation of the '__init__' function.
    """

    name = ""
    component_names = ("u",)  # type: Tuple[str, ...]
    equation_names = ("pde",)  # type: Tuple[str, ...]
    lower = (0.0, 0.0)  # type: Tuple[float, ...]
    upper = (1.0, 1.0)  # type: Tuple[float, ...]
    default_constants = collections.OrderedDict()  # type: Dict[str, Any]
    # Weight of the boundary and initial rows in the validation loss.
    default_boundary_weight = 0.0
    has_observations = False

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        A PDE or inverse problem.

        Arguments:

            constants (Optional[Dict[str, Any]]): overrides of the default constants
                of the problem. Defaults to None.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if a
                constant is not defined for the problem.

            :class:`~kerbil.utils.exceptions.KerbilWrongParameterTypeError`: if a
                constant has the wrong type.
        """
        self.constants = collections.OrderedDict(self.default_constants)
        for key, value in (constants or {}).items():
            if key not in self.default_constants:
                raise exceptions.KerbilConfigurationSchemaError(
                    "Problem {0} has no constant {1} (known: {2}).".format(
                        self.name, key, ", ".join(self.default_constants)
                    )
                )
            default = self.default_constants[key]
            if isinstance(default, basestring):
                if not isinstance(value, basestring):
                    raise exceptions.KerbilWrongParameterTypeError(
                        "Problem constant {0} must be a string.".format(key)
                    )
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise exceptions.KerbilWrongParameterTypeError(
                    "Problem constant {0} must be a number.".format(key)
                )
            else:
                value = float(value)
            self.constants[key] = value
        self.box = generic_algorithms.Box(self.lower, self.upper)
        self.boundary_region = generic_algorithms.BoundaryRegion(self.box, self.faces())
        self.validate_constants()

    @property
    def dimension(self):
        # type: () -> int
        """
        The dimension of the domain.
        """
        return len(self.lower)

    @property
    def num_components(self):
        # type: () -> int
        """
        The number of GP components.
        """
        return len(self.component_names)

    def component_index(self, name):
        # type: (str) -> int
        """
        Returns the index of a named component.
        """
        return self.component_names.index(name)

    def validate_constants(self):
        # type: () -> None
        """
        Checks the values of the constants. Problems override this when needed.
        """

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        """
        Returns the faces of the domain where a condition is imposed.
        """
        raise NotImplementedError

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        """
        Returns the boundary and initial conditions.
        """
        raise NotImplementedError

    def features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        """
        Returns the partial derivatives of each component read by the operator and
        by its linearization.
        """
        raise NotImplementedError

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        """
        Evaluates the nonlinear differential operator.

        Arguments:

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the state
                at a set of points.

        Returns:

            numpy.ndarray: the operator, shape (n, number of equations).
        """
        raise NotImplementedError

    def forcing(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Evaluates the right-hand side of the equations, shape (n, number of
        equations). The default is a zero right-hand side.
        """
        points = numpy.atleast_2d(points)
        return numpy.zeros((points.shape[0], len(self.equation_names)))

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        """
        Evaluates the Frechet derivative of the operator.

        Arguments:

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the state
                at which the operator is linearized.

        Returns:

            List[List[:class:`~kerbil.utils.named_tuples.BlockPart`]]: for each
            equation, the linear differential operators acting on each component.
        """
        raise NotImplementedError

    def exact_solution(self, points):
        # type: (numpy.ndarray) -> Optional[numpy.ndarray]
        """
        Returns the exact solution at a set of points, shape (n, components), or None
        when no closed form is known.
        """
        return None

    def residual(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        """
        Evaluates the nonlinear residual, the operator minus the right-hand side.

        Returns:

            numpy.ndarray: the residual, shape (n, number of equations).
        """
        return self.operator(features) - self.forcing(features.points)

    def linearize(self, features):
        # type: (named_tuples.StateFeatures) -> List[Tuple[Tuple[named_tuples.BlockPart, ...], numpy.ndarray]]
        """
        Linearizes the equations around a state.

        The affine approximation P(u_k) + DP(u_k)(u - u_k) = f is rearranged as
        DP(u_k) u = f + DP(u_k) u_k - P(u_k).

        Arguments:

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the state
                u_k at a set of points.

        Returns:

            List[Tuple[Tuple[BlockPart, ...], numpy.ndarray]]: for each equation, the
            linear operator and the right-hand side at every point.
        """
        residual = self.residual(features)
        linearized = []
        for equation, parts in enumerate(self.jacobian(features)):
            rhs = -residual[:, equation]
            for part in parts:
                name = self.component_names[part.component]
                for column, alpha in enumerate(part.alphas):
                    rhs = rhs + part.coefficients[:, column] * feature(
                        features, name, alpha
                    )
            linearized.append((tuple(parts), rhs))

        return linearized

    def linearize_equation(self, features, equation, row=0):
        # type: (named_tuples.StateFeatures, int, int) -> named_tuples.LinearizedEquation
        """
        Returns the linearization of one equation at one point.

        Arguments:

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the state
                at a set of points.

            equation (int): the equation index.

            row (int): the point index. Defaults to 0.

        Returns:

            :class:`~kerbil.utils.named_tuples.LinearizedEquation`: the linear
            functional and the right-hand side.
        """
        parts, rhs = self.linearize(features)[equation]
        point = tuple(float(coordinate) for coordinate in features.points[row])
        return named_tuples.LinearizedEquation(
            functional=tuple(
                named_tuples.DiffFunctional(
                    component=part.component,
                    point=point,
                    terms=tuple(
                        (alpha, float(part.coefficients[row, column]))
                        for column, alpha in enumerate(part.alphas)
                    ),
                )
                for part in parts
            ),
            rhs=float(rhs[row]),
        )

    def interior_blocks(self, points, features, tag=INTERIOR_TAG):
        # type: (numpy.ndarray, named_tuples.StateFeatures, str) -> Tuple[List[named_tuples.FunctionalBlock], numpy.ndarray]
        """
        Builds the linearized equations at a set of interior points.

        Arguments:

            points (numpy.ndarray): the points, shape (n, d).

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the
                linearization state at the points.

            tag (str): the tag of the blocks. Defaults to 'interior'.

        Returns:

            Tuple[List[FunctionalBlock], numpy.ndarray]: one block per equation and
            the concatenated right-hand sides.
        """
        blocks = []
        values = []
        for parts, rhs in self.linearize(features):
            blocks.append(named_tuples.FunctionalBlock(tag=tag, points=points, parts=parts))
            values.append(rhs)

        return blocks, numpy.concatenate(values) if values else numpy.zeros(0)

    def boundary_blocks(self, points, tags):
        # type: (numpy.ndarray, numpy.ndarray) -> Tuple[List[named_tuples.FunctionalBlock], numpy.ndarray, numpy.ndarray]
        """
        Builds the boundary and initial conditions at a set of points.

        The conditions are linear, so they do not depend on the linearization state.

        Arguments:

            points (numpy.ndarray): the points, shape (n, d).

            tags (numpy.ndarray): the tag of the face of each point.

        Returns:

            Tuple[List[FunctionalBlock], numpy.ndarray, numpy.ndarray]: one block per
            condition, the concatenated imposed values and the index of the point of
            each row.
        """
        blocks = []
        values = []
        indices = []
        tags = numpy.asarray(tags)
        for condition in self.boundary_conditions():
            rows = numpy.flatnonzero(tags == condition.tag)
            selected = points[rows]
            if selected.shape[0] == 0:
                continue
            blocks.append(
                named_tuples.FunctionalBlock(
                    tag=condition.tag,
                    points=selected,
                    parts=(
                        constant_part(
                            self.component_index(condition.component),
                            [alpha for alpha, _ in condition.terms],
                            [coefficient for _, coefficient in condition.terms],
                            selected.shape[0],
                        ),
                    ),
                )
            )
            values.append(
                numpy.asarray(condition.value(selected), dtype=numpy.float64).ravel()
            )
            indices.append(rows)

        if not blocks:
            return blocks, numpy.zeros(0), numpy.zeros(0, dtype=numpy.int64)
        return blocks, numpy.concatenate(values), numpy.concatenate(indices)

    def boundary_features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        """
        Returns the partial derivatives of each component read by the conditions.
        """
        features = collections.OrderedDict()  # type: Dict[str, List[Tuple[int, ...]]]
        for condition in self.boundary_conditions():
            alphas = features.setdefault(condition.component, [])
            for alpha, _ in condition.terms:
                if alpha not in alphas:
                    alphas.append(alpha)
        return collections.OrderedDict(
            (name, tuple(alphas)) for name, alphas in features.items()
        )

    def boundary_residual(self, points, tags, features):
        # type: (numpy.ndarray, numpy.ndarray, named_tuples.StateFeatures) -> Tuple[numpy.ndarray, numpy.ndarray]
        """
        Evaluates how much a state violates the boundary and initial conditions.

        Arguments:

            points (numpy.ndarray): the points, shape (n, d).

            tags (numpy.ndarray): the tag of the face of each point.

            features (:class:`~kerbil.utils.named_tuples.StateFeatures`): the state
                at the points.

        Returns:

            Tuple[numpy.ndarray, numpy.ndarray]: the residual of each condition at
            each point of its faces, and the index of the point of each residual.
        """
        residuals = []
        indices = []
        tags = numpy.asarray(tags)
        for condition in self.boundary_conditions():
            rows = numpy.flatnonzero(tags == condition.tag)
            if rows.size == 0:
                continue
            applied = numpy.zeros(rows.size)
            for alpha, coefficient in condition.terms:
                applied += coefficient * feature(features, condition.component, alpha)[rows]
            residuals.append(applied - numpy.asarray(condition.value(points[rows])).ravel())
            indices.append(rows)
        if not residuals:
            return numpy.zeros(0), numpy.zeros(0, dtype=numpy.int64)
        return numpy.concatenate(residuals), numpy.concatenate(indices)

    def observation_blocks(self, points):
        # type: (numpy.ndarray) -> List[named_tuples.FunctionalBlock]
        """
        Builds the point evaluations of the observed component.
        """
        return [
            named_tuples.FunctionalBlock(
                tag=OBSERVATION_TAG,
                points=points,
                parts=(
                    constant_part(0, [(0,) * self.dimension], [1.0], points.shape[0]),
                ),
            )
        ]

    def manufactured_data(self):
        # type: () -> Dict[str, Callable[[numpy.ndarray], numpy.ndarray]]
        """
        Returns the data of the problem as functions of the points.

        Returns:

            Dict[str, Callable]: the right-hand side ('forcing') and the value of
            each condition, keyed by '<face tag>:<component>'.
        """
        data = collections.OrderedDict()  # type: Dict[str, Callable[[numpy.ndarray], numpy.ndarray]]
        data["forcing"] = self.forcing
        for condition in self.boundary_conditions():
            data["{0}:{1}".format(condition.tag, condition.component)] = condition.value
        return data

    def collocation_layout(self, counts, rng):
        # type: (Dict[str, int], numpy.random.Generator) -> named_tuples.CollocationLayout
        """
        Samples the collocation and validation points.

        Points are drawn i.i.d. uniformly, in this order: interior collocation,
        boundary collocation, interior validation and boundary validation points.
        Boundary points are spread over the faces proportionally to their measure.

        Arguments:

            counts (Dict[str, int]): the numbers of points ('interior', 'boundary',
                'validation_interior' and optionally 'validation_boundary').

            rng (numpy.random.Generator): the random generator.

        Returns:

            :class:`~kerbil.utils.named_tuples.CollocationLayout`: the points.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilInvalidCountsError`: if a count is
                negative, or if a required count is zero.
        """
        interior = int(counts.get("interior", 0))
        boundary = int(counts.get("boundary", 0))
        validation_interior = int(counts.get("validation_interior", 0))
        validation_boundary = int(counts.get("validation_boundary", 0))
        for name, count in (
            ("interior", interior),
            ("boundary", boundary),
            ("validation_interior", validation_interior),
            ("validation_boundary", validation_boundary),
        ):
            if count < 0:
                raise exceptions.KerbilInvalidCountsError(
                    "The number of {0} points cannot be negative.".format(name)
                )
        if interior == 0:
            raise exceptions.KerbilInvalidCountsError(
                "Problem {0} needs interior collocation points.".format(self.name)
            )
        if boundary == 0 and self.boundary_region.faces:
            raise exceptions.KerbilInvalidCountsError(
                "Problem {0} needs boundary collocation points.".format(self.name)
            )
        interior_points = generic_algorithms.sample_uniform(self.box, interior, rng)
        boundary_points, boundary_faces = generic_algorithms.sample_boundary(
            self.boundary_region, boundary, rng
        )
        validation_points = generic_algorithms.sample_uniform(
            self.box, validation_interior, rng
        )
        validation_boundary_points, validation_faces = generic_algorithms.sample_boundary(
            self.boundary_region, validation_boundary, rng
        )

        return named_tuples.CollocationLayout(
            interior=interior_points,
            boundary=boundary_points,
            boundary_tags=self.face_tags(boundary_faces),
            validation_interior=validation_points,
            validation_boundary=validation_boundary_points,
            validation_boundary_tags=self.face_tags(validation_faces),
        )

    def face_tags(self, face_indices):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Converts face indices into face tags.
        """
        tags = numpy.array([face.tag for face in self.boundary_region.faces], dtype=object)
        if tags.size == 0:
            return numpy.array([], dtype=object)
        return tags[numpy.asarray(face_indices, dtype=numpy.int64)]

    def sample_interior(self, num_points, rng):
        # type: (int, numpy.random.Generator) -> numpy.ndarray
        """
        Samples i.i.d. uniform points in the domain.
        """
        return generic_algorithms.sample_uniform(self.box, num_points, rng)

    def sample_boundary(self, num_points, rng):
        # type: (int, numpy.random.Generator) -> Tuple[numpy.ndarray, numpy.ndarray]
        """
        Samples i.i.d. uniform points on the constrained faces, with their tags.
        """
        points, faces = generic_algorithms.sample_boundary(
            self.boundary_region, num_points, rng
        )
        return points, self.face_tags(faces)


def dirichlet_faces(lower, upper, tag="boundary"):
    # type: (Sequence[float], Sequence[float], str) -> Tuple[named_tuples.Face, ...]
    """
    Returns all the faces of a box.
    """
    faces = []
    for axis, (low, high) in enumerate(zip(lower, upper)):
        faces.append(named_tuples.Face(axis=axis, value=low, tag=tag))
        faces.append(named_tuples.Face(axis=axis, value=high, tag=tag))
    return tuple(faces)


def zero_value(points):
    # type: (numpy.ndarray) -> numpy.ndarray
    """
    Homogeneous boundary data.
    """
    return numpy.zeros(numpy.atleast_2d(points).shape[0])
