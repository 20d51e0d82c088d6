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
Gauss-Newton inner solver.

This module contains the functions that assemble the linearized collocation system
of a problem around a state, solve it for a given set of kernel hyperparameters, and
evaluate the resulting state. The solution of the linearized system is the function
with minimal norm, in the reproducing kernel Hilbert space of the kernels, that
satisfies the linearized equations at the collocation points exactly. When noisy
observations are available, a data-misfit term is added and the observation
functionals join the representer expansion.
"""
from __future__ import absolute_import, division, print_function

from typing import Any, Callable, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy
from future.utils import raise_from

from kerbil.algorithms import (
    functional_algorithms,
    generic_algorithms,
    kernel_algorithms,
)
from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


class LinearizedInner(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(
        self,
        functionals,
        rhs,
        observation_points=None,
        observation_values=None,
        noise_std=None,
    ):
        # type: (functional_algorithms.FunctionalSet, numpy.ndarray, Optional[numpy.ndarray], Optional[numpy.ndarray], Optional[float]) -> None
        """
        A linearized inner problem.

        Arguments:

            functionals (:class:`~kerbil.algorithms.functional_algorithms.FunctionalSet`):
                the linearized equations and the boundary and initial conditions.

            rhs (numpy.ndarray): the right-hand side of each functional.

            observation_points (Optional[numpy.ndarray]): the locations of noisy
                observations of component 0. Defaults to None.

            observation_values (Optional[numpy.ndarray]): the observed values.
                Defaults to None.

            noise_std (Optional[float]): the standard deviation of the observation
                noise. Defaults to None.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                number of right-hand sides does not match the number of functionals.
        """
        rhs = numpy.asarray(rhs, dtype=numpy.float64)
        if rhs.shape != (functionals.size,):
            raise exceptions.KerbilDimensionMismatchError(
                "{0} right-hand sides for {1} functionals.".format(
                    rhs.shape[0], functionals.size
                )
            )
        self.functionals = functionals
        self.rhs = rhs
        self.observation_points = observation_points
        self.observation_values = observation_values
        self.noise_std = noise_std

    @property
    def has_observations(self):
        # type: () -> bool
        """
        Whether the problem has a data-misfit term.
        """
        return self.observation_points is not None and self.noise_std is not None


class GnState(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(
        self, kernels, params, functionals, coefficients, gram, diagonal, factor, num_constraints
    ):
        # type: (kernel_algorithms.ComponentKernels, numpy.ndarray, functional_algorithms.FunctionalSet, numpy.ndarray, numpy.ndarray, numpy.ndarray, Any, int) -> None
        """
        A solved Gauss-Newton state.

        The state is the kernel expansion u(x) = sum_m z_m L_m k(., x), where the L_m
        are the functionals of the system and z its coefficients. The first
        'num_constraints' functionals are the collocation constraints, the remaining
        ones (if any) are observation functionals.

        Arguments:

            kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
                the kernels.

            params (numpy.ndarray): the unconstrained hyperparameters.

            functionals (:class:`~kerbil.algorithms.functional_algorithms.FunctionalSet`):
                the functionals of the expansion.

            coefficients (numpy.ndarray): the coefficients z.

            gram (numpy.ndarray): the Gram matrix of the functionals, without any
                diagonal term.

            diagonal (numpy.ndarray): the diagonal added to the Gram matrix before
                solving.

            factor (Any): the factorization of the regularized Gram matrix.

            num_constraints (int): the number of collocation constraints.
        """
        self.kernels = kernels
        self.params = numpy.array(params, dtype=numpy.float64)
        self.functionals = functionals
        self.coefficients = coefficients
        self.gram = gram
        self.diagonal = diagonal
        self.factor = factor
        self.num_constraints = num_constraints

    def solve_system(self, rhs):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Applies the inverse of the regularized Gram matrix.
        """
        if isinstance(self.factor, generic_algorithms.CholFactor):
            return generic_algorithms.solve_chol(self.factor, rhs)
        return generic_algorithms.solve_factored_kkt(self.factor, rhs)

    def evaluate(self, functional):
        # type: (Any) -> float
        """
        Applies a linear functional to the state.

        Arguments:

            functional (Any): a :class:`~kerbil.utils.named_tuples.DiffFunctional`,
                or a tuple of differential functionals at the same point.

        Returns:

            float: the value of the functional.
        """
        row = functional_algorithms.cross_row(
            self.kernels, self.params, functional, self.functionals
        )
        return float(row.dot(self.coefficients))

    def evaluate_set(self, targets):
        # type: (functional_algorithms.FunctionalSet) -> numpy.ndarray
        """
        Applies every functional of a set to the state.
        """
        return functional_algorithms.cross_matrix(
            self.kernels, self.params, targets, self.functionals
        ).dot(self.coefficients)

    def features_at(self, points, features):
        # type: (numpy.ndarray, Dict[str, Tuple[Tuple[int, ...], ...]]) -> named_tuples.StateFeatures
        """
        Evaluates partial derivatives of the state components at a set of points.

        Arguments:

            points (numpy.ndarray): the points, shape (n, d).

            features (Dict[str, Tuple[Tuple[int, ...], ...]]): the partial
                derivatives needed for each component, keyed by component name.

        Returns:

            :class:`~kerbil.utils.named_tuples.StateFeatures`: the values.
        """
        points = numpy.atleast_2d(numpy.asarray(points, dtype=numpy.float64))
        values = {}  # type: Dict[str, Dict[Tuple[int, ...], numpy.ndarray]]
        for name, alphas in features.items():
            values[name] = functional_algorithms.evaluate_derivatives(
                self.kernels,
                self.params,
                self.functionals,
                self.coefficients,
                points,
                self.kernels.names.index(name),
                alphas,
            )
        return named_tuples.StateFeatures(points=points, values=values)

    def constraint_residual(self, rhs):
        # type: (numpy.ndarray) -> float
        """
        Returns the largest violation of the collocation constraints.

        Arguments:

            rhs (numpy.ndarray): the right-hand sides of the constraints.
        """
        if self.num_constraints == 0:
            return 0.0
        applied = self.gram[: self.num_constraints].dot(self.coefficients)
        return float(numpy.max(numpy.abs(applied - rhs)))


class ZeroState(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, kernels):
        # type: (kernel_algorithms.ComponentKernels) -> None
        """
        The zero function, the starting point of every Gauss-Newton iteration.

        Arguments:

            kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
                the kernels (only their component names are used).
        """
        self.kernels = kernels

    def evaluate(self, functional):
        # type: (Any) -> float
        """
        Applies a linear functional to the zero function.
        """
        return 0.0

    def evaluate_set(self, targets):
        # type: (functional_algorithms.FunctionalSet) -> numpy.ndarray
        """
        Applies every functional of a set to the zero function.
        """
        return numpy.zeros(targets.size)

    def features_at(self, points, features):
        # type: (numpy.ndarray, Dict[str, Tuple[Tuple[int, ...], ...]]) -> named_tuples.StateFeatures
        """
        Evaluates partial derivatives of the zero function.
        """
        points = numpy.atleast_2d(numpy.asarray(points, dtype=numpy.float64))
        return named_tuples.StateFeatures(
            points=points,
            values=dict(
                (name, dict((alpha, numpy.zeros(points.shape[0])) for alpha in alphas))
                for name, alphas in features.items()
            ),
        )


def assemble(problem, previous, interior, boundary, boundary_tags, observations=None):
    # type: (base.Problem, Any, numpy.ndarray, numpy.ndarray, numpy.ndarray, Optional[named_tuples.Observations]) -> LinearizedInner
    """
    Assembles the inner problem linearized around a state.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        previous (Union[GnState, ZeroState]): the linearization state.

        interior (numpy.ndarray): the interior collocation points.

        boundary (numpy.ndarray): the boundary and initial collocation points.

        boundary_tags (numpy.ndarray): the face tag of each boundary point.

        observations (Optional[:class:`~kerbil.utils.named_tuples.Observations`]):
            noisy observations of component 0. Defaults to None.

    Returns:

        LinearizedInner: one linearized equation per interior point and equation,
        followed by the boundary and initial conditions.
    """
    features = previous.features_at(interior, problem.features())
    interior_blocks, interior_rhs = problem.interior_blocks(interior, features)
    boundary_blocks, boundary_rhs, _ = problem.boundary_blocks(boundary, boundary_tags)
    functionals = functional_algorithms.FunctionalSet(
        interior_blocks + boundary_blocks, problem.num_components
    )
    rhs = numpy.concatenate([interior_rhs, boundary_rhs])
    if observations is None:
        return LinearizedInner(functionals, rhs)

    return LinearizedInner(
        functionals,
        rhs,
        observation_points=observations.points,
        observation_values=observations.values,
        noise_std=observations.noise_std,
    )


def _rejected(exc):
    # type: (exceptions.KerbilException) -> None
    raise_from(
        exc=exceptions.KerbilRejectedThetaError(
            "The inner system cannot be solved: {0}".format(exc)
        ),
        cause=exc,
    )


def solve(inner, kernels, params, nugget):
    # type: (LinearizedInner, kernel_algorithms.ComponentKernels, Any, float) -> GnState
    """
    Solves the linearized inner problem with hard constraints.

    The coefficients are z = (K + nugget I)^-1 b, where K is the Gram matrix of the
    functionals.

    Arguments:

        inner (LinearizedInner): the linearized problem.

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        nugget (float): the diagonal regularization.

    Returns:

        GnState: the solved state.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilRejectedThetaError`: if the
            regularized Gram matrix is not positive definite.
    """
    raw = kernel_algorithms.raw_values(params)
    gram = functional_algorithms.gram(kernels, raw, inner.functionals)
    try:
        factor = generic_algorithms.cholesky_nugget(gram, nugget)
    except exceptions.KerbilNotPositiveDefiniteError as exc:
        _rejected(exc)
    coefficients = generic_algorithms.solve_chol(factor, inner.rhs)

    return GnState(
        kernels=kernels,
        params=raw,
        functionals=inner.functionals,
        coefficients=coefficients,
        gram=gram,
        diagonal=numpy.full(inner.functionals.size, float(nugget)),
        factor=factor,
        num_constraints=inner.functionals.size,
    )


def solve_with_observations(inner, kernels, params, nugget):
    # type: (LinearizedInner, kernel_algorithms.ComponentKernels, Any, float) -> GnState
    """
    Solves the linearized inner problem with a data-misfit term.

    The state minimizes the sum of the squared norms of the components plus
    sum_l (u(x_l) - y_l)^2 / gamma^2, subject to the linearized constraints. Its
    representer expansion runs over the constraints and the observation
    evaluations; the stationarity and feasibility conditions reduce to the
    saddle-point system (K + D) z = [b; y], where K is the Gram matrix of all the
    functionals and D is zero on the constraint rows and gamma^2 on the observation
    rows (plus the nugget on every row). An infinite gamma drops the data term.

    Arguments:

        inner (LinearizedInner): the linearized problem.

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        nugget (float): the diagonal regularization.

    Returns:

        GnState: the solved state.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilRejectedThetaError`: if the
            saddle-point system is singular.
    """
    if not inner.has_observations or not numpy.isfinite(inner.noise_std):
        return solve(inner, kernels, params, nugget)
    raw = kernel_algorithms.raw_values(params)
    observation_points = numpy.atleast_2d(inner.observation_points)
    observation_set = functional_algorithms.FunctionalSet(
        [
            named_tuples.FunctionalBlock(
                tag=base.OBSERVATION_TAG,
                points=observation_points,
                parts=(
                    base.constant_part(
                        0,
                        [(0,) * observation_points.shape[1]],
                        [1.0],
                        observation_points.shape[0],
                    ),
                ),
            )
        ],
        inner.functionals.num_components,
    )
    functionals = functional_algorithms.concatenate([inner.functionals, observation_set])
    gram = functional_algorithms.gram(kernels, raw, functionals)
    diagonal = numpy.full(functionals.size, float(nugget))
    diagonal[inner.functionals.size :] += float(inner.noise_std) ** 2
    try:
        factor = generic_algorithms.factor_kkt(gram + numpy.diag(diagonal))
    except exceptions.KerbilSingularKktError as exc:
        _rejected(exc)
    coefficients = generic_algorithms.solve_factored_kkt(
        factor,
        numpy.concatenate(
            [inner.rhs, numpy.asarray(inner.observation_values, dtype=numpy.float64)]
        ),
    )

    return GnState(
        kernels=kernels,
        params=raw,
        functionals=functionals,
        coefficients=coefficients,
        gram=gram,
        diagonal=diagonal,
        factor=factor,
        num_constraints=inner.functionals.size,
    )


def solve_inner(inner, kernels, params, nugget):
    # type: (LinearizedInner, kernel_algorithms.ComponentKernels, Any, float) -> GnState
    """
    Solves a linearized inner problem, with or without a data-misfit term.
    """
    if inner.has_observations:
        return solve_with_observations(inner, kernels, params, nugget)
    return solve(inner, kernels, params, nugget)


def system_rhs(inner):
    # type: (LinearizedInner) -> numpy.ndarray
    """
    Returns the right-hand side of the system solved for a linearized problem.
    """
    if inner.has_observations and numpy.isfinite(inner.noise_std):
        return numpy.concatenate(
            [inner.rhs, numpy.asarray(inner.observation_values, dtype=numpy.float64)]
        )
    return inner.rhs


def collocation_residual(problem, state, interior):
    # type: (base.Problem, Any, numpy.ndarray) -> float
    """
    Returns the largest nonlinear residual of a state at a set of interior points.
    """
    features = state.features_at(interior, problem.features())
    residual = problem.residual(features)
    return float(numpy.max(numpy.abs(residual))) if residual.size else 0.0


def solve_from_scratch(
    problem,
    kernels,
    params,
    interior,
    boundary,
    boundary_tags,
    nugget,
    gn_iters,
    observations=None,
    callback=None,
):
    # type: (base.Problem, kernel_algorithms.ComponentKernels, Any, numpy.ndarray, numpy.ndarray, numpy.ndarray, float, int, Optional[named_tuples.Observations], Optional[Callable[[int, float], None]]) -> Tuple[Any, List[float]]
    """
    Runs Gauss-Newton iterations from the zero state with fixed hyperparameters.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        interior (numpy.ndarray): the interior collocation points.

        boundary (numpy.ndarray): the boundary and initial collocation points.

        boundary_tags (numpy.ndarray): the face tag of each boundary point.

        nugget (float): the diagonal regularization.

        gn_iters (int): the number of Gauss-Newton iterations.

        observations (Optional[:class:`~kerbil.utils.named_tuples.Observations`]):
            noisy observations of component 0. Defaults to None.

        callback (Optional[Callable[[int, float], None]]): called after every
            iteration with the iteration index and the largest nonlinear collocation
            residual. Defaults to None.

    Returns:

        Tuple[Union[GnState, ZeroState], List[float]]: the final state and the
        largest nonlinear collocation residual after every iteration.
    """
    state = ZeroState(kernels)  # type: Any
    history = []  # type: List[float]
    for iteration in range(gn_iters):
        inner = assemble(problem, state, interior, boundary, boundary_tags, observations)
        state = solve_inner(inner, kernels, params, nugget)
        history.append(collocation_residual(problem, state, interior))
        if callback is not None:
            callback(iteration, history[-1])

    return state, history
