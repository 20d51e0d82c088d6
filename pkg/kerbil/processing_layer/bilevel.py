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
Bilevel hyperparameter learning.

This module contains the outer loop that learns the kernel hyperparameters. At every
Gauss-Newton iteration the equations are linearized around the current state, and
the hyperparameters are updated with Adam to reduce the linearized residuals of the
resulting state at validation points. The gradient of that loss with respect to the
hyperparameters is propagated through the solution of the inner system, in forward
mode (tangents), in reverse mode (adjoints) or by finite differences.
"""
from __future__ import absolute_import, division, print_function

import collections
import json
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from future.utils import raise_from

from kerbil.algorithms import (
    functional_algorithms,
    kernel_algorithms,
    optimization_algorithms,
)
from kerbil.problems import base
from kerbil.processing_layer import inner_solver
from kerbil.utils import exceptions, named_tuples


MODES = ("dto", "otd")
GRADIENT_MODES = ("tangent", "adjoint", "fd")
CONVERGENCE_METRICS = ("theta_change", "loss_change")

TANGENT_LIMIT = 16
FD_LIMIT = 64

INTERIOR = "interior"
BOUNDARY = "boundary"
OBSERVATION = "observation"


def default_run_config(**overrides):
    # type: (Any) -> named_tuples.RunConfig
    """
    Returns the default run settings, with optional overrides.

    The defaults are 30 Gauss-Newton iterations of 50 Adam updates with step size
    1e-2, mini-batches of 200 interior and 200 boundary validation points, a nugget
    of 1e-10, no hyperparameter penalty, no early stopping and adjoint
    hypergradients.
    """
    config = named_tuples.RunConfig(
        mode="dto",
        gn_iters=30,
        adam_steps=50,
        learning_rate=1e-2,
        beta1=optimization_algorithms.ADAM_BETA_1,
        beta2=optimization_algorithms.ADAM_BETA_2,
        epsilon=optimization_algorithms.ADAM_EPSILON,
        batch_interior=200,
        batch_boundary=200,
        boundary_weight=0.0,
        data_weight=0.0,
        nugget=1e-10,
        regularization=0.0,
        regularizer="l2",
        tolerance=0.0,
        convergence_metric="theta_change",
        gradient="adjoint",
        fd_step=1e-5,
        max_rejections=10,
    )
    return config._replace(**overrides)


def check_run_config(config):
    # type: (named_tuples.RunConfig) -> None
    """
    Validates run settings.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if a
            setting has an invalid value.
    """
    problems = []
    if config.mode not in MODES:
        problems.append("mode must be one of {0}".format(", ".join(MODES)))
    if config.gradient not in GRADIENT_MODES:
        problems.append("gradient must be one of {0}".format(", ".join(GRADIENT_MODES)))
    if config.convergence_metric not in CONVERGENCE_METRICS:
        problems.append(
            "convergence_metric must be one of {0}".format(", ".join(CONVERGENCE_METRICS))
        )
    if config.regularizer not in optimization_algorithms.REGULARIZERS:
        problems.append(
            "regularizer must be one of {0}".format(
                ", ".join(optimization_algorithms.REGULARIZERS)
            )
        )
    for name in ("gn_iters", "adam_steps", "batch_interior", "batch_boundary", "max_rejections"):
        if getattr(config, name) < 0:
            problems.append("{0} cannot be negative".format(name))
    for name in ("nugget", "regularization", "tolerance", "boundary_weight", "data_weight"):
        if getattr(config, name) < 0:
            problems.append("{0} cannot be negative".format(name))
    if config.learning_rate <= 0 or config.fd_step <= 0:
        problems.append("learning_rate and fd_step must be positive")
    if problems:
        raise exceptions.KerbilConfigurationSchemaError(
            "Invalid bilevel settings: {0}.".format("; ".join(problems))
        )


class ValidationTargets(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, functionals, values, kinds, point_ids):
        # type: (functional_algorithms.FunctionalSet, numpy.ndarray, numpy.ndarray, numpy.ndarray) -> None
        """
        The linearized residuals scored by the outer loss.

        Arguments:

            functionals (:class:`~kerbil.algorithms.functional_algorithms.FunctionalSet`):
                the linearized equations, conditions and observations at the
                validation points.

            values (numpy.ndarray): the target value of each row.

            kinds (numpy.ndarray): the kind of each row ('interior', 'boundary' or
                'observation').

            point_ids (numpy.ndarray): the index of the validation point of each row,
                within the points of the same kind.
        """
        self.functionals = functionals
        self.values = values
        self.kinds = kinds
        self.point_ids = point_ids

    def count(self, kind):
        # type: (str) -> int
        """
        Returns the number of distinct validation points of a kind.
        """
        ids = self.point_ids[self.kinds == kind]
        return int(numpy.unique(ids).size)


Batch = collections.namedtuple("Batch", ["functionals", "values", "weights"])


def build_targets(
    problem,
    previous,
    validation_interior,
    validation_boundary=None,
    validation_tags=None,
    observations=None,
):
    # type: (base.Problem, Any, numpy.ndarray, Optional[numpy.ndarray], Optional[numpy.ndarray], Optional[named_tuples.Observations]) -> ValidationTargets
    """
    Builds the validation rows linearized around a state.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        previous (Union[GnState, ZeroState]): the linearization state.

        validation_interior (numpy.ndarray): the interior validation points.

        validation_boundary (Optional[numpy.ndarray]): the boundary validation
            points, or None to leave the conditions out of the loss. Defaults to
            None.

        validation_tags (Optional[numpy.ndarray]): the face tag of each boundary
            validation point. Defaults to None.

        observations (Optional[:class:`~kerbil.utils.named_tuples.Observations`]):
            noisy observations of component 0. Defaults to None.

    Returns:

        ValidationTargets: the rows.
    """
    features = previous.features_at(validation_interior, problem.features())
    blocks, values = problem.interior_blocks(validation_interior, features)
    num_points = validation_interior.shape[0]
    kinds = [numpy.full(values.shape[0], INTERIOR, dtype=object)]
    point_ids = [numpy.tile(numpy.arange(num_points), len(blocks))]
    all_values = [values]
    if validation_boundary is not None and validation_boundary.shape[0] > 0:
        boundary_blocks, boundary_values, boundary_ids = problem.boundary_blocks(
            validation_boundary, validation_tags
        )
        blocks.extend(boundary_blocks)
        all_values.append(boundary_values)
        kinds.append(numpy.full(boundary_values.shape[0], BOUNDARY, dtype=object))
        point_ids.append(boundary_ids)
    if observations is not None:
        blocks.extend(problem.observation_blocks(observations.points))
        all_values.append(numpy.asarray(observations.values, dtype=numpy.float64))
        kinds.append(numpy.full(observations.points.shape[0], OBSERVATION, dtype=object))
        point_ids.append(numpy.arange(observations.points.shape[0]))

    return ValidationTargets(
        functionals=functional_algorithms.FunctionalSet(
            blocks, problem.num_components, check_duplicates=False
        ),
        values=numpy.concatenate(all_values),
        kinds=numpy.concatenate(kinds),
        point_ids=numpy.concatenate(point_ids),
    )


class OuterObjective(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, kernels, inner, targets, config):
        # type: (kernel_algorithms.ComponentKernels, inner_solver.LinearizedInner, ValidationTargets, named_tuples.RunConfig) -> None
        """
        The linearized outer loss of one Gauss-Newton iteration.

        For hyperparameters theta, the candidate state is the solution of the inner
        problem linearized around the current state, and the loss is the weighted
        sum of the squared linearized residuals of the candidate at the validation
        rows, plus the hyperparameter penalty.

        Arguments:

            kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
                the kernels.

            inner (:class:`~kerbil.processing_layer.inner_solver.LinearizedInner`):
                the linearized inner problem.

            targets (ValidationTargets): the linearized validation rows.

            config (:class:`~kerbil.utils.named_tuples.RunConfig`): the run
                settings.
        """
        self.kernels = kernels
        self.inner = inner
        self.targets = targets
        self.config = config

    def _kind_weights(self, kind, count):
        # type: (str, int) -> float
        if kind == INTERIOR:
            return 1.0 / count
        if kind == BOUNDARY:
            return self.config.boundary_weight / count
        return self.config.data_weight

    def _make_batch(self, chosen):
        # type: (Dict[str, Optional[numpy.ndarray]]) -> Batch
        targets = self.targets
        mask = numpy.zeros(targets.values.shape[0], dtype=bool)
        weights = numpy.zeros(targets.values.shape[0])
        for kind in (INTERIOR, BOUNDARY, OBSERVATION):
            of_kind = targets.kinds == kind
            if not numpy.any(of_kind):
                continue
            points = chosen.get(kind)
            selected = of_kind if points is None else of_kind & numpy.isin(
                targets.point_ids, points
            )
            count = targets.count(kind) if points is None else len(points)
            if count == 0:
                continue
            mask |= selected
            weights[selected] = self._kind_weights(kind, count)
        rows = numpy.flatnonzero(mask)
        return Batch(
            functionals=targets.functionals.subset(rows),
            values=targets.values[rows],
            weights=weights[rows],
        )

    def full_batch(self):
        # type: () -> Batch
        """
        Returns all the validation rows.
        """
        return self._make_batch({})

    def batch(self, rng):
        # type: (numpy.random.Generator) -> Batch
        """
        Draws a mini-batch of validation points without replacement.

        All the rows of a drawn point are used (one per equation or condition).
        Observation rows are always included.
        """
        chosen = {}  # type: Dict[str, Optional[numpy.ndarray]]
        for kind, size in (
            (INTERIOR, self.config.batch_interior),
            (BOUNDARY, self.config.batch_boundary),
        ):
            available = self.targets.count(kind)
            if available == 0:
                continue
            chosen[kind] = numpy.sort(
                rng.choice(available, size=min(size, available), replace=False)
            )
        return self._make_batch(chosen)


_Evaluation = collections.namedtuple(
    "_Evaluation", ["loss", "state", "cross", "residual", "penalty_gradient"]
)


def _evaluate(objective, params, batch):
    # type: (OuterObjective, Any, Batch) -> _Evaluation
    raw = kernel_algorithms.raw_values(params)
    state = inner_solver.solve_inner(
        objective.inner, objective.kernels, raw, objective.config.nugget
    )
    cross = functional_algorithms.cross_matrix(
        objective.kernels, raw, batch.functionals, state.functionals
    )
    residual = cross.dot(state.coefficients) - batch.values
    penalty, penalty_gradient = optimization_algorithms.regularization_penalty(
        raw, objective.config.regularization, objective.config.regularizer
    )
    loss = float(numpy.sum(batch.weights * residual ** 2)) + penalty
    return _Evaluation(loss, state, cross, residual, penalty_gradient)


def outer_loss(objective, params, batch):
    # type: (OuterObjective, Any, Batch) -> float
    """
    Evaluates the linearized outer loss.

    Arguments:

        objective (OuterObjective): the loss of the current Gauss-Newton iteration.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        batch (Batch): the validation rows and their weights.

    Returns:

        float: the loss.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilRejectedThetaError`: if the inner
            system cannot be solved for these hyperparameters.
    """
    return _evaluate(objective, params, batch).loss


def hypergrad_tangent(objective, params, batch, limit=TANGENT_LIMIT):
    # type: (OuterObjective, Any, Batch, int) -> Tuple[float, numpy.ndarray]
    """
    Computes the hypergradient with one tangent per hyperparameter.

    With z = K^-1 c the inner coefficients and r = V z - t the residuals, the
    derivative along direction p is dz = -K^-1 (dK_p z) and dr = dV_p z + V dz.

    Arguments:

        objective (OuterObjective): the loss of the current Gauss-Newton iteration.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        batch (Batch): the validation rows and their weights.

        limit (int): the largest number of hyperparameters accepted. Defaults to 16.

    Returns:

        Tuple[float, numpy.ndarray]: the loss and its gradient.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilUseAdjointError`: if there are more
            hyperparameters than the limit.
    """
    raw = kernel_algorithms.raw_values(params)
    if raw.shape[0] > limit:
        raise exceptions.KerbilUseAdjointError(
            "Tangent hypergradients are limited to {0} hyperparameters, this kernel "
            "has {1}: use adjoint hypergradients.".format(limit, raw.shape[0])
        )
    evaluation = _evaluate(objective, raw, batch)
    state = evaluation.state
    directions = numpy.eye(raw.shape[0])
    gram_products = functional_algorithms.gram_tangent_products(
        objective.kernels, raw, state.functionals, directions, state.coefficients
    )
    coefficient_tangents = -state.solve_system(gram_products.T)
    residual_tangents = functional_algorithms.cross_tangent_products(
        objective.kernels,
        raw,
        batch.functionals,
        state.functionals,
        directions,
        state.coefficients,
    ) + evaluation.cross.dot(coefficient_tangents).T
    gradient = 2.0 * residual_tangents.dot(batch.weights * evaluation.residual)

    return evaluation.loss, gradient + evaluation.penalty_gradient


def hypergrad_adjoint(objective, params, batch):
    # type: (OuterObjective, Any, Batch) -> Tuple[float, numpy.ndarray]
    """
    Computes the hypergradient in reverse mode.

    The cotangent of the residuals, 2 w r, is pulled back to the cross matrix
    (outer product with z) and to the coefficients (V^T times it). A single solve
    mu = K^-1 (V^T 2 w r) then gives the cotangent of the Gram matrix, -mu z^T.

    Arguments:

        objective (OuterObjective): the loss of the current Gauss-Newton iteration.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        batch (Batch): the validation rows and their weights.

    Returns:

        Tuple[float, numpy.ndarray]: the loss and its gradient.
    """
    raw = kernel_algorithms.raw_values(params)
    evaluation = _evaluate(objective, raw, batch)
    state = evaluation.state
    residual_cotangent = 2.0 * batch.weights * evaluation.residual
    coefficient_cotangent = evaluation.cross.T.dot(residual_cotangent)
    adjoint = state.solve_system(coefficient_cotangent)
    gradient = functional_algorithms.cross_vjp(
        objective.kernels,
        raw,
        batch.functionals,
        state.functionals,
        numpy.outer(residual_cotangent, state.coefficients),
    ) + functional_algorithms.gram_vjp(
        objective.kernels,
        raw,
        state.functionals,
        -numpy.outer(adjoint, state.coefficients),
    )

    return evaluation.loss, gradient + evaluation.penalty_gradient


def hypergrad_fd(objective, params, batch, step=1e-5, limit=FD_LIMIT, coordinates=None):
    # type: (OuterObjective, Any, Batch, float, int, Optional[Sequence[int]]) -> Tuple[float, numpy.ndarray]
    """
    Computes the hypergradient by central finite differences.

    Arguments:

        objective (OuterObjective): the loss of the current Gauss-Newton iteration.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters.

        batch (Batch): the validation rows and their weights.

        step (float): the finite-difference step. Defaults to 1e-5.

        limit (int): the largest number of differentiated coordinates. Defaults to
            64.

        coordinates (Optional[Sequence[int]]): the coordinates to differentiate, or
            None for all of them. Defaults to None.

    Returns:

        Tuple[float, numpy.ndarray]: the loss and the derivatives along the
        requested coordinates (in the order given).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilGradientGuardError`: if more
            coordinates than the limit are requested.
    """
    raw = kernel_algorithms.raw_values(params)
    if coordinates is None:
        coordinates = range(raw.shape[0])
    coordinates = list(coordinates)
    if len(coordinates) > limit:
        raise exceptions.KerbilGradientGuardError(
            "Finite differences over {0} coordinates exceed the limit of {1}.".format(
                len(coordinates), limit
            )
        )
    gradient = numpy.zeros(len(coordinates))
    for position, coordinate in enumerate(coordinates):
        forward = raw.copy()
        forward[coordinate] += step
        backward = raw.copy()
        backward[coordinate] -= step
        gradient[position] = (
            outer_loss(objective, forward, batch) - outer_loss(objective, backward, batch)
        ) / (2.0 * step)

    return outer_loss(objective, raw, batch), gradient


def hypergradient(objective, params, batch):
    # type: (OuterObjective, Any, Batch) -> Tuple[float, numpy.ndarray]
    """
    Computes the hypergradient in the mode selected by the run settings.
    """
    mode = objective.config.gradient
    if mode == "tangent":
        return hypergrad_tangent(objective, params, batch)
    if mode == "fd":
        return hypergrad_fd(objective, params, batch, step=objective.config.fd_step)
    return hypergrad_adjoint(objective, params, batch)


def validation_loss(
    problem,
    state,
    validation_interior,
    config,
    validation_boundary=None,
    validation_tags=None,
    observations=None,
):
    # type: (base.Problem, Any, numpy.ndarray, named_tuples.RunConfig, Optional[numpy.ndarray], Optional[numpy.ndarray], Optional[named_tuples.Observations]) -> float
    """
    Evaluates the nonlinear residual loss of a state on the validation points.

    The loss is the mean over the interior points of the squared residuals of all
    equations, plus the weighted mean over the boundary points of the squared
    violations of the conditions, plus the weighted squared observation misfits.
    """
    features = state.features_at(validation_interior, problem.features())
    loss = float(numpy.mean(numpy.sum(problem.residual(features) ** 2, axis=1)))
    if (
        validation_boundary is not None
        and validation_boundary.shape[0] > 0
        and config.boundary_weight > 0
    ):
        boundary_features = state.features_at(
            validation_boundary, problem.boundary_features()
        )
        residual, _ = problem.boundary_residual(
            validation_boundary, validation_tags, boundary_features
        )
        loss += config.boundary_weight * float(numpy.sum(residual ** 2)) / (
            validation_boundary.shape[0]
        )
    if observations is not None and config.data_weight > 0:
        observed = state.features_at(
            observations.points, {problem.component_names[0]: ((0,) * problem.dimension,)}
        ).values[problem.component_names[0]][(0,) * problem.dimension]
        loss += config.data_weight * float(numpy.sum((observed - observations.values) ** 2))

    return loss


class RunReport(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, problem_name, initial_params, config):
        # type: (str, kernel_algorithms.ParamVector, named_tuples.RunConfig) -> None
        """
        The outcome of a bilevel run.

        Arguments:

            problem_name (str): the name of the problem.

            initial_params (:class:`~kerbil.algorithms.kernel_algorithms.ParamVector`):
                the initial hyperparameters.

            config (:class:`~kerbil.utils.named_tuples.RunConfig`): the run settings.
        """
        self.problem_name = problem_name
        self.initial_params = initial_params
        self.final_params = initial_params
        self.config = config
        self.records = []  # type: List[named_tuples.IterationRecord]
        self.stopped_early = False
        self.seconds = 0.0
        self.state = None  # type: Any

    def theta_trajectory(self):
        # type: () -> List[Dict[str, Any]]
        """
        Returns the constrained hyperparameters after every iteration.
        """
        return [record.theta for record in self.records]

    def to_dict(self):
        # type: () -> Dict[str, Any]
        """
        Returns the report as JSON-serializable data.
        """
        return collections.OrderedDict(
            [
                ("problem", self.problem_name),
                ("config", self.config._asdict()),
                ("initial_theta", self.initial_params.to_dict()),
                ("initial_raw", self.initial_params.raw.tolist()),
                ("final_theta", self.final_params.to_dict()),
                ("final_raw", self.final_params.raw.tolist()),
                ("adam_moments_persist", True),
                ("stopped_early", self.stopped_early),
                ("iterations", [_record_dict(record) for record in self.records]),
                ("seconds", self.seconds),
            ]
        )


def _record_dict(record):
    # type: (named_tuples.IterationRecord) -> Dict[str, Any]
    return collections.OrderedDict(
        (key, _json_number(value)) for key, value in record._asdict().items()
    )


def _json_number(value):
    # type: (Any) -> Any
    if isinstance(value, float) and not numpy.isfinite(value):
        return str(value)
    return value


def _log(message, verbose):
    # type: (str, bool) -> None
    if verbose:
        print(message)
        sys.stdout.flush()


def run(
    problem,
    kernels,
    params,
    layout,
    config,
    rng,
    observations=None,
    callback=None,
    verbose=True,
):
    # type: (base.Problem, kernel_algorithms.ComponentKernels, kernel_algorithms.ParamVector, named_tuples.CollocationLayout, named_tuples.RunConfig, numpy.random.Generator, Optional[named_tuples.Observations], Optional[Callable[[int, OuterObjective, numpy.ndarray], None]], bool) -> RunReport
    """
    Learns the kernel hyperparameters.

    At every Gauss-Newton iteration k, the inner problem is linearized around the
    state u_k, the hyperparameters are updated by 'adam_steps' Adam steps on
    mini-batches of the linearized validation loss, and the next state is the
    solution of the linearized problem with the updated hyperparameters. The Adam
    moments persist across iterations. In 'otd' mode the validation points are
    resampled at every iteration.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels.

        params (:class:`~kerbil.algorithms.kernel_algorithms.ParamVector`): the
            initial hyperparameters.

        layout (:class:`~kerbil.utils.named_tuples.CollocationLayout`): the
            collocation and validation points.

        config (:class:`~kerbil.utils.named_tuples.RunConfig`): the run settings.

        rng (numpy.random.Generator): the generator of the mini-batches and of the
            resampled validation points.

        observations (Optional[:class:`~kerbil.utils.named_tuples.Observations`]):
            noisy observations of component 0. Defaults to None.

        callback (Optional[Callable]): called after the updates of every iteration
            with the iteration index, the frozen linearized loss and the updated
            unconstrained hyperparameters. Defaults to None.

        verbose (bool): whether to print one line per iteration. Defaults to True.

    Returns:

        RunReport: the trajectory and the learned hyperparameters.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilAbortedRunError`: if more than
            'max_rejections' consecutive updates are rejected, or if the validation
            loss stops being finite.
    """
    check_run_config(config)
    start_time = time.time()
    report = RunReport(problem.name, params, config)
    raw = params.raw.copy()
    adam = optimization_algorithms.initial_adam_state(raw.shape[0])
    state = inner_solver.ZeroState(kernels)  # type: Any
    validation_interior = layout.validation_interior
    validation_boundary = layout.validation_boundary
    validation_tags = layout.validation_boundary_tags
    use_boundary = config.boundary_weight > 0
    previous_loss = None  # type: Optional[float]
    for iteration in range(config.gn_iters):
        iteration_start = time.time()
        if config.mode == "otd" and iteration > 0:
            validation_interior = problem.sample_interior(validation_interior.shape[0], rng)
            validation_boundary, validation_tags = problem.sample_boundary(
                validation_boundary.shape[0], rng
            )
        inner = inner_solver.assemble(
            problem, state, layout.interior, layout.boundary, layout.boundary_tags, observations
        )
        targets = build_targets(
            problem,
            state,
            validation_interior,
            validation_boundary if use_boundary else None,
            validation_tags if use_boundary else None,
            observations,
        )
        objective = OuterObjective(kernels, inner, targets, config)
        iteration_raw = raw.copy()
        accepted_raw, accepted_adam = raw, adam
        consecutive = applied = skipped = rejected = 0
        last_loss = float("nan")
        for _ in range(config.adam_steps):
            batch = objective.batch(rng)
            try:
                loss, gradient = hypergradient(objective, raw, batch)
            except exceptions.KerbilRejectedThetaError as exc:
                rejected += 1
                consecutive += 1
                _log("Rejected hyperparameters: {0}".format(exc), verbose)
                if consecutive > config.max_rejections:
                    raise_from(
                        exc=exceptions.KerbilAbortedRunError(
                            "{0} consecutive hyperparameter updates were rejected at "
                            "Gauss-Newton iteration {1}.".format(consecutive, iteration)
                        ),
                        cause=exc,
                    )
                raw, adam = accepted_raw, accepted_adam
                continue
            consecutive = 0
            accepted_raw, accepted_adam = raw, adam
            last_loss = loss
            try:
                adam, raw = optimization_algorithms.adam_step(
                    adam,
                    raw,
                    gradient,
                    config.learning_rate,
                    beta_1=config.beta1,
                    beta_2=config.beta2,
                    epsilon=config.epsilon,
                )
                applied += 1
            except exceptions.KerbilNonFiniteGradientError as exc:
                skipped += 1
                _log("Skipped update: {0}".format(exc), verbose)
        try:
            new_state = inner_solver.solve_inner(inner, kernels, raw, config.nugget)
        except exceptions.KerbilRejectedThetaError:
            rejected += 1
            raw, adam = accepted_raw, accepted_adam
            try:
                new_state = inner_solver.solve_inner(inner, kernels, raw, config.nugget)
            except exceptions.KerbilRejectedThetaError as exc:
                raise_from(
                    exc=exceptions.KerbilAbortedRunError(
                        "No solvable hyperparameters at Gauss-Newton iteration "
                        "{0}.".format(iteration)
                    ),
                    cause=exc,
                )
        if callback is not None:
            callback(iteration, objective, raw)
        loss = validation_loss(
            problem,
            new_state,
            validation_interior,
            config,
            validation_boundary,
            validation_tags,
            observations,
        )
        if not numpy.isfinite(loss):
            raise exceptions.KerbilAbortedRunError(
                "The validation loss diverged at Gauss-Newton iteration {0}.".format(
                    iteration
                )
            )
        current = params.with_raw(raw)
        record = named_tuples.IterationRecord(
            index=iteration,
            theta=current.to_dict(),
            raw=raw.tolist(),
            linearized_loss=last_loss,
            validation_loss=loss,
            adam_steps=applied,
            skipped_steps=skipped,
            rejected_steps=rejected,
            constraint_residual=new_state.constraint_residual(inner.rhs),
            seconds=time.time() - iteration_start,
        )
        report.records.append(record)
        report.final_params = current
        _log(
            "Gauss-Newton iteration {0}: theta {1}, linearized loss {2:.6e}, "
            "validation loss {3:.6e}, {4:.2f} s".format(
                iteration,
                json.dumps(record.theta, sort_keys=True),
                last_loss,
                loss,
                record.seconds,
            ),
            verbose,
        )
        state = new_state
        if config.tolerance > 0:
            if config.convergence_metric == "theta_change":
                change = float(numpy.max(numpy.abs(raw - iteration_raw)))
            else:
                change = (
                    float("inf") if previous_loss is None else abs(loss - previous_loss)
                )
            if change <= config.tolerance:
                report.stopped_early = True
                _log("Converged after {0} iterations.".format(iteration + 1), verbose)
                break
        previous_loss = loss

    report.state = state
    report.seconds = time.time() - start_time
    return report


def landscape_scan(objective, params, name, values, batch=None):
    # type: (OuterObjective, kernel_algorithms.ParamVector, str, Sequence[float], Optional[Batch]) -> numpy.ndarray
    """
    Scans the linearized outer loss along one hyperparameter.

    Arguments:

        objective (OuterObjective): the frozen loss of a Gauss-Newton iteration.

        params (:class:`~kerbil.algorithms.kernel_algorithms.ParamVector`): the
            hyperparameters; all but the scanned one keep their values.

        name (str): the name of a scalar hyperparameter.

        values (Sequence[float]): the constrained values to scan.

        batch (Optional[Batch]): the validation rows, or None for all of them.
            Defaults to None.

    Returns:

        numpy.ndarray: the loss at each value (infinite where the inner system
        cannot be solved).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
            hyperparameter is not a scalar.
    """
    slot = params.slot(name)
    if slot.shape:
        raise exceptions.KerbilDimensionMismatchError(
            "Only scalar hyperparameters can be scanned, {0} has shape {1}.".format(
                name, slot.shape
            )
        )
    if batch is None:
        batch = objective.full_batch()
    losses = numpy.empty(len(values))
    for position, value in enumerate(values):
        raw = params.raw.copy()
        raw[slot.start] = numpy.log(value) if slot.transform == "exp" else value
        try:
            losses[position] = outer_loss(objective, raw, batch)
        except exceptions.KerbilRejectedThetaError:
            losses[position] = numpy.inf

    return losses
