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
KerBil experiments.

This module contains the experiment driver: it turns a configuration into a
problem, kernels and point sets, runs the bilevel hyperparameter learning, solves
the problem from scratch with the learned hyperparameters, measures the errors
against a reference solution and writes the results. It also implements the gradient
check, the hyperparameter sweep and the comparison of several runs.
"""
from __future__ import absolute_import, division, print_function

import collections
import itertools
import json
import math
import os.path
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from future.utils import raise_from

from kerbil.algorithms import (
    generic_algorithms as gen_algs,
    kernel_algorithms as kern_algs,
    reference_algorithms as ref_algs,
)
from kerbil.parallelization_layer import sweep_pool
from kerbil.problems import base  # pylint: disable=unused-import
from kerbil.processing_layer import bilevel, inner_solver
from kerbil.utils import (  # pylint: disable=unused-import
    dynamic_import,
    exceptions,
    named_tuples,
    parameters,
    report_writer,
)


# Indexes of the random streams derived from the master seed.
LAYOUT_STREAM = 0
BATCH_STREAM = 1
KERNEL_STREAM = 2
OBSERVATION_STREAM = 3
RESAMPLE_STREAM = 4
GRADCHECK_STREAM = 5

GRADCHECK_MODE_TOLERANCE = 1e-8
GRADCHECK_ANALYTIC_TOLERANCE = 1e-5
GRADCHECK_SAMPLED_TOLERANCE = 1e-4
GRADCHECK_SAMPLED_COORDINATES = 20

DEFAULT_BATCH = 200


def _log(message):
    # type: (str) -> None
    print(message)
    sys.stdout.flush()


def build_kernels(problem, tables):
    # type: (base.Problem, Dict[str, Any]) -> kern_algs.ComponentKernels
    """
    Creates the kernels of the components of a problem.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        tables (Dict[str, Any]): the [kernels] group, one table per component.

    Returns:

        :class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`: the kernels.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if a table
            names a component that the problem does not have.

        :class:`~kerbil.utils.exceptions.KerbilMissingParameterGroupError`: if a
            component has no table.
    """
    for name in tables:
        if name not in problem.component_names:
            raise exceptions.KerbilConfigurationSchemaError(
                "Problem {0} has no component {1} (components: {2}).".format(
                    problem.name, name, ", ".join(problem.component_names)
                )
            )
    kernels = []
    for name in problem.component_names:
        if name not in tables:
            raise exceptions.KerbilMissingParameterGroupError(
                "Parameter group [kernels.{0}] is not in the configuration file".format(
                    name
                )
            )
        kernels.append(kern_algs.build_kernel(tables[name], problem.dimension))

    return kern_algs.ComponentKernels(problem.component_names, kernels)


def relative_gap(first, second):
    # type: (numpy.ndarray, numpy.ndarray) -> float
    """
    Returns the largest difference between two vectors, relative to their largest
    entry.
    """
    first = numpy.asarray(first, dtype=numpy.float64)
    second = numpy.asarray(second, dtype=numpy.float64)
    scale = max(
        float(numpy.max(numpy.abs(first), initial=0.0)),
        float(numpy.max(numpy.abs(second), initial=0.0)),
    )
    difference = float(numpy.max(numpy.abs(first - second), initial=0.0))
    if scale == 0.0:
        return difference
    return difference / scale


def lengthscale_summaries(problem_name, points, field):
    # type: (str, numpy.ndarray, numpy.ndarray) -> Dict[str, float]
    """
    Summarizes a learned lengthscale field where the problem has a known feature.

    Eikonal: the mean lengthscale within 0.1 of the centre of the domain and within
    0.1 of its boundary. Burgers: the spatial lengthscale near (t, x) = (1, 0) and
    its median over the domain.

    Arguments:

        problem_name (str): the name of the problem.

        points (numpy.ndarray): the grid points, shape (n, 2).

        field (numpy.ndarray): the lengthscales, shape (n, outputs).

    Returns:

        Dict[str, float]: the summaries (empty for other problems).
    """
    summaries = collections.OrderedDict()  # type: Dict[str, float]
    if problem_name == "eikonal":
        centre = numpy.linalg.norm(points - 0.5, axis=1) < 0.1
        wall = numpy.min(numpy.minimum(points, 1.0 - points), axis=1) < 0.1
        summaries["centre_mean"] = float(numpy.mean(field[centre, 0]))
        summaries["boundary_band_mean"] = float(numpy.mean(field[wall, 0]))
    elif problem_name == "burgers":
        spatial = field[:, -1]
        near = (numpy.abs(points[:, 0] - 1.0) <= 0.1) & (numpy.abs(points[:, 1]) <= 0.1)
        summaries["near_shock_mean"] = float(numpy.mean(spatial[near]))
        summaries["domain_median"] = float(numpy.median(spatial))
    return summaries


class Experiment(object):
    """
    See documentation for the '__init__' function.
    """

    def __init__(
        self,
        experiment_parameters,
        seed=None,
        output_directory=None,
        num_threads=1,
        deterministic=True,
        verbose=True,
    ):
        # type: (parameters.ExperimentParams, Optional[int], Optional[str], int, bool, bool) -> None
        """
        A KerBil experiment.

        All the settings are read and validated when the experiment is created,
        before any computation starts.

        Arguments:

            experiment_parameters (:class:`~kerbil.utils.parameters.ExperimentParams`):
                an object storing the experiment parameters from the configuration
                file.

            seed (Optional[int]): overrides the master seed of the configuration.
                Defaults to None.

            output_directory (Optional[str]): overrides the output directory of the
                configuration. Defaults to None.

            num_threads (int): the number of sweep worker threads. Defaults to 1.

            deterministic (bool): whether sweep results are collected in cell order.
                Defaults to True.

            verbose (bool): whether to print one line per Gauss-Newton iteration.
                Defaults to True.
        """
        if seed is not None:
            experiment_parameters.set_param("kerbil", "seed", seed)
        if output_directory is not None:
            experiment_parameters.set_param("kerbil", "output_directory", output_directory)
        self._params = experiment_parameters
        self._num_threads = num_threads
        self._deterministic = deterministic
        self._verbose = verbose

        problem_name = experiment_parameters.get_param(
            group="kerbil", parameter="problem", type_=str, required=True
        )
        self.seed = experiment_parameters.get_param(
            group="kerbil", parameter="seed", type_=int, default=0
        )
        self.label = experiment_parameters.get_param(
            group="kerbil", parameter="label", type_=str, default=problem_name
        )
        self.output_directory = experiment_parameters.get_param(
            group="kerbil",
            parameter="output_directory",
            type_=str,
            default=os.path.join("runs", self.label),
        )
        problem_builder = dynamic_import.get_problem_builder(problem_name)
        self.problem = problem_builder(experiment_parameters.get_group("problem") or None)
        self.kernels = build_kernels(
            self.problem, experiment_parameters.get_group("kernels")
        )

        self.counts = self._read_counts()
        self.run_config = self._read_run_config()

        self._final_gn_iters = experiment_parameters.get_param(
            group="final_solve", parameter="gn_iters", type_=int, default=10
        )
        self._final_nugget = experiment_parameters.get_param(
            group="final_solve",
            parameter="nugget",
            type_=float,
            default=self.run_config.nugget,
        )
        self._include_validation = experiment_parameters.get_param(
            group="final_solve", parameter="include_validation", type_=bool, default=False
        )
        self._resample = experiment_parameters.get_param(
            group="final_solve", parameter="resample", type_=bool, default=False
        )
        self._reuse_cases = experiment_parameters.get_param(
            group="final_solve", parameter="reuse_cases", type_=list, default=[]
        )
        if self._reuse_cases and not hasattr(self.problem, "with_initial_case"):
            raise exceptions.KerbilConfigurationSchemaError(
                "Problem {0} has no alternative initial conditions.".format(
                    self.problem.name
                )
            )

        reference = "reference"
        self._reference_settings = dict(
            resolution=experiment_parameters.get_param(reference, "resolution", type_=int),
            time_step=experiment_parameters.get_param(reference, "time_step", type_=float),
            time_samples=experiment_parameters.get_param(
                reference, "time_samples", type_=int
            ),
            cache_directory=experiment_parameters.get_param(
                reference, "cache_directory", type_=str
            ),
            check=experiment_parameters.get_param(
                reference, "check", type_=bool, default=False
            ),
            tolerance=experiment_parameters.get_param(
                reference, "tolerance", type_=float, default=1e-4
            ),
        )
        self._evaluation_grid = experiment_parameters.get_param(
            reference, "evaluation_grid", type_=int, default=100
        )
        self._field_resolution = experiment_parameters.get_param(
            group="report", parameter="field_resolution", type_=int, default=50
        )
        self._references = {}  # type: Dict[str, ref_algs.GridFunction]

    def _read_counts(self):
        # type: () -> Dict[str, int]
        counts = collections.OrderedDict()  # type: Dict[str, int]
        for name, required in (
            ("interior", True),
            ("boundary", bool(self.problem.boundary_region.faces)),
            ("validation_interior", True),
            ("validation_boundary", False),
        ):
            counts[name] = self._params.get_param(
                group="points", parameter=name, type_=int, required=required, default=0
            )
        if self.problem.has_observations:
            counts["observations"] = self._params.get_param(
                group="points",
                parameter="observations",
                type_=int,
                default=self.problem.num_observations,
            )
        for name, count in counts.items():
            if count < 0:
                raise exceptions.KerbilInvalidCountsError(
                    "The number of {0} points cannot be negative.".format(name)
                )
        return counts

    def _read_run_config(self):
        # type: () -> named_tuples.RunConfig
        data_weight = 0.0
        if self.problem.has_observations:
            noise_std = self.problem.noise_std
            data_weight = (
                1.0 / (noise_std ** 2 * self.counts["validation_interior"])
                if noise_std > 0
                else 1.0
            )
        defaults = bilevel.default_run_config(
            boundary_weight=self.problem.default_boundary_weight,
            data_weight=data_weight,
            batch_interior=min(DEFAULT_BATCH, self.counts["validation_interior"]),
            batch_boundary=min(DEFAULT_BATCH, self.counts["validation_boundary"]),
        )
        overrides = {}
        for field in named_tuples.RunConfig._fields:
            value = self._params.get_param(
                group="bilevel",
                parameter=field,
                type_=parameters.SCHEMA["bilevel"][field],
            )
            if value is not None:
                overrides[field] = value
        config = defaults._replace(**overrides)
        bilevel.check_run_config(config)
        for batch, count in (
            ("batch_interior", "validation_interior"),
            ("batch_boundary", "validation_boundary"),
        ):
            if batch in overrides and overrides[batch] > self.counts[count] > 0:
                raise exceptions.KerbilConfigurationSchemaError(
                    "The {0} batch ({1}) is larger than the {2} set ({3}).".format(
                        batch, overrides[batch], count, self.counts[count]
                    )
                )
        return config

    def rng(self, stream):
        # type: (int) -> numpy.random.Generator
        """
        Returns the generator of one of the random streams of the experiment.
        """
        return gen_algs.make_rng(gen_algs.derive_seed(self.seed, stream))

    def layout(self):
        # type: () -> named_tuples.CollocationLayout
        """
        Samples the collocation and validation points.
        """
        return self.problem.collocation_layout(self.counts, self.rng(LAYOUT_STREAM))

    def initial_params(self):
        # type: () -> kern_algs.ParamVector
        """
        Returns the initial hyperparameters.
        """
        return self.kernels.initial_params(self.rng(KERNEL_STREAM))

    def reference(self, problem=None):
        # type: (Optional[base.Problem]) -> ref_algs.GridFunction
        """
        Returns the reference solution of the problem (or of a variant of it).
        """
        problem = problem or self.problem
        key = ref_algs.cache_key(
            problem,
            self._reference_settings["resolution"],
            self._reference_settings["time_step"],
            self._reference_settings["time_samples"],
        )
        if key not in self._references:
            _log("Computing the reference solution of {0}...".format(problem.name))
            self._references[key] = ref_algs.reference_solution(
                problem, **self._reference_settings
            )
        return self._references[key]

    def observations(self):
        # type: () -> Optional[named_tuples.Observations]
        """
        Generates the noisy observations of the problem, if it has any.
        """
        if not self.problem.has_observations:
            return None
        seed = gen_algs.derive_seed(self.seed, OBSERVATION_STREAM)
        return ref_algs.generate_observations(
            self.problem,
            self.reference(),
            self.counts["observations"],
            self.problem.noise_std,
            gen_algs.make_rng(seed),
            seed=self.seed,
        )

    def final_points(self, layout):
        # type: (named_tuples.CollocationLayout) -> Tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
        """
        Returns the interior points, boundary points and boundary tags of the
        from-scratch solve.
        """
        if self._resample:
            layout = self.problem.collocation_layout(
                {
                    "interior": self.counts["interior"],
                    "boundary": self.counts["boundary"],
                    "validation_interior": self.counts["validation_interior"],
                    "validation_boundary": self.counts["validation_boundary"],
                },
                self.rng(RESAMPLE_STREAM),
            )
        if not self._include_validation:
            return layout.interior, layout.boundary, layout.boundary_tags
        return (
            numpy.concatenate([layout.interior, layout.validation_interior]),
            numpy.concatenate([layout.boundary, layout.validation_boundary]),
            numpy.concatenate([layout.boundary_tags, layout.validation_boundary_tags]),
        )

    def final_solve(self, problem, params, points, observations):
        # type: (base.Problem, kern_algs.ParamVector, Tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray], Optional[named_tuples.Observations]) -> Tuple[Any, List[float]]
        """
        Solves a problem from scratch with fixed hyperparameters.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilAbortedRunError`: if the inner
                system cannot be solved.
        """
        interior, boundary, tags = points

        def report_iteration(iteration, residual):
            # type: (int, float) -> None
            if self._verbose:
                _log(
                    "Final solve iteration {0}: largest residual {1:.6e}".format(
                        iteration, residual
                    )
                )

        try:
            return inner_solver.solve_from_scratch(
                problem,
                self.kernels,
                params,
                interior,
                boundary,
                tags,
                self._final_nugget,
                self._final_gn_iters,
                observations,
                callback=report_iteration,
            )
        except exceptions.KerbilRejectedThetaError as exc:
            raise_from(
                exc=exceptions.KerbilAbortedRunError(
                    "The from-scratch solve failed: {0}".format(exc)
                ),
                cause=exc,
            )

    def _error_rows(self, case, state, problem):
        # type: (str, Any, base.Problem) -> List[List[Any]]
        errors = ref_algs.error_metrics(
            state, problem, self.reference(problem), self._evaluation_grid
        )
        rows = []
        for component, metrics in errors.items():
            rows.append([case, component, metrics.l2, metrics.linf, metrics.rel_l2])
            _log(
                "Errors ({0}, {1}): l2 {2:.4e}, linf {3:.4e}, relative l2 "
                "{4:.4e}".format(case, component, metrics.l2, metrics.linf, metrics.rel_l2)
            )
        return rows

    def _lengthscale_fields(self, params):
        # type: (kern_algs.ParamVector) -> Tuple[Optional[numpy.ndarray], Optional[numpy.ndarray], Dict[str, Any]]
        _, points = gen_algs.uniform_grid(self.problem.box, self._field_resolution)
        fields = []
        summaries = collections.OrderedDict()  # type: Dict[str, Any]
        for index, (name, kernel) in enumerate(zip(self.kernels.names, self.kernels.kernels)):
            if not isinstance(kernel, kern_algs.GibbsMlp):
                continue
            field = kern_algs.lengthscale_field(
                kernel, params.raw[self.kernels.component_slice(index)], points
            )
            fields.append(field)
            summaries[name] = lengthscale_summaries(self.problem.name, points, field)
        if not fields:
            return None, None, summaries
        return points, numpy.concatenate(fields, axis=1), summaries

    def run(self):
        # type: () -> Dict[str, Any]
        """
        Runs the experiment and writes the result files.

        Returns:

            Dict[str, Any]: the content of the JSON report.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilAbortedRunError`: if the
                hyperparameter learning or the final solve cannot continue. A report
                describing the failure is written before the error is raised.
        """
        start_time = time.time()
        writer = report_writer.ReportWriter(
            self.output_directory, self.seed, self._params.echo()
        )
        _log("Starting KerBil with the following parameters:")
        _log(self._params.echo())

        layout = self.layout()
        observations = self.observations()
        if observations is not None:
            ref_algs.save_observations(writer.path("observations.h5"), observations)
        initial = self.initial_params()

        landscape_rows = []  # type: List[List[Any]]
        callback = None
        if self._params.has_group("landscape"):
            callback = self._landscape_callback(initial, landscape_rows)

        try:
            run_report = bilevel.run(
                self.problem,
                self.kernels,
                initial,
                layout,
                self.run_config,
                self.rng(BATCH_STREAM),
                observations=observations,
                callback=callback,
                verbose=self._verbose,
            )
        except exceptions.KerbilAbortedRunError as exc:
            writer.write_report(
                collections.OrderedDict(
                    [
                        ("label", self.label),
                        ("problem", self.problem.name),
                        ("status", "aborted"),
                        ("message", str(exc)),
                    ]
                )
            )
            raise

        learned = run_report.final_params
        _log("Learned hyperparameters: {0}".format(json.dumps(learned.to_dict())))
        points = self.final_points(layout)
        state, history = self.final_solve(self.problem, learned, points, observations)
        error_rows = self._error_rows("learned", state, self.problem)
        for case in self._reuse_cases:
            variant = self.problem.with_initial_case(case)
            variant_state, _ = self.final_solve(variant, learned, points, None)
            error_rows.extend(self._error_rows(case, variant_state, variant))

        field_points, field, summaries = self._lengthscale_fields(learned)
        report = collections.OrderedDict(
            [
                ("label", self.label),
                ("problem", self.problem.name),
                ("status", "completed"),
                ("run", run_report.to_dict()),
                (
                    "final_solve",
                    collections.OrderedDict(
                        [
                            ("gn_iters", self._final_gn_iters),
                            ("nugget", self._final_nugget),
                            ("interior", int(points[0].shape[0])),
                            ("boundary", int(points[1].shape[0])),
                            ("residual_history", history),
                        ]
                    ),
                ),
                (
                    "errors",
                    [
                        collections.OrderedDict(
                            zip(("case", "component", "l2", "linf", "rel_l2"), row)
                        )
                        for row in error_rows
                    ],
                ),
                ("lengthscale_summaries", summaries),
                ("seconds", time.time() - start_time),
            ]
        )
        writer.write_report(report)
        writer.write_trajectory(run_report)
        writer.write_errors(error_rows)
        if landscape_rows:
            writer.write_landscape(landscape_rows)
        if field is not None:
            writer.write_lengthscale_field(field_points, field)
        _log("Results written to {0}".format(self.output_directory))

        return report

    def _landscape_callback(self, initial, rows):
        # type: (kern_algs.ParamVector, List[List[Any]]) -> Any
        name = self._params.get_param(
            group="landscape", parameter="parameter", type_=str, required=True
        )
        initial.slot(name)
        iterations = self._params.get_param(
            group="landscape", parameter="gn_iterations", type_=list, default=[]
        )
        values = numpy.linspace(
            self._params.get_param(
                group="landscape", parameter="start", type_=float, required=True
            ),
            self._params.get_param(
                group="landscape", parameter="stop", type_=float, required=True
            ),
            self._params.get_param(
                group="landscape", parameter="points", type_=int, default=61
            ),
        )

        def scan(iteration, objective, raw):
            # type: (int, bilevel.OuterObjective, numpy.ndarray) -> None
            if iteration not in iterations:
                return
            losses = bilevel.landscape_scan(objective, initial.with_raw(raw), name, values)
            best = int(numpy.argmin(losses))
            _log(
                "Landscape of {0} at iteration {1}: minimum {2:.6e} at {3:.6g}".format(
                    name, iteration, losses[best], values[best]
                )
            )
            rows.extend([iteration, value, loss] for value, loss in zip(values, losses))

        return scan

    def gradcheck(self, derivative_scale=1.0):
        # type: (float) -> Dict[str, Any]
        """
        Compares the hypergradient modes on the configured problem.

        The loss is the linearized loss after one Gauss-Newton iteration at the
        initial hyperparameters, on one mini-batch. Kernels with at most 16
        hyperparameters are checked in all coordinates, tangent against adjoint and
        adjoint against finite differences; larger kernels are checked on 20
        randomly sampled coordinates, adjoint against finite differences.

        Arguments:

            derivative_scale (float): scales every analytic hyperparameter
                derivative. Any value other than 1.0 must make the check fail.
                Defaults to 1.0.

        Returns:

            Dict[str, Any]: the discrepancies and the verdict.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilGradientCheckError`: if a
                discrepancy exceeds its tolerance.
        """
        layout = self.layout()
        observations = self.observations()
        params = self.initial_params()
        self.kernels.set_parameter_derivative_scale(derivative_scale)
        try:
            state, _ = inner_solver.solve_from_scratch(
                self.problem,
                self.kernels,
                params,
                layout.interior,
                layout.boundary,
                layout.boundary_tags,
                self.run_config.nugget,
                1,
                observations,
            )
            inner = inner_solver.assemble(
                self.problem,
                state,
                layout.interior,
                layout.boundary,
                layout.boundary_tags,
                observations,
            )
            use_boundary = self.run_config.boundary_weight > 0
            targets = bilevel.build_targets(
                self.problem,
                state,
                layout.validation_interior,
                layout.validation_boundary if use_boundary else None,
                layout.validation_boundary_tags if use_boundary else None,
                observations,
            )
            objective = bilevel.OuterObjective(self.kernels, inner, targets, self.run_config)
            batch = objective.batch(self.rng(BATCH_STREAM))
            result = collections.OrderedDict()  # type: Dict[str, Any]
            _, adjoint = bilevel.hypergrad_adjoint(objective, params, batch)
            if params.size <= bilevel.TANGENT_LIMIT:
                coordinates = list(range(params.size))
                _, tangent = bilevel.hypergrad_tangent(objective, params, batch)
                result["tangent_adjoint_gap"] = relative_gap(tangent, adjoint)
                tolerance = GRADCHECK_ANALYTIC_TOLERANCE
            else:
                coordinates = sorted(
                    int(index)
                    for index in self.rng(GRADCHECK_STREAM).choice(
                        params.size,
                        size=min(GRADCHECK_SAMPLED_COORDINATES, params.size),
                        replace=False,
                    )
                )
                tolerance = GRADCHECK_SAMPLED_TOLERANCE
            _, finite_differences = bilevel.hypergrad_fd(
                objective,
                params,
                batch,
                step=self.run_config.fd_step,
                coordinates=coordinates,
            )
        finally:
            self.kernels.set_parameter_derivative_scale(1.0)

        result["adjoint_fd_gap"] = relative_gap(adjoint[coordinates], finite_differences)
        result["coordinates"] = coordinates
        result["tolerance"] = tolerance
        for position, coordinate in enumerate(coordinates):
            _log(
                "Coordinate {0}: adjoint {1: .10e}, finite differences {2: .10e}".format(
                    coordinate, adjoint[coordinate], finite_differences[position]
                )
            )
        if "tangent_adjoint_gap" in result:
            _log("Tangent/adjoint relative gap: {0:.3e}".format(result["tangent_adjoint_gap"]))
        _log("Adjoint/finite-difference relative gap: {0:.3e}".format(result["adjoint_fd_gap"]))
        result["passed"] = result["adjoint_fd_gap"] <= tolerance and (
            result.get("tangent_adjoint_gap", 0.0) <= GRADCHECK_MODE_TOLERANCE
        )
        if not result["passed"]:
            raise exceptions.KerbilGradientCheckError(
                "The hypergradients disagree (adjoint/finite differences {0:.3e}, "
                "tolerance {1:.1e}).".format(result["adjoint_fd_gap"], tolerance)
            )
        _log("Gradient check passed.")

        return result

    def sweep(self):
        # type: () -> List[List[Any]]
        """
        Solves the problem from scratch on a grid of hyperparameter values and point
        counts, and writes the errors to 'sweep.csv'.

        Every cell draws its points from its own generator, derived from the master
        seed and the cell index; cell 0 uses the points of the bilevel run.

        Returns:

            List[List[Any]]: the rows of the table.
        """
        name = self._params.get_param(
            group="sweep", parameter="parameter", type_=str, required=True
        )
        values = self._params.get_param(
            group="sweep", parameter="values", type_=list, required=True
        )
        interior_counts = self._params.get_param(
            group="sweep",
            parameter="interior_counts",
            type_=list,
            default=[self.counts["interior"]],
        )
        boundary_count = self._params.get_param(
            group="sweep",
            parameter="boundary_count",
            type_=int,
            default=self.counts["boundary"],
        )
        gn_iters = self._params.get_param(
            group="sweep", parameter="gn_iters", type_=int, default=self._final_gn_iters
        )
        nugget = self._params.get_param(
            group="sweep", parameter="nugget", type_=float, default=self._final_nugget
        )
        initial = self.initial_params()
        slot = initial.slot(name)
        if slot.shape:
            raise exceptions.KerbilConfigurationSchemaError(
                "Only scalar hyperparameters can be swept, {0} has shape {1}.".format(
                    name, slot.shape
                )
            )
        writer = report_writer.ReportWriter(
            self.output_directory, self.seed, self._params.echo()
        )
        reference = self.reference()
        observations = self.observations()
        cells = list(itertools.product(values, interior_counts))
        results = {}  # type: Dict[int, List[List[Any]]]

        def process(cell, rng):
            # type: (Tuple[float, int], numpy.random.Generator) -> List[List[Any]]
            value, interior_count = cell
            layout = self.problem.collocation_layout(
                {"interior": interior_count, "boundary": boundary_count}, rng
            )
            raw = initial.raw.copy()
            raw[slot.start] = math.log(value) if slot.transform == "exp" else value
            try:
                state, history = inner_solver.solve_from_scratch(
                    self.problem,
                    self.kernels,
                    raw,
                    layout.interior,
                    layout.boundary,
                    layout.boundary_tags,
                    nugget,
                    gn_iters,
                    observations,
                )
            except exceptions.KerbilRejectedThetaError:
                return [
                    [value, interior_count, component, float("nan"), float("nan"), float("nan")]
                    for component in self.problem.component_names
                ]
            errors = ref_algs.error_metrics(
                state, self.problem, reference, self._evaluation_grid
            )
            final_residual = history[-1] if history else float("nan")
            return [
                [value, interior_count, component, metrics.l2, metrics.linf, final_residual]
                for component, metrics in errors.items()
            ]

        def collect(index, rows):
            # type: (int, List[List[Any]]) -> None
            results[index] = rows
            if self._verbose:
                for row in rows:
                    _log(
                        "Sweep {0} = {1}, {2} interior points, {3}: l2 {4:.4e}".format(
                            name, row[0], row[1], row[2], row[3]
                        )
                    )

        engine = sweep_pool.SweepEngine(
            process_func=process,
            collect_func=collect,
            seed=self.seed,
            num_threads=self._num_threads,
            deterministic=self._deterministic,
        )
        engine.start(cells)
        rows = [row for index in sorted(results) for row in results[index]]
        writer.write_sweep(rows)

        return rows


def compare_reports(directories, output_directory):
    # type: (Sequence[str], str) -> Tuple[List[str], List[List[Any]]]
    """
    Aggregates the reports of several runs into one comparison table.

    Each row describes one run: its label, problem, seed and status, the final
    hyperparameters and the errors of every solved case and component. The table is
    written to 'comparison.csv' and printed as formatted text.

    Arguments:

        directories (Sequence[str]): the output directories of the runs.

        output_directory (str): the directory of the comparison table.

    Returns:

        Tuple[List[str], List[List[Any]]]: the column names and the rows.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilEmptyReportError`: if no report is
            found.
    """
    filenames = report_writer.find_reports(directories)
    columns = ["label", "problem", "seed", "status"]  # type: List[str]
    entries = []
    for filename in filenames:
        report = report_writer.read_json(filename)
        entry = collections.OrderedDict(
            (key, report.get(key)) for key in ("label", "problem", "seed", "status")
        )
        run = report.get("run")
        if run is not None:
            entry.update(report_writer.flatten_theta(run["final_theta"]))
            entry["gn_iters"] = len(run["iterations"])
        for error in report.get("errors", []):
            for metric in ("l2", "linf", "rel_l2"):
                entry["{0}:{1}:{2}".format(error["case"], error["component"], metric)] = error[
                    metric
                ]
        for key in entry:
            if key not in columns:
                columns.append(key)
        entries.append(entry)
    rows = [[entry.get(column, "") for column in columns] for entry in entries]
    writer = report_writer.ReportWriter(output_directory, None, json.dumps(list(directories)))
    writer.write_table("comparison.csv", columns, rows)

    widths = [
        max([len(column)] + [len(_format_cell(row[index])) for row in rows])
        for index, column in enumerate(columns)
    ]
    _log("  ".join(column.ljust(width) for column, width in zip(columns, widths)))
    for row in rows:
        _log("  ".join(_format_cell(value).ljust(width) for value, width in zip(row, widths)))

    return columns, rows


def _format_cell(value):
    # type: (Any) -> str
    if isinstance(value, float):
        return "{0:.4e}".format(value)
    return str(value)
