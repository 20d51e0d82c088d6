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
Tests of the Gauss-Newton inner solver.
"""
from __future__ import absolute_import, division, print_function

import math

import numpy
import pytest
from scipy import linalg

from kerbil.algorithms import functional_algorithms, kernel_algorithms
from kerbil.problems import elliptic
from kerbil.processing_layer import inner_solver
from kerbil.utils import exceptions, named_tuples


ZERO = (0, 0)


def _rbf_kernels(lengthscale=0.3):
    return kernel_algorithms.ComponentKernels(
        ["u"],
        [kernel_algorithms.build_kernel({"variant": "rbf_iso", "lengthscale": lengthscale}, 2)],
    )


def _rbf_gram(first, second, lengthscale=0.3):
    squared = numpy.sum((first[:, None, :] - second[None, :, :]) ** 2, axis=2)
    return numpy.exp(-squared / (2.0 * lengthscale ** 2))


def _point_evaluations(points):
    return functional_algorithms.FunctionalSet.from_functionals(
        [
            named_tuples.DiffFunctional(component=0, point=tuple(point), terms=((ZERO, 1.0),))
            for point in points
        ],
        1,
    )


def _elliptic_setup(rng, alpha=1.0, num_interior=30, num_boundary=16):
    problem = elliptic.build_problem({"alpha": alpha})
    layout = problem.collocation_layout(
        {"interior": num_interior, "boundary": num_boundary}, rng
    )
    return problem, layout


def test_collocation_constraints_hold_at_small_nugget(rng):
    problem, layout = _elliptic_setup(rng)
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    inner = inner_solver.assemble(
        problem,
        inner_solver.ZeroState(kernels),
        layout.interior,
        layout.boundary,
        layout.boundary_tags,
    )
    assert inner.functionals.size == 30 + 16
    state = inner_solver.solve_inner(inner, kernels, params, 1e-10)
    scale = 1.0 + numpy.max(numpy.abs(inner.rhs))
    assert state.constraint_residual(inner.rhs) <= 1e-5 * scale
    assert numpy.allclose(
        state.evaluate_set(inner.functionals), inner.rhs, atol=1e-5 * scale
    )


def test_interpolant_has_minimal_norm(rng):
    points = rng.uniform(size=(4, 2))
    values = rng.normal(size=4)
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    inner = inner_solver.LinearizedInner(_point_evaluations(points), values)
    state = inner_solver.solve(inner, kernels, params, 0.0)
    gram = _rbf_gram(points, points)
    norm = state.coefficients.dot(gram).dot(state.coefficients)

    # Every interpolant spanned by the four centres and two extra ones.
    centres = numpy.concatenate([points, rng.uniform(size=(2, 2))])
    constraints = _rbf_gram(points, centres)
    full_gram = _rbf_gram(centres, centres)
    particular = numpy.linalg.lstsq(constraints, values, rcond=None)[0]
    basis = linalg.null_space(constraints)
    reduced = basis.T.dot(full_gram).dot(basis)
    shift = numpy.linalg.solve(reduced, -basis.T.dot(full_gram).dot(particular))
    best = particular + basis.dot(shift)
    brute_force = best.dot(full_gram).dot(best)
    assert norm == pytest.approx(brute_force, rel=1e-6)

    for _ in range(5):
        other = particular + basis.dot(shift + rng.normal(size=basis.shape[1]))
        assert other.dot(full_gram).dot(other) >= norm * (1.0 - 1e-9)


def test_interpolant_matches_the_kernel_formula(rng):
    points = rng.uniform(size=(6, 2))
    values = rng.normal(size=6)
    targets = rng.uniform(size=(5, 2))
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    state = inner_solver.solve(
        inner_solver.LinearizedInner(_point_evaluations(points), values), kernels, params, 0.0
    )
    expected = _rbf_gram(targets, points).dot(
        numpy.linalg.solve(_rbf_gram(points, points), values)
    )
    assert numpy.allclose(state.evaluate_set(_point_evaluations(targets)), expected, atol=1e-8)
    assert state.evaluate(
        named_tuples.DiffFunctional(component=0, point=tuple(targets[0]), terms=((ZERO, 1.0),))
    ) == pytest.approx(expected[0], abs=1e-8)
    features = state.features_at(targets, {"u": (ZERO,)})
    assert numpy.allclose(features.values["u"][ZERO], expected, atol=1e-8)


def test_noisy_observations_follow_the_saddle_point_system(rng):
    constraint_points = rng.uniform(size=(3, 2))
    observation_points = rng.uniform(size=(4, 2))
    targets = rng.uniform(size=(5, 2))
    constraint_values = rng.normal(size=3)
    observed = rng.normal(size=4)
    noise = 0.1
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    inner = inner_solver.LinearizedInner(
        _point_evaluations(constraint_points),
        constraint_values,
        observation_points=observation_points,
        observation_values=observed,
        noise_std=noise,
    )
    assert inner.has_observations
    state = inner_solver.solve_inner(inner, kernels, params, 0.0)
    everything = numpy.concatenate([constraint_points, observation_points])
    system = _rbf_gram(everything, everything)
    system[3:, 3:] += noise ** 2 * numpy.eye(4)
    expected = _rbf_gram(targets, everything).dot(
        numpy.linalg.solve(system, numpy.concatenate([constraint_values, observed]))
    )
    assert numpy.allclose(state.evaluate_set(_point_evaluations(targets)), expected, atol=1e-8)
    assert state.num_constraints == 3
    assert state.constraint_residual(constraint_values) < 1e-8
    assert numpy.allclose(
        inner_solver.system_rhs(inner), numpy.concatenate([constraint_values, observed])
    )


def test_infinite_noise_drops_the_data_term(rng):
    points = rng.uniform(size=(4, 2))
    values = rng.normal(size=4)
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    plain = inner_solver.solve(
        inner_solver.LinearizedInner(_point_evaluations(points), values), kernels, params, 1e-10
    )
    with_infinite_noise = inner_solver.solve_inner(
        inner_solver.LinearizedInner(
            _point_evaluations(points),
            values,
            observation_points=rng.uniform(size=(3, 2)),
            observation_values=numpy.ones(3),
            noise_std=float("inf"),
        ),
        kernels,
        params,
        1e-10,
    )
    assert numpy.allclose(plain.coefficients, with_infinite_noise.coefficients)


def test_one_step_is_exact_for_a_linear_problem(rng):
    problem, layout = _elliptic_setup(rng, alpha=0.0)
    kernels = _rbf_kernels()
    params = kernels.initial_params(rng)
    one, one_history = inner_solver.solve_from_scratch(
        problem, kernels, params, layout.interior, layout.boundary, layout.boundary_tags, 1e-10, 1
    )
    two, two_history = inner_solver.solve_from_scratch(
        problem, kernels, params, layout.interior, layout.boundary, layout.boundary_tags, 1e-10, 2
    )
    assert len(one_history) == 1
    assert len(two_history) == 2
    assert numpy.allclose(one.coefficients, two.coefficients, rtol=1e-6, atol=1e-8)
    assert two_history[1] == pytest.approx(two_history[0], rel=1e-4, abs=1e-8)


def test_gauss_newton_reduces_the_nonlinear_residual(rng):
    # The layout must resolve the solution, otherwise the residual stalls.
    problem, layout = _elliptic_setup(rng, num_interior=400, num_boundary=120)
    kernels = _rbf_kernels(lengthscale=0.2)
    params = kernels.initial_params(rng)
    calls = []
    _, history = inner_solver.solve_from_scratch(
        problem,
        kernels,
        params,
        layout.interior,
        layout.boundary,
        layout.boundary_tags,
        1e-10,
        6,
        callback=lambda iteration, residual: calls.append((iteration, residual)),
    )
    assert [iteration for iteration, _ in calls] == list(range(6))
    assert [residual for _, residual in calls] == history
    assert history[-1] < 1e-3 * history[0]


def test_zero_iterations_return_the_zero_state(rng):
    problem, layout = _elliptic_setup(rng)
    kernels = _rbf_kernels()
    state, history = inner_solver.solve_from_scratch(
        problem,
        kernels,
        kernels.initial_params(rng),
        layout.interior,
        layout.boundary,
        layout.boundary_tags,
        1e-10,
        0,
    )
    assert history == []
    assert isinstance(state, inner_solver.ZeroState)
    assert state.evaluate(None) == 0.0
    features = state.features_at(layout.interior, problem.features())
    assert all(numpy.all(values == 0.0) for values in features.values["u"].values())
    expected = numpy.max(numpy.abs(problem.forcing(layout.interior)))
    assert inner_solver.collocation_residual(problem, state, layout.interior) == pytest.approx(
        expected
    )


def test_non_finite_hyperparameters_are_rejected(rng):
    points = rng.uniform(size=(3, 2))
    kernels = _rbf_kernels()
    inner = inner_solver.LinearizedInner(_point_evaluations(points), numpy.ones(3))
    with pytest.raises(exceptions.KerbilRejectedThetaError):
        inner_solver.solve(inner, kernels, numpy.array([math.nan]), 1e-10)


def test_mismatched_right_hand_side_is_rejected(rng):
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        inner_solver.LinearizedInner(_point_evaluations(rng.uniform(size=(3, 2))), numpy.ones(4))
