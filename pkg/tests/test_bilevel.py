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
Tests of the bilevel hyperparameter learning.
"""
from __future__ import absolute_import, division, print_function

import numpy
import pytest

from kerbil.algorithms import generic_algorithms, kernel_algorithms
from kerbil.problems import elliptic, gray_scott
from kerbil.processing_layer import bilevel, inner_solver
from kerbil.utils import exceptions


ADDITIVE = {"variant": "additive_rbf_poly", "sigma": 0.9, "lengthscale": 0.5, "shift": 0.3}


def _relative_gap(first, second):
    scale = max(numpy.max(numpy.abs(first)), numpy.max(numpy.abs(second)))
    return numpy.max(numpy.abs(first - second)) / scale


def _elliptic_objective(rng, table=None, config=None, linearize=True):
    problem = elliptic.build_problem()
    layout = problem.collocation_layout(
        {"interior": 16, "boundary": 12, "validation_interior": 15}, rng
    )
    kernels = kernel_algorithms.ComponentKernels(
        ["u"], [kernel_algorithms.build_kernel(table or ADDITIVE, 2)]
    )
    params = kernels.initial_params(rng)
    config = config or bilevel.default_run_config(nugget=1e-6, batch_interior=10)
    state = inner_solver.ZeroState(kernels)
    if linearize:
        state, _ = inner_solver.solve_from_scratch(
            problem, kernels, params, layout.interior, layout.boundary,
            layout.boundary_tags, config.nugget, 1,
        )
    inner = inner_solver.assemble(
        problem, state, layout.interior, layout.boundary, layout.boundary_tags
    )
    targets = bilevel.build_targets(problem, state, layout.validation_interior)
    return bilevel.OuterObjective(kernels, inner, targets, config), params


def _gray_scott_objective(rng):
    problem = gray_scott.build_problem()
    layout = problem.collocation_layout(
        {
            "interior": 12,
            "boundary": 10,
            "validation_interior": 8,
            "validation_boundary": 6,
        },
        rng,
    )
    table = {"variant": "rbf_aniso", "lengthscale": [0.5, 0.4]}
    kernels = kernel_algorithms.ComponentKernels(
        ["u", "v"],
        [kernel_algorithms.build_kernel(table, 2), kernel_algorithms.build_kernel(table, 2)],
    )
    params = kernels.initial_params(rng)
    config = bilevel.default_run_config(nugget=1e-6, boundary_weight=1.0)
    state = inner_solver.ZeroState(kernels)
    inner = inner_solver.assemble(
        problem, state, layout.interior, layout.boundary, layout.boundary_tags
    )
    targets = bilevel.build_targets(
        problem,
        state,
        layout.validation_interior,
        layout.validation_boundary,
        layout.validation_boundary_tags,
    )
    return bilevel.OuterObjective(kernels, inner, targets, config), params


@pytest.mark.parametrize("builder", [_elliptic_objective, _gray_scott_objective])
def test_tangent_and_adjoint_hypergradients_agree(rng, builder):
    objective, params = builder(rng)
    batch = objective.full_batch()
    tangent_loss, tangent = bilevel.hypergrad_tangent(objective, params, batch)
    adjoint_loss, adjoint = bilevel.hypergrad_adjoint(objective, params, batch)
    assert tangent_loss == pytest.approx(adjoint_loss, rel=1e-12)
    assert tangent.shape == (params.size,)
    assert _relative_gap(tangent, adjoint) <= 1e-6


@pytest.mark.parametrize("builder", [_elliptic_objective, _gray_scott_objective])
def test_adjoint_hypergradient_matches_finite_differences(rng, builder):
    objective, params = builder(rng)
    batch = objective.full_batch()
    _, adjoint = bilevel.hypergrad_adjoint(objective, params, batch)
    loss, numerical = bilevel.hypergrad_fd(objective, params, batch, step=1e-5)
    assert loss == pytest.approx(bilevel.outer_loss(objective, params, batch))
    assert _relative_gap(adjoint, numerical) <= 1e-4


def test_penalty_enters_the_hypergradient(rng):
    config = bilevel.default_run_config(nugget=1e-6, regularization=0.5)
    objective, params = _elliptic_objective(rng, config=config)
    batch = objective.full_batch()
    plain_objective = bilevel.OuterObjective(
        objective.kernels,
        objective.inner,
        objective.targets,
        config._replace(regularization=0.0),
    )
    loss, gradient = bilevel.hypergrad_adjoint(objective, params, batch)
    plain_loss, plain_gradient = bilevel.hypergrad_adjoint(plain_objective, params, batch)
    assert loss == pytest.approx(plain_loss + 0.5 * numpy.sum(params.raw ** 2))
    assert numpy.allclose(gradient - plain_gradient, params.raw, rtol=1e-8, atol=1e-10)
    _, numerical = bilevel.hypergrad_fd(objective, params, batch)
    assert _relative_gap(gradient, numerical) <= 1e-4


def test_hypergradient_follows_the_configured_mode(rng):
    objective, params = _elliptic_objective(rng)
    batch = objective.full_batch()
    expected = bilevel.hypergrad_adjoint(objective, params, batch)[1]
    for mode in bilevel.GRADIENT_MODES:
        objective.config = objective.config._replace(gradient=mode)
        assert _relative_gap(bilevel.hypergradient(objective, params, batch)[1], expected) <= 1e-4


def test_tangent_mode_refuses_large_parameter_vectors(rng):
    objective, params = _elliptic_objective(rng)
    with pytest.raises(exceptions.KerbilUseAdjointError):
        bilevel.hypergrad_tangent(objective, params, objective.full_batch(), limit=2)


def test_finite_differences_refuse_too_many_coordinates(rng):
    objective, params = _elliptic_objective(rng)
    with pytest.raises(exceptions.KerbilGradientGuardError):
        bilevel.hypergrad_fd(objective, params, objective.full_batch(), limit=3)
    _, partial = bilevel.hypergrad_fd(
        objective, params, objective.full_batch(), limit=3, coordinates=[2, 0]
    )
    _, full = bilevel.hypergrad_fd(objective, params, objective.full_batch())
    assert numpy.allclose(partial, full[[2, 0]])


def test_batches_are_drawn_without_replacement(rng):
    objective, _ = _elliptic_objective(rng)
    batch = objective.batch(generic_algorithms.make_rng(5))
    assert batch.values.shape == (10,)
    assert numpy.allclose(batch.weights, 0.1)
    points = numpy.array(
        [batch.functionals.row(index)[0].point for index in range(batch.functionals.size)]
    )
    assert numpy.unique(points, axis=0).shape[0] == 10
    again = objective.batch(generic_algorithms.make_rng(5))
    assert numpy.array_equal(batch.values, again.values)


def test_full_batch_weights(rng):
    objective, _ = _gray_scott_objective(rng)
    batch = objective.full_batch()
    kinds = objective.targets.kinds
    interior = kinds == bilevel.INTERIOR
    # Two equations per interior point, two conditions per boundary point.
    assert numpy.count_nonzero(interior) == 16
    assert numpy.allclose(batch.weights[interior], 1.0 / 8)
    boundary_count = objective.targets.count(bilevel.BOUNDARY)
    assert boundary_count == 6
    assert numpy.allclose(batch.weights[~interior], 1.0 / boundary_count)


def test_batch_larger_than_the_set_uses_every_point(rng):
    config = bilevel.default_run_config(nugget=1e-6, batch_interior=100)
    objective, _ = _elliptic_objective(rng, config=config)
    batch = objective.batch(rng)
    assert batch.values.shape == (15,)
    assert numpy.allclose(batch.weights, 1.0 / 15)


def test_landscape_scan(rng):
    objective, params = _elliptic_objective(rng)
    lengthscale = params.get_value("u.lengthscale")
    losses = bilevel.landscape_scan(
        objective, params, "u.lengthscale", [0.5 * lengthscale, lengthscale]
    )
    assert losses.shape == (2,)
    assert losses[1] == pytest.approx(
        bilevel.outer_loss(objective, params, objective.full_batch())
    )


def test_landscape_scan_needs_a_scalar(rng):
    objective, params = _elliptic_objective(
        rng, table={"variant": "rbf_aniso", "lengthscale": [0.5, 0.5]}
    )
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        bilevel.landscape_scan(objective, params, "u.lengthscale", [0.1, 0.2])


def _small_run(seed, **overrides):
    problem = elliptic.build_problem()
    rng = generic_algorithms.make_rng(seed)
    layout = problem.collocation_layout(
        {"interior": 20, "boundary": 12, "validation_interior": 15}, rng
    )
    kernels = kernel_algorithms.ComponentKernels(
        ["u"], [kernel_algorithms.build_kernel({"variant": "rbf_iso", "lengthscale": 0.3}, 2)]
    )
    settings = dict(gn_iters=2, adam_steps=3, batch_interior=8, nugget=1e-8)
    settings.update(overrides)
    config = bilevel.default_run_config(**settings)
    return bilevel.run(
        problem,
        kernels,
        kernels.initial_params(rng),
        layout,
        config,
        generic_algorithms.make_rng(seed + 1),
        verbose=False,
    )


def test_run_without_iterations_keeps_the_initial_hyperparameters():
    report = _small_run(0, gn_iters=0)
    assert report.records == []
    assert numpy.array_equal(report.final_params.raw, report.initial_params.raw)
    assert isinstance(report.state, inner_solver.ZeroState)
    assert report.to_dict()["iterations"] == []


def test_run_records_every_iteration():
    report = _small_run(0)
    assert [record.index for record in report.records] == [0, 1]
    assert all(record.adam_steps == 3 for record in report.records)
    assert all(numpy.isfinite(record.validation_loss) for record in report.records)
    assert report.final_params.raw.tolist() == report.records[-1].raw
    assert report.theta_trajectory()[-1] == report.final_params.to_dict()
    assert not numpy.array_equal(report.final_params.raw, report.initial_params.raw)
    summary = report.to_dict()
    assert summary["adam_moments_persist"]
    assert summary["config"]["gn_iters"] == 2


def test_run_is_reproducible():
    first = _small_run(4)
    second = _small_run(4)
    assert [record.raw for record in first.records] == [record.raw for record in second.records]
    assert [record.validation_loss for record in first.records] == [
        record.validation_loss for record in second.records
    ]


def test_run_stops_early_when_the_hyperparameters_settle():
    report = _small_run(0, gn_iters=5, tolerance=1.0)
    assert report.stopped_early
    assert len(report.records) == 1


def test_run_calls_the_callback(rng):
    calls = []
    problem = elliptic.build_problem()
    layout = problem.collocation_layout(
        {"interior": 12, "boundary": 8, "validation_interior": 6}, rng
    )
    kernels = kernel_algorithms.ComponentKernels(
        ["u"], [kernel_algorithms.build_kernel({"variant": "rbf_iso", "lengthscale": 0.3}, 2)]
    )
    bilevel.run(
        problem,
        kernels,
        kernels.initial_params(rng),
        layout,
        bilevel.default_run_config(gn_iters=2, adam_steps=1, nugget=1e-8),
        rng,
        callback=lambda iteration, objective, raw: calls.append(iteration),
        verbose=False,
    )
    assert calls == [0, 1]


@pytest.mark.parametrize(
    "overrides",
    [
        {"mode": "unrolled"},
        {"gradient": "symbolic"},
        {"nugget": -1.0},
        {"learning_rate": 0.0},
        {"batch_interior": -2},
        {"convergence_metric": "gradient_norm"},
    ],
)
def test_invalid_run_settings_are_rejected(overrides):
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        bilevel.check_run_config(bilevel.default_run_config(**overrides))


def test_validation_loss_of_the_zero_state(rng):
    problem = elliptic.build_problem()
    points = problem.sample_interior(10, rng)
    kernels = kernel_algorithms.ComponentKernels(
        ["u"], [kernel_algorithms.build_kernel({"variant": "rbf_iso"}, 2)]
    )
    loss = bilevel.validation_loss(
        problem, inner_solver.ZeroState(kernels), points, bilevel.default_run_config()
    )
    assert loss == pytest.approx(numpy.mean(problem.forcing(points)[:, 0] ** 2))
