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
Tests of the problem definitions.
"""
from __future__ import absolute_import, division, print_function

import math

import numpy
import pytest

from kerbil.problems import base, burgers, darcy_inverse, elliptic, gray_scott
from kerbil.utils import dynamic_import, exceptions, named_tuples


def _elliptic_features(points):
    x, y = points[:, 0], points[:, 1]
    low = numpy.sin(math.pi * x) * numpy.sin(math.pi * y)
    high = numpy.sin(4.0 * math.pi * x) * numpy.sin(4.0 * math.pi * y)
    second = -math.pi ** 2 * low - 64.0 * math.pi ** 2 * high
    return named_tuples.StateFeatures(
        points=points,
        values={"u": {base.ZERO: low + 4.0 * high, base.D00: second, base.D11: second}},
    )


def _random_features(problem, points, rng):
    values = {}
    for name, alphas in problem.features().items():
        values[name] = {alpha: rng.normal(size=points.shape[0]) for alpha in alphas}
    for name, alphas in problem.boundary_features().items():
        for alpha in alphas:
            values.setdefault(name, {}).setdefault(
                alpha, rng.normal(size=points.shape[0])
            )
    return named_tuples.StateFeatures(points=points, values=values)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 10.0])
def test_exact_elliptic_solution_has_zero_residual(rng, alpha):
    problem = elliptic.build_problem({"alpha": alpha})
    points = rng.uniform(size=(50, 2))
    residual = problem.residual(_elliptic_features(points))
    assert residual.shape == (50, 1)
    scale = 1.0 + numpy.max(numpy.abs(problem.forcing(points)))
    assert numpy.max(numpy.abs(residual)) < 1e-9 * scale


def test_exact_elliptic_solution_vanishes_on_the_boundary(rng):
    problem = elliptic.build_problem()
    points, tags = problem.sample_boundary(40, rng)
    assert set(tags) == {"boundary"}
    assert numpy.allclose(problem.exact_solution(points), 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "name", ["elliptic", "burgers", "eikonal", "gray_scott", "schrodinger", "darcy_inverse"]
)
def test_linearization_reproduces_the_residual_at_the_expansion_point(rng, name):
    problem = dynamic_import.get_problem_builder(name)()
    points = problem.sample_interior(20, rng)
    features = _random_features(problem, points, rng)
    residual = problem.residual(features)
    linearized = problem.linearize(features)
    assert len(linearized) == len(problem.equation_names)
    for equation, (parts, rhs) in enumerate(linearized):
        applied = numpy.zeros(points.shape[0])
        for part in parts:
            component = problem.component_names[part.component]
            for column, alpha in enumerate(part.alphas):
                applied += part.coefficients[:, column] * base.feature(
                    features, component, alpha
                )
        # DP(u_k) u_k - rhs = P(u_k) - f
        assert numpy.allclose(applied - rhs, residual[:, equation], atol=1e-10)


@pytest.mark.parametrize(
    "name", ["elliptic", "burgers", "eikonal", "gray_scott", "schrodinger", "darcy_inverse"]
)
def test_jacobian_matches_finite_differences(rng, name):
    problem = dynamic_import.get_problem_builder(name)()
    points = problem.sample_interior(6, rng)
    features = _random_features(problem, points, rng)
    jacobian = problem.jacobian(features)
    step = 1e-6
    for equation, parts in enumerate(jacobian):
        for part in parts:
            component = problem.component_names[part.component]
            for column, alpha in enumerate(part.alphas):
                shifted = {
                    key: dict(value) for key, value in features.values.items()
                }
                shifted[component][alpha] = shifted[component][alpha] + step
                plus = problem.operator(named_tuples.StateFeatures(points, shifted))
                shifted[component][alpha] = shifted[component][alpha] - 2.0 * step
                minus = problem.operator(named_tuples.StateFeatures(points, shifted))
                numerical = (plus[:, equation] - minus[:, equation]) / (2.0 * step)
                assert numpy.allclose(
                    part.coefficients[:, column], numerical, rtol=1e-5, atol=1e-6
                )


def test_linearize_equation_returns_one_functional_per_component(rng):
    problem = gray_scott.build_problem()
    points = problem.sample_interior(4, rng)
    features = _random_features(problem, points, rng)
    equation = problem.linearize_equation(features, 1, row=2)
    assert len(equation.functional) == 2
    assert [functional.component for functional in equation.functional] == [0, 1]
    assert equation.functional[0].point == tuple(points[2])
    _, rhs = problem.linearize(features)[1]
    assert equation.rhs == pytest.approx(rhs[2])


def test_boundary_blocks_follow_the_face_tags():
    problem = gray_scott.build_problem()
    points = numpy.array([[0.0, 0.3], [0.4, 1.0], [0.6, -1.0], [0.0, -0.2]])
    tags = numpy.array(["initial", "boundary", "boundary", "initial"], dtype=object)
    blocks, values, indices = problem.boundary_blocks(points, tags)
    assert [block.tag for block in blocks] == ["boundary", "boundary", "initial", "initial"]
    assert list(indices) == [1, 2, 1, 2, 0, 3, 0, 3]
    initial_u, initial_v = gray_scott.INITIAL_CASES["base"]
    assert numpy.allclose(values[:4], 0.0)
    assert numpy.allclose(values[4:6], initial_u(points[[0, 3], 1]))
    assert numpy.allclose(values[6:], initial_v(points[[0, 3], 1]))
    neumann = blocks[0].parts[0]
    assert tuple(neumann.alphas) == (base.D1,)


def test_boundary_residual_of_the_exact_burgers_initial_value():
    problem = burgers.build_problem()
    space = numpy.linspace(-1.0, 1.0, 7)
    points = numpy.stack([numpy.zeros(7), space], axis=1)
    tags = numpy.array(["initial"] * 7, dtype=object)
    features = named_tuples.StateFeatures(
        points=points, values={"u": {base.ZERO: -numpy.sin(math.pi * space)}}
    )
    residual, indices = problem.boundary_residual(points, tags, features)
    assert numpy.allclose(residual, 0.0)
    assert list(indices) == list(range(7))


def test_manufactured_data_keys():
    data = gray_scott.build_problem().manufactured_data()
    assert list(data) == [
        "forcing",
        "boundary:u",
        "boundary:v",
        "initial:u",
        "initial:v",
    ]


def test_unknown_constant_is_rejected():
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        elliptic.build_problem({"viscosity": 0.1})


def test_constant_with_wrong_type_is_rejected():
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        elliptic.build_problem({"alpha": "large"})
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        elliptic.build_problem({"power": 2.5})
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        burgers.build_problem({"viscosity": 0.0})


def test_unknown_problem_is_rejected():
    with pytest.raises(exceptions.KerbilUnknownProblemError):
        dynamic_import.get_problem_builder("heat_equation_that_does_not_exist")


def test_collocation_layout_counts(rng):
    problem = burgers.build_problem()
    layout = problem.collocation_layout(
        {"interior": 30, "boundary": 12, "validation_interior": 9, "validation_boundary": 5},
        rng,
    )
    assert layout.interior.shape == (30, 2)
    assert layout.boundary.shape == (12, 2)
    assert layout.validation_interior.shape == (9, 2)
    assert layout.validation_boundary.shape == (5, 2)
    assert len(layout.boundary_tags) == 12
    assert numpy.all(layout.interior[:, 0] >= 0.0)
    assert numpy.all(layout.interior[:, 1] >= -1.0)
    for point, tag in zip(layout.boundary, layout.boundary_tags):
        if tag == "initial":
            assert point[0] == 0.0
        else:
            assert abs(point[1]) == 1.0


def test_collocation_layout_is_reproducible():
    problem = elliptic.build_problem()
    counts = {"interior": 10, "boundary": 8, "validation_interior": 4}
    first = problem.collocation_layout(counts, numpy.random.default_rng(7))
    second = problem.collocation_layout(counts, numpy.random.default_rng(7))
    assert numpy.array_equal(first.interior, second.interior)
    assert numpy.array_equal(first.boundary, second.boundary)


@pytest.mark.parametrize(
    "counts",
    [
        {"interior": 0, "boundary": 10},
        {"interior": 10, "boundary": 0},
        {"interior": 10, "boundary": 10, "validation_interior": -1},
    ],
)
def test_collocation_layout_rejects_invalid_counts(rng, counts):
    with pytest.raises(exceptions.KerbilInvalidCountsError):
        elliptic.build_problem().collocation_layout(counts, rng)


def test_gray_scott_initial_cases():
    problem = gray_scott.build_problem()
    assert problem.initial_case == "base"
    other = problem.with_initial_case("C")
    assert other.initial_case == "C"
    assert other.feed == problem.feed
    points = numpy.array([[0.0, 0.25]])
    assert numpy.allclose(
        other.initial_values(points), [[math.cos(2.0 * math.pi), math.cos(1.25 * math.pi)]]
    )
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        problem.with_initial_case("D")


def test_darcy_problem_attributes():
    problem = darcy_inverse.build_problem({"observations": 20, "noise_std": 0.0})
    assert problem.has_observations
    assert problem.num_observations == 20
    assert problem.component_names == ("u", "a")
    points = numpy.array([[0.25, 0.25], [0.0, 0.0]])
    assert numpy.allclose(problem.true_coefficient(points), [math.exp(2.0) + math.exp(-2.0), 2.0])
    assert numpy.allclose(
        problem.true_log_coefficient(points), numpy.log(problem.true_coefficient(points))
    )
    blocks = problem.observation_blocks(points)
    assert blocks[0].tag == base.OBSERVATION_TAG
    assert tuple(blocks[0].parts[0].alphas) == (base.ZERO,)
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        darcy_inverse.build_problem({"observations": 0})
