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
Tests of the reference solvers and of the error measures.
"""
from __future__ import absolute_import, division, print_function

import math
import os

import numpy
import pytest

from kerbil.algorithms import generic_algorithms, kernel_algorithms, reference_algorithms
from kerbil.problems import burgers, darcy_inverse, eikonal, elliptic, gray_scott
from kerbil.processing_layer import inner_solver
from kerbil.utils import exceptions


def test_grid_function_is_exact_for_bilinear_fields():
    axes = [numpy.linspace(0.0, 1.0, 5), numpy.linspace(-1.0, 1.0, 9)]
    mesh = numpy.meshgrid(*axes, indexing="ij")
    values = numpy.stack([2.0 * mesh[0] + mesh[1], mesh[0] * mesh[1]])
    function = reference_algorithms.GridFunction(axes, values, ("u", "v"))
    points = numpy.array([[0.1, 0.33], [0.77, -0.9], [1.0, 1.0]])
    expected = numpy.stack(
        [2.0 * points[:, 0] + points[:, 1], points[:, 0] * points[:, 1]], axis=1
    )
    assert numpy.allclose(function(points), expected)
    assert numpy.array_equal(function.component("v"), values[1])


def test_grid_function_checks_its_values():
    axes = [numpy.linspace(0.0, 1.0, 3), numpy.linspace(0.0, 1.0, 4)]
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        reference_algorithms.GridFunction(axes, numpy.zeros((1, 4, 3)), ("u",))
    values = numpy.zeros((1, 3, 4))
    values[0, 1, 1] = numpy.nan
    with pytest.raises(exceptions.KerbilOracleNotConvergedError):
        reference_algorithms.GridFunction(axes, values, ("u",))


def test_elliptic_reference_is_the_exact_solution(rng):
    problem = elliptic.build_problem()
    reference = reference_algorithms.reference_solution(problem, resolution=64)
    nodes = numpy.array([[0.25, 0.5], [0.125, 0.875], [0.0, 0.3]])
    assert numpy.allclose(reference(nodes), problem.exact_solution(nodes), atol=1e-12)


def test_cole_hopf_matches_finite_differences():
    problem = burgers.build_problem({"viscosity": 0.1})
    finite_differences = reference_algorithms.burgers_crank_nicolson(
        problem, 200, time_step=1e-3, time_samples=11
    )
    times, space = finite_differences.axes
    exact = reference_algorithms.cole_hopf(0.1, times, space)
    assert numpy.allclose(exact[0], -numpy.sin(math.pi * space))
    assert numpy.max(numpy.abs(exact - finite_differences.component("u"))) < 1e-2


def test_cole_hopf_keeps_the_boundary_values():
    values = reference_algorithms.cole_hopf(0.05, [0.2, 0.6], numpy.array([-1.0, 0.0, 1.0]))
    assert numpy.allclose(values, 0.0, atol=1e-8)


def test_eikonal_reference_is_positive_inside():
    problem = eikonal.build_problem({"epsilon": 0.1})
    reference = reference_algorithms.reference_solution(problem, resolution=32)
    centre = reference(numpy.array([[0.5, 0.5]]))[0, 0]
    corner = reference(numpy.array([[0.0, 0.0]]))[0, 0]
    assert corner == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < centre < 0.6


def test_darcy_reference_converges_at_second_order():
    problem = darcy_inverse.build_problem()
    study = reference_algorithms.refinement_study(problem, [16, 32, 64])
    assert study.resolutions == [16, 32, 64]
    assert len(study.changes) == 2
    assert study.changes[1] < study.changes[0]
    assert study.orders[0] > 1.5


def test_darcy_reference_carries_the_true_coefficient():
    problem = darcy_inverse.build_problem()
    reference = reference_algorithms.reference_solution(problem, resolution=16)
    points = numpy.array([[0.25, 0.25], [0.5, 0.75]])
    assert reference.component_names == ("u", "a")
    assert numpy.allclose(reference(points)[:, 1], problem.true_log_coefficient(points))


def test_gray_scott_reference_keeps_the_initial_values():
    problem = gray_scott.build_problem()
    reference = reference_algorithms.reference_solution(
        problem, resolution=32, time_step=1e-2, time_samples=3
    )
    space = reference.axes[1]
    points = numpy.stack([numpy.zeros(space.size), space], axis=1)
    assert numpy.allclose(reference(points), problem.initial_values(points))


def test_reference_cache_round_trip(tmp_path, monkeypatch):
    problem = elliptic.build_problem()
    first = reference_algorithms.reference_solution(
        problem, resolution=8, cache_directory=str(tmp_path)
    )
    assert len(os.listdir(str(tmp_path))) == 1

    def fail(*_):
        raise AssertionError("The cached reference was not used.")

    monkeypatch.setattr(reference_algorithms, "_compute", fail)
    second = reference_algorithms.reference_solution(
        problem, resolution=8, cache_directory=str(tmp_path)
    )
    assert numpy.array_equal(first.values, second.values)
    assert numpy.array_equal(first.axes[0], second.axes[0])


def test_cache_key_depends_on_the_constants():
    first = reference_algorithms.cache_key(elliptic.build_problem(), 64, None, None)
    second = reference_algorithms.cache_key(
        elliptic.build_problem({"alpha": 0.0}), 64, None, None
    )
    assert first != second


def test_reference_resolution_check():
    problem = elliptic.build_problem()
    reference_algorithms.reference_solution(problem, resolution=16, check=True)
    with pytest.raises(exceptions.KerbilInvalidCountsError):
        reference_algorithms.reference_solution(problem, resolution=1)


def test_field_errors():
    truth = numpy.array([1.0, -1.0, 1.0, -1.0])
    errors = reference_algorithms.field_errors(truth + [0.0, 0.0, 0.0, 2.0], truth)
    assert errors.l2 == pytest.approx(1.0)
    assert errors.linf == pytest.approx(2.0)
    assert errors.rel_l2 == pytest.approx(1.0)
    assert reference_algorithms.field_errors(truth, numpy.zeros(4)).rel_l2 == float("inf")
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        reference_algorithms.field_errors(truth, truth[:3])


def test_error_metrics_of_the_zero_state():
    problem = elliptic.build_problem()
    reference = reference_algorithms.reference_solution(problem, resolution=64)
    kernels = kernel_algorithms.ComponentKernels(
        ["u"], [kernel_algorithms.build_kernel({"variant": "rbf_iso"}, 2)]
    )
    errors = reference_algorithms.error_metrics(
        inner_solver.ZeroState(kernels), problem, reference, num_per_axis=20
    )
    assert list(errors) == ["u"]
    points = reference_algorithms.evaluation_points(problem, 20)
    assert points.shape == (400, 2)
    assert errors["u"].rel_l2 == pytest.approx(1.0)
    assert errors["u"].linf == pytest.approx(
        numpy.max(numpy.abs(reference(points))), rel=1e-12
    )


def test_observations_round_trip(tmp_path):
    problem = darcy_inverse.build_problem()
    reference = reference_algorithms.reference_solution(problem, resolution=16)
    observations = reference_algorithms.generate_observations(
        problem, reference, 12, 1e-3, generic_algorithms.make_rng(8), seed=8
    )
    assert observations.points.shape == (12, 2)
    assert numpy.max(numpy.abs(observations.values - observations.truth)) < 1e-2
    filename = str(tmp_path / "observations.h5")
    reference_algorithms.save_observations(filename, observations)
    loaded = reference_algorithms.load_observations(filename)
    assert numpy.array_equal(loaded.points, observations.points)
    assert numpy.array_equal(loaded.values, observations.values)
    assert loaded.noise_std == 1e-3
    assert loaded.seed == 8


def test_observations_need_a_positive_count(rng):
    problem = darcy_inverse.build_problem()
    reference = reference_algorithms.reference_solution(problem, resolution=8)
    with pytest.raises(exceptions.KerbilInvalidCountsError):
        reference_algorithms.generate_observations(problem, reference, 0, 1e-3, rng)
