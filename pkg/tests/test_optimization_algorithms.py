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
Tests of the Adam optimizer and of the hyperparameter penalties.
"""
from __future__ import absolute_import, division, print_function

import numpy
import pytest

from kerbil.algorithms import optimization_algorithms
from kerbil.utils import exceptions


def test_first_step_moves_every_coordinate_by_the_learning_rate():
    state = optimization_algorithms.initial_adam_state(3)
    raw = numpy.array([1.0, -2.0, 0.5])
    new_state, updated = optimization_algorithms.adam_step(
        state, raw, numpy.array([3.0, -0.1, 1e-3]), 1e-2
    )
    numpy.testing.assert_allclose(updated, raw - 1e-2 * numpy.array([1.0, -1.0, 1.0]), rtol=1e-4)
    assert new_state.step == 1
    assert state.step == 0
    assert numpy.all(state.first_moment == 0)


def test_adam_minimizes_a_quadratic():
    target = numpy.array([0.3, -1.2])
    state = optimization_algorithms.initial_adam_state(2)
    raw = numpy.zeros(2)
    for _ in range(2000):
        state, raw = optimization_algorithms.adam_step(state, raw, 2.0 * (raw - target), 1e-2)
    numpy.testing.assert_allclose(raw, target, atol=1e-3)


def test_non_finite_gradients_are_rejected():
    state = optimization_algorithms.initial_adam_state(2)
    with pytest.raises(exceptions.KerbilNonFiniteGradientError):
        optimization_algorithms.adam_step(state, numpy.zeros(2), numpy.array([1.0, numpy.nan]), 1.0)
    with pytest.raises(exceptions.KerbilDimensionMismatchError):
        optimization_algorithms.adam_step(state, numpy.zeros(2), numpy.ones(3), 1.0)


def test_penalties():
    raw = numpy.array([1.0, -2.0])
    penalty, gradient = optimization_algorithms.regularization_penalty(raw, 0.5)
    assert penalty == pytest.approx(2.5)
    numpy.testing.assert_allclose(gradient, [1.0, -2.0])
    penalty, gradient = optimization_algorithms.regularization_penalty(raw, 0.5, "l1")
    assert penalty == pytest.approx(1.5)
    numpy.testing.assert_allclose(gradient, [0.5, -0.5])
    penalty, gradient = optimization_algorithms.regularization_penalty(raw, 0.0)
    assert penalty == 0.0
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        optimization_algorithms.regularization_penalty(raw, 1.0, "huber")
