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
Optimization algorithms.

This module contains the Adam optimizer used to update the kernel hyperparameters
and the penalties that can regularize them.
"""
from __future__ import absolute_import, division, print_function

from typing import Tuple  # pylint: disable=unused-import

import numpy

from kerbil.utils import exceptions, named_tuples


ADAM_BETA_1 = 0.9
ADAM_BETA_2 = 0.999
ADAM_EPSILON = 1e-8

REGULARIZERS = ("l2", "l1")


def initial_adam_state(num_params):
    # type: (int) -> named_tuples.AdamState
    """
    Returns the state of an optimizer that has not taken any step yet.

    Arguments:

        num_params (int): the number of optimized parameters.

    Returns:

        :class:`~kerbil.utils.named_tuples.AdamState`: zero moments and a zero step
        counter.
    """
    return named_tuples.AdamState(
        first_moment=numpy.zeros(num_params),
        second_moment=numpy.zeros(num_params),
        step=0,
    )


def adam_step(
    state,
    raw,
    gradient,
    learning_rate,
    beta_1=ADAM_BETA_1,
    beta_2=ADAM_BETA_2,
    epsilon=ADAM_EPSILON,
):
    # type: (named_tuples.AdamState, numpy.ndarray, numpy.ndarray, float, float, float, float) -> Tuple[named_tuples.AdamState, numpy.ndarray]
    """
    Applies one bias-corrected Adam update.

    The update works on the unconstrained parameters. The input state and parameters
    are not modified.

    Arguments:

        state (:class:`~kerbil.utils.named_tuples.AdamState`): the optimizer state.

        raw (numpy.ndarray): the unconstrained parameters.

        gradient (numpy.ndarray): the gradient of the loss at the parameters.

        learning_rate (float): the step size.

        beta_1 (float): the decay rate of the first moment. Defaults to 0.9.

        beta_2 (float): the decay rate of the second moment. Defaults to 0.999.

        epsilon (float): the offset of the denominator. Defaults to 1e-8.

    Returns:

        Tuple[:class:`~kerbil.utils.named_tuples.AdamState`, numpy.ndarray]: the new
        optimizer state and the updated parameters.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilNonFiniteGradientError`: if the
            gradient contains NaN or infinite entries. The state is left untouched
            and the step must be skipped.

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
            gradient and the moments have different sizes.
    """
    gradient = numpy.asarray(gradient, dtype=numpy.float64)
    if gradient.shape != state.first_moment.shape:
        raise exceptions.KerbilDimensionMismatchError(
            "Gradient of shape {0} for an optimizer over {1} parameters.".format(
                gradient.shape, state.first_moment.shape[0]
            )
        )
    if not numpy.all(numpy.isfinite(gradient)):
        raise exceptions.KerbilNonFiniteGradientError(
            "The hypergradient has {0} non-finite entries.".format(
                int(numpy.sum(~numpy.isfinite(gradient)))
            )
        )
    step = state.step + 1
    first_moment = beta_1 * state.first_moment + (1.0 - beta_1) * gradient
    second_moment = (
        beta_2 * state.second_moment + (1.0 - beta_2) * gradient ** 2
    )
    corrected_first = first_moment / (1.0 - beta_1 ** step)
    corrected_second = second_moment / (1.0 - beta_2 ** step)
    update = learning_rate * corrected_first / (numpy.sqrt(corrected_second) + epsilon)

    return (
        named_tuples.AdamState(
            first_moment=first_moment, second_moment=second_moment, step=step
        ),
        numpy.asarray(raw, dtype=numpy.float64) - update,
    )


def regularization_penalty(raw, weight, kind="l2"):
    # type: (numpy.ndarray, float, str) -> Tuple[float, numpy.ndarray]
    """
    Computes a penalty on the unconstrained hyperparameters and its gradient.

    Arguments:

        raw (numpy.ndarray): the unconstrained hyperparameters.

        weight (float): the non-negative weight of the penalty.

        kind (str): 'l2' for weight * |raw|^2, 'l1' for weight * |raw|_1 (with the
            sign function as subgradient). Defaults to 'l2'.

    Returns:

        Tuple[float, numpy.ndarray]: the penalty and its gradient.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if the
            kind is not known.
    """
    raw = numpy.asarray(raw, dtype=numpy.float64)
    if kind not in REGULARIZERS:
        raise exceptions.KerbilConfigurationSchemaError(
            "Unknown regularizer {0} (known: {1}).".format(kind, ", ".join(REGULARIZERS))
        )
    if weight == 0.0:
        return 0.0, numpy.zeros_like(raw)
    if kind == "l2":
        return float(weight * numpy.dot(raw, raw)), 2.0 * weight * raw

    return float(weight * numpy.sum(numpy.abs(raw))), weight * numpy.sign(raw)
