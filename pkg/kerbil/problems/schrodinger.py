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
Nonlinear Schrodinger problem.

This module contains the focusing cubic Schrodinger equation
i h_t + 0.5 h_xx + g |h|^2 h = 0 for a complex field h = u + i v on
(0, 1) x [-5, 5), periodic in space, with initial condition h(0, x) = 2 / cosh(x).
The real part u and the imaginary part v are two independent GP components over
space-time.
"""
from __future__ import absolute_import, division, print_function

import collections
from typing import Any, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import named_tuples


def initial_real_part(points):
    # type: (numpy.ndarray) -> numpy.ndarray
    """
    Real part of the initial condition, 2 / cosh(x).
    """
    return 2.0 / numpy.cosh(numpy.atleast_2d(points)[:, 1])


class SchrodingerProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "schrodinger"
    component_names = ("u", "v")
    equation_names = ("real", "imaginary")
    lower = (0.0, -5.0)
    upper = (1.0, 5.0)
    default_constants = collections.OrderedDict([("nonlinearity", 1.0)])

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Nonlinear Schrodinger problem.

        Constant: 'nonlinearity' (the coefficient g of the cubic term, default 1.0).
        Only the initial condition is imposed: the periodicity in space is carried by
        the kernels.
        """
        super(SchrodingerProblem, self).__init__(constants)
        self.nonlinearity = self.constants["nonlinearity"]

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        return (named_tuples.Face(axis=0, value=self.lower[0], tag="initial"),)

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        return (
            named_tuples.BoundaryCondition(
                tag="initial",
                component="u",
                terms=((base.ZERO, 1.0),),
                value=initial_real_part,
            ),
            named_tuples.BoundaryCondition(
                tag="initial",
                component="v",
                terms=((base.ZERO, 1.0),),
                value=base.zero_value,
            ),
        )

    def features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        return {
            "u": (base.ZERO, base.D0, base.D11),
            "v": (base.ZERO, base.D0, base.D11),
        }

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        u = base.feature(features, "u", base.ZERO)
        v = base.feature(features, "v", base.ZERO)
        modulus = self.nonlinearity * (u * u + v * v)
        real = (
            -base.feature(features, "v", base.D0)
            + 0.5 * base.feature(features, "u", base.D11)
            + modulus * u
        )
        imaginary = (
            base.feature(features, "u", base.D0)
            + 0.5 * base.feature(features, "v", base.D11)
            + modulus * v
        )
        return numpy.stack([real, imaginary], axis=1)

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        u = base.feature(features, "u", base.ZERO)
        v = base.feature(features, "v", base.ZERO)
        g = self.nonlinearity
        num_points = u.shape[0]
        alphas = (base.ZERO, base.D0, base.D11)
        return [
            [
                base.constant_part(
                    0, alphas, (g * (3.0 * u * u + v * v), 0.0, 0.5), num_points
                ),
                base.constant_part(1, alphas, (2.0 * g * u * v, -1.0, 0.0), num_points),
            ],
            [
                base.constant_part(0, alphas, (2.0 * g * u * v, 1.0, 0.0), num_points),
                base.constant_part(
                    1, alphas, (g * (u * u + 3.0 * v * v), 0.0, 0.5), num_points
                ),
            ],
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> SchrodingerProblem
    """
    Creates the Schrodinger problem.
    """
    return SchrodingerProblem(constants)
