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
Darcy flow inverse problem.

This module contains the problem of recovering the coefficient a and the pressure u
of -div(exp(a) grad u) = f on the unit square, with u = 0 on the boundary, from noisy
point observations of u. Both u (component 0) and a (component 1) are GP components.
"""
from __future__ import absolute_import, division, print_function

import collections
import math
from typing import Any, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


class DarcyProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "darcy_inverse"
    component_names = ("u", "a")
    default_constants = collections.OrderedDict(
        [("source", 1.0), ("noise_std", 1e-3), ("observations", 60.0)]
    )
    has_observations = True

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Darcy inverse problem.

        Constants: 'source' (the constant right-hand side f, default 1.0),
        'noise_std' (the standard deviation gamma of the observation noise, default
        1e-3) and 'observations' (the number L of observed points, default 60).
        """
        super(DarcyProblem, self).__init__(constants)
        self.source = self.constants["source"]
        self.noise_std = self.constants["noise_std"]
        self.num_observations = int(self.constants["observations"])

    def validate_constants(self):
        # type: () -> None
        count = self.constants["observations"]
        if count < 1 or count != int(count):
            raise exceptions.KerbilWrongParameterTypeError(
                "The number of Darcy observations must be a positive integer."
            )
        if self.constants["noise_std"] < 0:
            raise exceptions.KerbilWrongParameterTypeError(
                "The Darcy noise level cannot be negative."
            )

    def true_coefficient(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Returns exp(a) for the true coefficient a.

        exp(a)(x) = exp(s_1 + s_2) + exp(-s_1 - s_2), with s_i = sin(2 pi x_i).
        """
        points = numpy.atleast_2d(points)
        phase = numpy.sin(2.0 * math.pi * points[:, 0]) + numpy.sin(
            2.0 * math.pi * points[:, 1]
        )
        return numpy.exp(phase) + numpy.exp(-phase)

    def true_log_coefficient(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Returns the true coefficient a.
        """
        return numpy.log(self.true_coefficient(points))

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        return base.dirichlet_faces(self.lower, self.upper)

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        return (
            named_tuples.BoundaryCondition(
                tag="boundary", component="u", terms=((base.ZERO, 1.0),), value=base.zero_value
            ),
        )

    def features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        return {
            "u": (base.D0, base.D1, base.D00, base.D11),
            "a": (base.ZERO, base.D0, base.D1),
        }

    def forcing(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        return numpy.full((numpy.atleast_2d(points).shape[0], 1), self.source)

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        coefficient = numpy.exp(base.feature(features, "a", base.ZERO))
        transport = base.feature(features, "a", base.D0) * base.feature(
            features, "u", base.D0
        ) + base.feature(features, "a", base.D1) * base.feature(features, "u", base.D1)
        laplacian = base.feature(features, "u", base.D00) + base.feature(
            features, "u", base.D11
        )
        return (-coefficient * (transport + laplacian))[:, None]

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        coefficient = numpy.exp(base.feature(features, "a", base.ZERO))
        a_x = base.feature(features, "a", base.D0)
        a_y = base.feature(features, "a", base.D1)
        u_x = base.feature(features, "u", base.D0)
        u_y = base.feature(features, "u", base.D1)
        laplacian = base.feature(features, "u", base.D00) + base.feature(
            features, "u", base.D11
        )
        num_points = coefficient.shape[0]
        return [
            [
                base.constant_part(
                    0,
                    (base.D0, base.D1, base.D00, base.D11),
                    (
                        -coefficient * a_x,
                        -coefficient * a_y,
                        -coefficient,
                        -coefficient,
                    ),
                    num_points,
                ),
                base.constant_part(
                    1,
                    (base.ZERO, base.D0, base.D1),
                    (
                        -coefficient * (a_x * u_x + a_y * u_y + laplacian),
                        -coefficient * u_x,
                        -coefficient * u_y,
                    ),
                    num_points,
                ),
            ]
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> DarcyProblem
    """
    Creates the Darcy inverse problem.
    """
    return DarcyProblem(constants)
