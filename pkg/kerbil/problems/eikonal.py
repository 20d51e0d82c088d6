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
Regularized Eikonal problem.

This module contains the problem |grad u|^2 - epsilon Laplacian(u) = f on the unit
square with u = 0 on the boundary.
"""
from __future__ import absolute_import, division, print_function

import collections
from typing import Any, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


class EikonalProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "eikonal"
    default_constants = collections.OrderedDict([("epsilon", 0.01), ("source", 1.0)])

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Regularized Eikonal problem.

        Constants: 'epsilon' (the viscosity, default 0.01) and 'source' (the constant
        right-hand side f, default 1.0).
        """
        super(EikonalProblem, self).__init__(constants)
        self.epsilon = self.constants["epsilon"]
        self.source = self.constants["source"]

    def validate_constants(self):
        # type: () -> None
        if self.constants["epsilon"] <= 0 or self.constants["source"] <= 0:
            raise exceptions.KerbilWrongParameterTypeError(
                "The Eikonal viscosity and source must be positive."
            )

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
        return {"u": (base.D0, base.D1, base.D00, base.D11)}

    def forcing(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        return numpy.full((numpy.atleast_2d(points).shape[0], 1), self.source)

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        gradient_x = base.feature(features, "u", base.D0)
        gradient_y = base.feature(features, "u", base.D1)
        laplacian = base.feature(features, "u", base.D00) + base.feature(
            features, "u", base.D11
        )
        return (gradient_x ** 2 + gradient_y ** 2 - self.epsilon * laplacian)[:, None]

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        gradient_x = base.feature(features, "u", base.D0)
        gradient_y = base.feature(features, "u", base.D1)
        return [
            [
                base.constant_part(
                    0,
                    (base.D0, base.D1, base.D00, base.D11),
                    (2.0 * gradient_x, 2.0 * gradient_y, -self.epsilon, -self.epsilon),
                    gradient_x.shape[0],
                )
            ]
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> EikonalProblem
    """
    Creates the Eikonal problem.
    """
    return EikonalProblem(constants)
