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
Viscous Burgers problem.

This module contains the problem u_t + u u_x - nu u_xx = 0 on (t, x) in
(0, 1] x (-1, 1), with u(0, x) = -sin(pi x) and u = 0 at x = -1 and x = 1.
"""
from __future__ import absolute_import, division, print_function

import collections
import math
from typing import Any, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


def initial_value(points):
    # type: (numpy.ndarray) -> numpy.ndarray
    """
    The initial condition -sin(pi x).
    """
    return -numpy.sin(math.pi * numpy.atleast_2d(points)[:, 1])


class BurgersProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "burgers"
    lower = (0.0, -1.0)
    upper = (1.0, 1.0)
    default_constants = collections.OrderedDict([("viscosity", 0.02)])

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Viscous Burgers problem.

        Constant: 'viscosity' (nu, default 0.02).
        """
        super(BurgersProblem, self).__init__(constants)
        self.viscosity = self.constants["viscosity"]

    def validate_constants(self):
        # type: () -> None
        if self.constants["viscosity"] <= 0:
            raise exceptions.KerbilWrongParameterTypeError(
                "The Burgers viscosity must be positive."
            )

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        return (
            named_tuples.Face(axis=0, value=self.lower[0], tag="initial"),
            named_tuples.Face(axis=1, value=self.lower[1], tag="boundary"),
            named_tuples.Face(axis=1, value=self.upper[1], tag="boundary"),
        )

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        return (
            named_tuples.BoundaryCondition(
                tag="initial", component="u", terms=((base.ZERO, 1.0),), value=initial_value
            ),
            named_tuples.BoundaryCondition(
                tag="boundary", component="u", terms=((base.ZERO, 1.0),), value=base.zero_value
            ),
        )

    def features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        return {"u": (base.ZERO, base.D0, base.D1, base.D11)}

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        value = base.feature(features, "u", base.ZERO)
        return (
            base.feature(features, "u", base.D0)
            + value * base.feature(features, "u", base.D1)
            - self.viscosity * base.feature(features, "u", base.D11)
        )[:, None]

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        value = base.feature(features, "u", base.ZERO)
        slope = base.feature(features, "u", base.D1)
        return [
            [
                base.constant_part(
                    0,
                    (base.ZERO, base.D0, base.D1, base.D11),
                    (slope, 1.0, value, -self.viscosity),
                    value.shape[0],
                )
            ]
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> BurgersProblem
    """
    Creates the Burgers problem.
    """
    return BurgersProblem(constants)
