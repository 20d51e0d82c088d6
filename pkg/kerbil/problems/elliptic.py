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
Nonlinear elliptic problem.

This module contains the problem -Laplacian(u) + alpha * u^m = f on the unit square,
with homogeneous Dirichlet conditions and a manufactured solution
u(x, y) = sin(pi x) sin(pi y) + 4 sin(4 pi x) sin(4 pi y).
"""
from __future__ import absolute_import, division, print_function

import collections
import math
from typing import Any, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


class EllipticProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "elliptic"
    default_constants = collections.OrderedDict([("alpha", 1.0), ("power", 3.0)])

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Nonlinear elliptic problem.

        Constants: 'alpha' (weight of the nonlinear term, default 1.0; 0.0 gives the
        linear Poisson problem) and 'power' (the exponent m, a positive integer,
        default 3).
        """
        super(EllipticProblem, self).__init__(constants)
        self.alpha = self.constants["alpha"]
        self.power = int(self.constants["power"])

    def validate_constants(self):
        # type: () -> None
        power = self.constants["power"]
        if power < 1 or power != int(power):
            raise exceptions.KerbilWrongParameterTypeError(
                "The power of the elliptic problem must be a positive integer."
            )

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        return base.dirichlet_faces(self.lower, self.upper)

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        return (
            named_tuples.BoundaryCondition(
                tag="boundary",
                component="u",
                terms=((base.ZERO, 1.0),),
                value=base.zero_value,
            ),
        )

    def features(self):
        # type: () -> Dict[str, Tuple[Tuple[int, ...], ...]]
        return {"u": (base.ZERO, base.D00, base.D11)}

    def exact_solution(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        points = numpy.atleast_2d(points)
        x, y = points[:, 0], points[:, 1]
        values = numpy.sin(math.pi * x) * numpy.sin(math.pi * y) + 4.0 * numpy.sin(
            4.0 * math.pi * x
        ) * numpy.sin(4.0 * math.pi * y)
        return values[:, None]

    def forcing(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        points = numpy.atleast_2d(points)
        x, y = points[:, 0], points[:, 1]
        # Each sin(k pi x) sin(k pi y) term is an eigenfunction of -Laplacian with
        # eigenvalue 2 k^2 pi^2.
        minus_laplacian = 2.0 * math.pi ** 2 * numpy.sin(math.pi * x) * numpy.sin(
            math.pi * y
        ) + 128.0 * math.pi ** 2 * numpy.sin(4.0 * math.pi * x) * numpy.sin(
            4.0 * math.pi * y
        )
        solution = self.exact_solution(points)[:, 0]
        return (minus_laplacian + self.alpha * solution ** self.power)[:, None]

    def operator(self, features):
        # type: (named_tuples.StateFeatures) -> numpy.ndarray
        value = base.feature(features, "u", base.ZERO)
        laplacian = base.feature(features, "u", base.D00) + base.feature(
            features, "u", base.D11
        )
        return (-laplacian + self.alpha * value ** self.power)[:, None]

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        value = base.feature(features, "u", base.ZERO)
        num_points = value.shape[0]
        return [
            [
                base.constant_part(
                    0,
                    (base.ZERO, base.D00, base.D11),
                    (
                        self.alpha * self.power * value ** (self.power - 1),
                        -1.0,
                        -1.0,
                    ),
                    num_points,
                )
            ]
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> EllipticProblem
    """
    Creates the elliptic problem.
    """
    return EllipticProblem(constants)
