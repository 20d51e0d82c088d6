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
Gray-Scott reaction-diffusion problem.

This module contains the Gray-Scott system
u_t - D_u u_xx + u v^2 - F (1 - u) = 0 and v_t - D_v v_xx - u v^2 + (F + k) v = 0
on (t, x) in (0, 1) x (0, 1), with homogeneous Neumann conditions at x = 0 and
x = 1 and a choice of initial conditions.
"""
from __future__ import absolute_import, division, print_function

import collections
import math
from typing import Any, Callable, Dict, List, Optional, Tuple  # pylint: disable=unused-import

import numpy

from kerbil.problems import base
from kerbil.utils import exceptions, named_tuples


def _space(points):
    # type: (numpy.ndarray) -> numpy.ndarray
    return numpy.atleast_2d(points)[:, 1]


# Initial values (u, v) of each case, as functions of x.
INITIAL_CASES = collections.OrderedDict(
    [
        (
            "base",
            (
                lambda x: -numpy.sin(3.0 * math.pi * x + 0.5 * math.pi),
                lambda x: numpy.cos(2.0 * math.pi * x),
            ),
        ),
        (
            "A",
            (
                lambda x: numpy.sin(7.0 * math.pi * x + 0.5 * math.pi),
                lambda x: -numpy.cos(2.0 * math.pi * x),
            ),
        ),
        (
            "B",
            (
                lambda x: -numpy.cos(4.0 * math.pi * x),
                lambda x: numpy.sin(5.0 * math.pi * x + 0.5 * math.pi),
            ),
        ),
        (
            "C",
            (
                lambda x: numpy.cos(8.0 * math.pi * x),
                lambda x: numpy.cos(5.0 * math.pi * x),
            ),
        ),
    ]
)


class GrayScottProblem(base.Problem):
    """
    See documentation of the '__init__' function.
    """

    name = "gray_scott"
    component_names = ("u", "v")
    equation_names = ("u", "v")
    default_constants = collections.OrderedDict(
        [
            ("diffusion_u", 0.001),
            ("diffusion_v", 0.002),
            ("feed", 0.04),
            ("kill", 0.06),
            ("initial_case", "base"),
        ]
    )
    default_boundary_weight = 1.0

    def __init__(self, constants=None):
        # type: (Optional[Dict[str, Any]]) -> None
        """
        Gray-Scott problem.

        Constants: 'diffusion_u' (default 0.001), 'diffusion_v' (default 0.002),
        'feed' F (default 0.04), 'kill' k (default 0.06) and 'initial_case' ('base',
        'A', 'B' or 'C').
        """
        super(GrayScottProblem, self).__init__(constants)
        self.diffusion_u = self.constants["diffusion_u"]
        self.diffusion_v = self.constants["diffusion_v"]
        self.feed = self.constants["feed"]
        self.kill = self.constants["kill"]
        self.initial_case = self.constants["initial_case"]

    def validate_constants(self):
        # type: () -> None
        if self.constants["initial_case"] not in INITIAL_CASES:
            raise exceptions.KerbilConfigurationSchemaError(
                "Unknown Gray-Scott initial case {0} (known: {1}).".format(
                    self.constants["initial_case"], ", ".join(INITIAL_CASES)
                )
            )

    def with_initial_case(self, case):
        # type: (str) -> GrayScottProblem
        """
        Returns the same problem with another initial condition.
        """
        constants = dict(self.constants)
        constants["initial_case"] = case
        return GrayScottProblem(constants)

    def faces(self):
        # type: () -> Tuple[named_tuples.Face, ...]
        return (
            named_tuples.Face(axis=1, value=self.lower[1], tag="boundary"),
            named_tuples.Face(axis=1, value=self.upper[1], tag="boundary"),
            named_tuples.Face(axis=0, value=self.lower[0], tag="initial"),
        )

    def initial_values(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Returns the initial values of (u, v) at the space coordinate of the points.
        """
        initial_u, initial_v = INITIAL_CASES[self.initial_case]
        x = _space(points)
        return numpy.stack([initial_u(x), initial_v(x)], axis=1)

    def boundary_conditions(self):
        # type: () -> Tuple[named_tuples.BoundaryCondition, ...]
        initial_u, initial_v = INITIAL_CASES[self.initial_case]
        return (
            named_tuples.BoundaryCondition(
                tag="boundary", component="u", terms=((base.D1, 1.0),), value=base.zero_value
            ),
            named_tuples.BoundaryCondition(
                tag="boundary", component="v", terms=((base.D1, 1.0),), value=base.zero_value
            ),
            named_tuples.BoundaryCondition(
                tag="initial",
                component="u",
                terms=((base.ZERO, 1.0),),
                value=lambda points: initial_u(_space(points)),
            ),
            named_tuples.BoundaryCondition(
                tag="initial",
                component="v",
                terms=((base.ZERO, 1.0),),
                value=lambda points: initial_v(_space(points)),
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
        reaction = u * v * v
        equation_u = (
            base.feature(features, "u", base.D0)
            - self.diffusion_u * base.feature(features, "u", base.D11)
            + reaction
            - self.feed * (1.0 - u)
        )
        equation_v = (
            base.feature(features, "v", base.D0)
            - self.diffusion_v * base.feature(features, "v", base.D11)
            - reaction
            + (self.feed + self.kill) * v
        )
        return numpy.stack([equation_u, equation_v], axis=1)

    def jacobian(self, features):
        # type: (named_tuples.StateFeatures) -> List[List[named_tuples.BlockPart]]
        u = base.feature(features, "u", base.ZERO)
        v = base.feature(features, "v", base.ZERO)
        num_points = u.shape[0]
        alphas = (base.ZERO, base.D0, base.D11)
        return [
            [
                base.constant_part(
                    0, alphas, (v * v + self.feed, 1.0, -self.diffusion_u), num_points
                ),
                base.constant_part(1, (base.ZERO,), (2.0 * u * v,), num_points),
            ],
            [
                base.constant_part(0, (base.ZERO,), (-v * v,), num_points),
                base.constant_part(
                    1,
                    alphas,
                    (self.feed + self.kill - 2.0 * u * v, 1.0, -self.diffusion_v),
                    num_points,
                ),
            ],
        ]


def build_problem(constants=None):
    # type: (Optional[Dict[str, Any]]) -> GrayScottProblem
    """
    Creates the Gray-Scott problem.
    """
    return GrayScottProblem(constants)
