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
Dynamic import of KerBil problem definitions.

This module contains functions that import the problem definitions selected in the
experiment configuration.
"""
from __future__ import absolute_import, division, print_function

import importlib
from types import ModuleType  # pylint: disable=unused-import
from typing import Any, Callable, Dict  # pylint: disable=unused-import

from future.utils import raise_from

from kerbil.utils import exceptions


def import_problem(problem_filename):
    # type: (str) -> ModuleType
    """
    Imports the specified problem definition.

    This function searches for the python file with the implementation of the problem
    in the standard KerBil folder structure first. If the file is not found there,
    this function looks for it in the working directory.

    Arguments:

        problem_filename (str): the name of a python file containing the problem
            definition.

    Returns:

        ModuleType: the imported problem module.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilUnknownProblemError`: if the problem
            module cannot be found, or if it does not define a 'build_problem'
            function.
    """
    try:
        problem_module = importlib.import_module(
            "kerbil.problems.{0}".format(problem_filename)
        )
    except ImportError:
        try:
            problem_module = importlib.import_module(problem_filename)
        except ImportError as exc:
            raise_from(
                exc=exceptions.KerbilUnknownProblemError(
                    "Problem {0} could not be found.".format(problem_filename)
                ),
                cause=exc,
            )
    if not hasattr(problem_module, "build_problem"):
        raise exceptions.KerbilUnknownProblemError(
            "Module {0} does not define a build_problem function.".format(
                problem_filename
            )
        )

    return problem_module


def get_problem_builder(problem_filename):
    # type: (str) -> Callable[..., Any]
    """
    Retrieves the problem factory of a problem definition.

    Arguments:

        problem_filename (str): the name of a python file containing the problem
            definition.

    Returns:

        Callable[..., Any]: the 'build_problem' function of the module.
    """
    return getattr(import_problem(problem_filename), "build_problem")
