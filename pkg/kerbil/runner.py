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
KerBil main function.

This module contains the command-line entry point of KerBil: the 'run', 'gradcheck',
'sweep' and 'report' commands.
"""
from __future__ import absolute_import, division, print_function

import sys
from typing import Optional, Tuple  # pylint: disable=unused-import

import click

from kerbil.processing_layer import experiment
from kerbil.utils import exceptions, parameters


def _prepare(config, seed, out, threads, deterministic, quiet, debug):
    # type: (str, Optional[int], Optional[str], int, bool, bool, bool) -> experiment.Experiment
    # Sets a custom exception handler to deal with KerBil-specific exceptions.
    if not debug:
        sys.excepthook = exceptions.kerbil_exception_handler
    experiment_parameters = parameters.ExperimentParams(config)

    return experiment.Experiment(
        experiment_parameters,
        seed=seed,
        output_directory=out,
        num_threads=threads,
        deterministic=deterministic,
        verbose=not quiet,
    )


def _run_command(function, debug):
    # type: (...) -> None
    try:
        function()
    except exceptions.KerbilException as exc:
        if debug:
            raise
        exceptions.report_and_exit(exc)


_config_option = click.option(
    "--config",
    "-c",
    default="kerbil.toml",
    type=click.Path(),
    help="configuration file (default: kerbil.toml file in the current working "
    "directory)",
)
_seed_option = click.option(
    "--seed", default=None, type=int, help="master seed (overrides the configuration)"
)
_out_option = click.option(
    "--out",
    default=None,
    type=click.Path(),
    help="output directory (overrides the configuration)",
)
_debug_option = click.option(
    "--debug",
    "-d",
    default=False,
    type=bool,
    is_flag=True,
    help="Disable custom KerBil error handler",
)
_quiet_option = click.option(
    "--quiet",
    default=False,
    type=bool,
    is_flag=True,
    help="Do not print one line per Gauss-Newton iteration",
)


@click.group()
def main():
    # type: () -> None
    """
    KerBil: Gaussian-process PDE solvers with bilevel kernel hyperparameter learning.
    """


@main.command()
@_config_option
@_seed_option
@_out_option
@_quiet_option
@_debug_option
def run(config, seed, out, quiet, debug):
    # type: (str, Optional[int], Optional[str], bool, bool) -> None
    """
    Learns the kernel hyperparameters of the configured experiment, solves the
    problem from scratch with them and writes the report files.

    Exit status: 0 on success, 1 on configuration errors, 2 if the run aborts.
    """

    def command():
        # type: () -> None
        runner = _prepare(config, seed, out, 1, True, quiet, debug)
        runner.run()

    _run_command(command, debug)


@main.command()
@_config_option
@_seed_option
@_quiet_option
@_debug_option
@click.option(
    "--derivative-scale",
    default=1.0,
    type=float,
    hidden=True,
    help="scale applied to every analytic hyperparameter derivative",
)
def gradcheck(config, seed, quiet, debug, derivative_scale):
    # type: (str, Optional[int], bool, bool, float) -> None
    """
    Compares the tangent, adjoint and finite-difference hypergradients on the
    configured problem.

    Exit status: 0 if the hypergradients agree, 1 otherwise.
    """

    def command():
        # type: () -> None
        runner = _prepare(config, seed, None, 1, True, quiet, debug)
        runner.gradcheck(derivative_scale=derivative_scale)

    _run_command(command, debug)


@main.command()
@_config_option
@_seed_option
@_out_option
@click.option(
    "--threads", default=1, type=click.IntRange(min=1), help="number of worker threads"
)
@click.option(
    "--deterministic/--nondeterministic",
    default=True,
    help="collect the sweep results in cell order (default) or as they complete",
)
@_quiet_option
@_debug_option
def sweep(config, seed, out, threads, deterministic, quiet, debug):
    # type: (str, Optional[int], Optional[str], int, bool, bool, bool) -> None
    """
    Solves the configured problem from scratch over the grid of hyperparameter
    values and interior point counts of the [sweep] group, and writes 'sweep.csv'.
    """

    def command():
        # type: () -> None
        runner = _prepare(config, seed, out, threads, deterministic, quiet, debug)
        runner.sweep()

    _run_command(command, debug)


@main.command()
@click.option(
    "--out",
    default=".",
    type=click.Path(),
    help="directory of the comparison table (default: the current working directory)",
)
@_debug_option
@click.argument("directories", nargs=-1, type=click.Path())
def report(out, debug, directories):
    # type: (str, bool, Tuple[str, ...]) -> None
    """
    Aggregates the reports of one or more runs into a comparison table.

    DIRECTORIES: the output directories of the runs.
    """
    if not debug:
        sys.excepthook = exceptions.kerbil_exception_handler

    def command():
        # type: () -> None
        experiment.compare_reports(list(directories), out)

    _run_command(command, debug)
