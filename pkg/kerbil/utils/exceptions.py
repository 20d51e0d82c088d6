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
KerBil-specific exceptions and exception handling.

This module contains a set of python exceptions that are specific to KerBil, and a
custom exception handler that reports the KerBil exceptions in a simplified way.
"""
from __future__ import absolute_import, division, print_function

import sys
import traceback  # pylint: disable=unused-import


class KerbilException(Exception):
    """
    Base KerBil exception.

    All other KerBil-specific exceptions must subclass from this exception. The
    'exit_code' attribute is the process exit status used when the exception stops a
    command.
    """

    exit_code = 1


class KerbilConfigurationFileSyntaxError(KerbilException):
    """
    Raised if there is a syntax error in the configuration file.
    """


class KerbilConfigurationFileReadingError(KerbilException):
    """
    Raised if an error happens while reading the configuration file.
    """


class KerbilConfigurationSchemaError(KerbilException):
    """
    Raised if the configuration file contains an unknown group or parameter.
    """


class KerbilMissingParameterGroupError(KerbilException):
    """
    Raised if a parameter group is missing from the configuration file.
    """


class KerbilMissingParameterError(KerbilException):
    """
    Raised if a parameter is missing from the configuration file.
    """


class KerbilWrongParameterTypeError(KerbilException):
    """
    Raised if the type of the configuration parameter does not match the requested one.
    """


class KerbilUnknownProblemError(KerbilException):
    """
    Raised if the requested problem cannot be found.
    """


class KerbilUnknownKernelError(KerbilException):
    """
    Raised if the requested kernel variant does not exist.
    """


class KerbilHdf5FileReadingError(KerbilException):
    """
    Raised if an error happens while reading an HDF5 file.
    """


class KerbilHdf5FileWritingError(KerbilException):
    """
    Raised if an error happens while writing an HDF5 file.
    """


class KerbilReportWritingError(KerbilException):
    """
    Raised if a report file or directory cannot be written.
    """


class KerbilNotPositiveDefiniteError(KerbilException):
    """
    Raised if a matrix cannot be Cholesky-factorized even after adding the nugget.
    """


class KerbilDimensionMismatchError(KerbilException):
    """
    Raised if the dimensions of two operands do not match.
    """


class KerbilSingularKktError(KerbilException):
    """
    Raised if a KKT saddle-point system is singular.
    """


class KerbilUnsupportedOrderError(KerbilException):
    """
    Raised if a derivative of order higher than two per argument is requested.
    """


class KerbilVariantMismatchError(KerbilException):
    """
    Raised if an operation is not available for the given kernel variant.
    """


class KerbilInvalidCountsError(KerbilException):
    """
    Raised if the point counts requested for a problem are not valid.
    """


class KerbilDuplicatePointError(KerbilException):
    """
    Raised if two functionals of the same kind are attached to coincident points.
    """


class KerbilRejectedThetaError(KerbilException):
    """
    Raised if the inner problem cannot be solved for the current hyperparameters.
    """


class KerbilUseAdjointError(KerbilException):
    """
    Raised if tangent-mode hypergradients are requested for too many parameters.
    """


class KerbilGradientGuardError(KerbilException):
    """
    Raised if finite-difference hypergradients are requested for too many parameters.
    """


class KerbilNonFiniteGradientError(KerbilException):
    """
    Raised if a gradient contains non-finite entries.
    """


class KerbilAbortedRunError(KerbilException):
    """
    Raised if a bilevel run cannot continue.
    """

    exit_code = 2


class KerbilOracleNotConvergedError(KerbilException):
    """
    Raised if a reference solver fails its own refinement check.
    """


class KerbilEmptyReportError(KerbilException):
    """
    Raised if no run report can be found in the provided directories.
    """


class KerbilGradientCheckError(KerbilException):
    """
    Raised if analytic and finite-difference hypergradients disagree.
    """


def report_and_exit(exception):
    # type: (KerbilException) -> None
    """
    Reports a KerBil exception and stops the program.

    This function prints the message carried by the exception, labelled as a KerBil
    error, and exits with the exit code attached to the exception class.

    Arguments:

        exception (KerbilException): the exception to report.
    """
    print("KerBil ERROR: {0}".format(exception))
    sys.stdout.flush()
    sys.stderr.flush()
    sys.exit(exception.exit_code)


def kerbil_exception_handler(type_, value, traceback_):
    """
    Custom KerBil exception handler.

    This function should never be called directly. Instead it should be used as a
    replacement for the standard exception handler. For all KerBil exceptions, this
    handler adds a label to the Exception, hides the stacktrace and exits with the
    exit code of the exception. All non-KerBil exceptions are instead reported
    normally.

    Arguments:

        type_ (Exception): exception type.

        value (str): exception value (the message that comes with the exception).

        traceback_ (str): traceback to be printed.
    """
    if issubclass(type_, KerbilException):
        report_and_exit(value)
    else:
        traceback.print_exception(type_, value, traceback_)
        sys.stdout.flush()
        sys.stderr.flush()
        sys.exit(1)
