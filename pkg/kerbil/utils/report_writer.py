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
Report files.

This module contains the functions and classes that write the results of KerBil
experiments to disk (JSON reports and CSV tables) and read them back.
"""
from __future__ import absolute_import, division, print_function

import collections
import csv
import io
import json
import os
import os.path
from typing import Any, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

from future.utils import raise_from

import kerbil
from kerbil.utils import exceptions


REPORT_FILENAME = "report.json"


def flatten_theta(theta):
    # type: (Dict[str, Any]) -> collections.OrderedDict
    """
    Flattens a dictionary of hyperparameter values into scalar columns.

    Vector-valued parameters are split into one column per entry, named
    '<name>[<index>]'.
    """
    columns = collections.OrderedDict()  # type: collections.OrderedDict
    for name, value in theta.items():
        if isinstance(value, (list, tuple)):
            for index, entry in enumerate(value):
                columns["{0}[{1}]".format(name, index)] = entry
        else:
            columns[name] = value
    return columns


def _json_default(value):
    # type: (Any) -> Any
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "_asdict"):
        return value._asdict()
    raise TypeError("Object of type {0} is not serializable".format(type(value)))


def write_json(filename, data):
    # type: (str, Any) -> None
    """
    Writes data to a JSON file, with sorted keys.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilReportWritingError`: if the file
            cannot be written.
    """
    try:
        with io.open(filename, "w", encoding="utf-8") as fhandle:
            fhandle.write(
                u"{0}".format(
                    json.dumps(data, indent=4, sort_keys=True, default=_json_default)
                )
            )
    except (IOError, OSError) as exc:
        raise_from(
            exc=exceptions.KerbilReportWritingError(
                "Cannot write the report file {0}: {1}".format(filename, exc)
            ),
            cause=exc,
        )


def read_json(filename):
    # type: (str) -> Any
    """
    Reads a JSON file.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilEmptyReportError`: if the file cannot
            be read or parsed.
    """
    try:
        with io.open(filename, "r", encoding="utf-8") as fhandle:
            return json.load(fhandle)
    except (IOError, OSError, ValueError) as exc:
        raise_from(
            exc=exceptions.KerbilEmptyReportError(
                "Cannot read the report file {0}: {1}".format(filename, exc)
            ),
            cause=exc,
        )


def write_csv(filename, columns, rows, header_lines=()):
    # type: (str, Sequence[str], Sequence[Sequence[Any]], Sequence[str]) -> None
    """
    Writes a CSV table preceded by '#' comment lines.

    Arguments:

        filename (str): the path of the file.

        columns (Sequence[str]): the column names.

        rows (Sequence[Sequence[Any]]): the rows.

        header_lines (Sequence[str]): the comment lines, without the leading '#'.
            Defaults to no lines.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilReportWritingError`: if the file
            cannot be written.
    """
    try:
        with open(filename, "w") as fhandle:
            for line in header_lines:
                fhandle.write("# {0}\n".format(line))
            writer = csv.writer(fhandle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_csv_value(value) for value in row])
    except (IOError, OSError) as exc:
        raise_from(
            exc=exceptions.KerbilReportWritingError(
                "Cannot write the table {0}: {1}".format(filename, exc)
            ),
            cause=exc,
        )


def _csv_value(value):
    # type: (Any) -> Any
    if isinstance(value, float):
        return repr(float(value))
    return value


def read_csv(filename):
    # type: (str) -> Tuple[List[str], List[List[str]]]
    """
    Reads a CSV table written by :func:`write_csv`, skipping the comment lines.

    Returns:

        Tuple[List[str], List[List[str]]]: the column names and the rows.
    """
    with open(filename, "r") as fhandle:
        lines = [line for line in fhandle if not line.startswith("#")]
    table = list(csv.reader(lines))
    return table[0], table[1:]


class ReportWriter(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, output_directory, seed, config_echo):
        # type: (str, Optional[int], str) -> None
        """
        Writer of the result files of one experiment.

        Every file carries the KerBil version, the seed and the echo of the
        configuration: the JSON report as fields, the CSV tables as comment lines.

        Arguments:

            output_directory (str): the directory of the result files. It is created
                if it does not exist.

            seed (Optional[int]): the master seed of the experiment.

            config_echo (str): the JSON echo of the configuration.
        """
        self.output_directory = output_directory
        self.seed = seed
        self.config_echo = config_echo
        if not os.path.isdir(output_directory):
            try:
                os.makedirs(output_directory)
            except OSError as exc:
                raise_from(
                    exc=exceptions.KerbilReportWritingError(
                        "Cannot create the output directory {0}: {1}".format(
                            output_directory, exc
                        )
                    ),
                    cause=exc,
                )

    def path(self, filename):
        # type: (str) -> str
        """
        Returns the path of a result file.
        """
        return os.path.join(self.output_directory, filename)

    def header_lines(self):
        # type: () -> List[str]
        """
        Returns the comment lines that open every CSV table.
        """
        return [
            "kerbil {0}".format(kerbil.__version__),
            "seed {0}".format(self.seed),
            "config {0}".format(json.dumps(json.loads(self.config_echo), sort_keys=True)),
        ]

    def write_report(self, data):
        # type: (Dict[str, Any]) -> str
        """
        Writes the JSON report.

        Arguments:

            data (Dict[str, Any]): the content of the report.

        Returns:

            str: the path of the report.
        """
        report = collections.OrderedDict(
            [
                ("version", kerbil.__version__),
                ("seed", self.seed),
                ("config", json.loads(self.config_echo)),
            ]
        )
        report.update(data)
        filename = self.path(REPORT_FILENAME)
        write_json(filename, report)
        return filename

    def write_table(self, filename, columns, rows):
        # type: (str, Sequence[str], Sequence[Sequence[Any]]) -> str
        """
        Writes a CSV table in the output directory.

        Returns:

            str: the path of the table.
        """
        path = self.path(filename)
        write_csv(path, columns, rows, self.header_lines())
        return path

    def write_trajectory(self, run_report):
        # type: (Any) -> str
        """
        Writes the hyperparameters and losses after every Gauss-Newton iteration.

        Arguments:

            run_report (:class:`~kerbil.processing_layer.bilevel.RunReport`): the
                run.
        """
        names = list(flatten_theta(run_report.initial_params.to_dict()).keys())
        columns = (
            ["k"]
            + names
            + [
                "linearized_loss",
                "validation_loss",
                "adam_steps",
                "skipped_steps",
                "rejected_steps",
                "constraint_residual",
                "seconds",
            ]
        )
        rows = [
            [-1]
            + list(flatten_theta(run_report.initial_params.to_dict()).values())
            + [float("nan"), float("nan"), 0, 0, 0, float("nan"), 0.0]
        ]
        for record in run_report.records:
            rows.append(
                [record.index]
                + list(flatten_theta(record.theta).values())
                + [
                    record.linearized_loss,
                    record.validation_loss,
                    record.adam_steps,
                    record.skipped_steps,
                    record.rejected_steps,
                    record.constraint_residual,
                    record.seconds,
                ]
            )
        return self.write_table("trajectory.csv", columns, rows)

    def write_errors(self, rows):
        # type: (Sequence[Sequence[Any]]) -> str
        """
        Writes the errors of the final solves.

        Arguments:

            rows (Sequence[Sequence[Any]]): (case, component, l2, linf, rel_l2) rows.
        """
        return self.write_table(
            "errors.csv", ["case", "component", "l2", "linf", "rel_l2"], rows
        )

    def write_sweep(self, rows):
        # type: (Sequence[Sequence[Any]]) -> str
        """
        Writes the errors of a hyperparameter sweep.

        Arguments:

            rows (Sequence[Sequence[Any]]): (value, interior count, component, l2,
                linf, final residual) rows.
        """
        return self.write_table(
            "sweep.csv",
            ["value", "interior", "component", "l2", "linf", "final_residual"],
            rows,
        )

    def write_landscape(self, rows):
        # type: (Sequence[Sequence[Any]]) -> str
        """
        Writes loss-landscape scans.

        Arguments:

            rows (Sequence[Sequence[Any]]): (Gauss-Newton iteration, value, loss)
                rows.
        """
        return self.write_table("landscape.csv", ["k", "value", "loss"], rows)

    def write_lengthscale_field(self, points, lengthscales):
        # type: (Any, Any) -> str
        """
        Writes a sampled lengthscale field.

        Arguments:

            points (numpy.ndarray): the grid points, shape (n, d).

            lengthscales (numpy.ndarray): the lengthscales, shape (n, outputs).
        """
        dimension = points.shape[1]
        outputs = lengthscales.shape[1]
        columns = ["x{0}".format(axis) for axis in range(dimension)] + [
            "lengthscale{0}".format(output) for output in range(outputs)
        ]
        rows = [
            [float(value) for value in point] + [float(value) for value in field]
            for point, field in zip(points, lengthscales)
        ]
        return self.write_table("lengthscale_field.csv", columns, rows)


def find_reports(directories):
    # type: (Sequence[str]) -> List[str]
    """
    Finds the JSON reports in a list of run directories.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilEmptyReportError`: if no report is
            found.
    """
    reports = []
    for directory in directories:
        candidate = os.path.join(directory, REPORT_FILENAME)
        if os.path.isfile(candidate):
            reports.append(candidate)
    if not reports:
        raise exceptions.KerbilEmptyReportError(
            "No {0} file found in: {1}".format(REPORT_FILENAME, ", ".join(directories))
        )
    return reports
