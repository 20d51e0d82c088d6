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
Tests of the result files.
"""
from __future__ import absolute_import, division, print_function

import json
import math
import os

import numpy
import pytest

import kerbil
from kerbil.algorithms import kernel_algorithms
from kerbil.processing_layer import bilevel
from kerbil.utils import exceptions, named_tuples, report_writer


ECHO = json.dumps({"kerbil": {"problem": "elliptic", "seed": 2}})


def test_flatten_theta():
    flat = report_writer.flatten_theta({"u.sigma": 1.5, "u.lengthscale": [0.1, 0.2]})
    assert list(flat.items()) == [
        ("u.sigma", 1.5),
        ("u.lengthscale[0]", 0.1),
        ("u.lengthscale[1]", 0.2),
    ]


def test_report_carries_version_seed_and_config(tmp_path):
    writer = report_writer.ReportWriter(str(tmp_path / "run"), 2, ECHO)
    filename = writer.write_report({"status": "completed", "errors": numpy.array([1.0, 2.0])})
    report = report_writer.read_json(filename)
    assert report["version"] == kerbil.__version__
    assert report["seed"] == 2
    assert report["config"]["kerbil"]["problem"] == "elliptic"
    assert report["errors"] == [1.0, 2.0]
    assert report_writer.find_reports([str(tmp_path / "run"), str(tmp_path)]) == [filename]


def test_tables_start_with_comment_lines(tmp_path):
    writer = report_writer.ReportWriter(str(tmp_path), None, ECHO)
    path = writer.write_errors([["main", "u", 0.1, 0.25, 1e-3]])
    with open(path) as fhandle:
        lines = fhandle.read().splitlines()
    assert lines[0] == "# kerbil {0}".format(kerbil.__version__)
    assert lines[1] == "# seed None"
    assert lines[2].startswith("# config ")
    columns, rows = report_writer.read_csv(path)
    assert columns == ["case", "component", "l2", "linf", "rel_l2"]
    assert rows == [["main", "u", "0.1", "0.25", "0.001"]]


def test_trajectory_table(tmp_path):
    kernel = kernel_algorithms.build_kernel({"variant": "rbf_aniso", "lengthscale": [0.5, 0.25]}, 2)
    kernels = kernel_algorithms.ComponentKernels(["u"], [kernel])
    params = kernels.initial_params(None)
    run = bilevel.RunReport("elliptic", params, bilevel.default_run_config())
    run.records.append(
        named_tuples.IterationRecord(
            index=0,
            theta={"u.lengthscale": [0.4, 0.3]},
            raw=[math.log(0.4), math.log(0.3)],
            linearized_loss=2.0,
            validation_loss=1.0,
            adam_steps=50,
            skipped_steps=0,
            rejected_steps=1,
            constraint_residual=1e-9,
            seconds=0.5,
        )
    )
    writer = report_writer.ReportWriter(str(tmp_path), 1, ECHO)
    columns, rows = report_writer.read_csv(writer.write_trajectory(run))
    assert columns[:3] == ["k", "u.lengthscale[0]", "u.lengthscale[1]"]
    assert len(rows) == 2
    assert rows[0][0] == "-1"
    assert float(rows[0][1]) == pytest.approx(0.5)
    assert rows[1][0] == "0"
    assert float(rows[1][2]) == pytest.approx(0.3)
    assert rows[1][columns.index("rejected_steps")] == "1"


def test_other_tables(tmp_path):
    writer = report_writer.ReportWriter(str(tmp_path), 1, ECHO)
    columns, _ = report_writer.read_csv(writer.write_sweep([[0.1, 400, "u", 1.0, 2.0, 3.0]]))
    assert columns == ["value", "interior", "component", "l2", "linf", "final_residual"]
    columns, _ = report_writer.read_csv(writer.write_landscape([[0, 0.1, 5.0]]))
    assert columns == ["k", "value", "loss"]
    columns, rows = report_writer.read_csv(
        writer.write_lengthscale_field(numpy.array([[0.5, 0.5]]), numpy.array([[0.2, 0.3]]))
    )
    assert columns == ["x0", "x1", "lengthscale0", "lengthscale1"]
    assert [float(value) for value in rows[0]] == [0.5, 0.5, 0.2, 0.3]
    assert sorted(os.listdir(str(tmp_path))) == [
        "landscape.csv",
        "lengthscale_field.csv",
        "sweep.csv",
    ]


def test_missing_reports_are_reported(tmp_path):
    with pytest.raises(exceptions.KerbilEmptyReportError):
        report_writer.find_reports([str(tmp_path)])
    broken = tmp_path / "report.json"
    broken.write_text(u"{")
    with pytest.raises(exceptions.KerbilEmptyReportError):
        report_writer.read_json(str(broken))


def test_unwritable_directory_is_reported(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text(u"")
    with pytest.raises(exceptions.KerbilReportWritingError):
        report_writer.ReportWriter(str(blocker / "run"), 1, ECHO)
