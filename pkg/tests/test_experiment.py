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
Tests of the experiment driver.
"""
from __future__ import absolute_import, division, print_function

import os

import numpy
import pytest

from kerbil.problems import elliptic, gray_scott
from kerbil.processing_layer import bilevel, experiment, inner_solver
from kerbil.utils import exceptions, parameters, report_writer


EIKONAL_CONFIG = """
[kerbil]
problem = "eikonal"
seed = 1

[problem]
epsilon = 0.1

[kernels.u]
variant = "gibbs_mlp"
hidden_layers = [3]
initial_lengthscale = 0.3

[points]
interior = 20
boundary = 12
validation_interior = 10

[bilevel]
gn_iters = 1
adam_steps = 1
learning_rate = 1e-3
nugget = 1e-6

[final_solve]
gn_iters = 2

[reference]
resolution = 32
evaluation_grid = 10

[report]
field_resolution = 10
"""


def _experiment(text, tmp_path, overrides=None):
    params = parameters.ExperimentParams.from_string(text)
    for (group, name), value in (overrides or {}).items():
        params.set_param(group, name, value)
    return experiment.Experiment(
        params, output_directory=str(tmp_path / "out"), verbose=False
    )


def test_build_kernels_checks_the_components():
    problem = gray_scott.build_problem()
    table = {"variant": "rbf_iso"}
    kernels = experiment.build_kernels(problem, {"u": table, "v": table})
    assert kernels.names == ("u", "v")
    with pytest.raises(exceptions.KerbilMissingParameterGroupError):
        experiment.build_kernels(problem, {"u": table})
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        experiment.build_kernels(problem, {"u": table, "v": table, "w": table})


def test_relative_gap():
    assert experiment.relative_gap([1.0, -2.0], [1.0, -2.0]) == 0.0
    assert experiment.relative_gap([1.0, -4.0], [1.0, -2.0]) == pytest.approx(0.5)
    assert experiment.relative_gap([0.0], [0.0]) == 0.0


def test_lengthscale_summaries():
    points = numpy.array([[0.5, 0.5], [0.02, 0.5], [1.0, 0.0], [0.3, 0.3]])
    field = numpy.array([[1.0, 10.0], [3.0, 20.0], [5.0, 30.0], [7.0, 40.0]])
    eikonal = experiment.lengthscale_summaries("eikonal", points, field)
    assert eikonal == {"centre_mean": 1.0, "boundary_band_mean": 4.0}
    burgers = experiment.lengthscale_summaries("burgers", points, field)
    assert burgers["near_shock_mean"] == 30.0
    assert burgers["domain_median"] == 25.0
    assert experiment.lengthscale_summaries("elliptic", points, field) == {}


def test_settings_are_read_from_the_configuration(elliptic_config, tmp_path):
    runner = _experiment(elliptic_config, tmp_path)
    assert runner.seed == 3
    assert runner.label == "small_elliptic"
    assert isinstance(runner.problem, elliptic.EllipticProblem)
    assert runner.counts["interior"] == 40
    assert runner.counts["validation_boundary"] == 0
    assert runner.run_config.gn_iters == 2
    assert runner.run_config.batch_interior == 10
    assert runner.run_config.batch_boundary == 0
    assert runner.run_config.nugget == 1e-8


def test_default_output_directory(elliptic_config):
    runner = experiment.Experiment(
        parameters.ExperimentParams.from_string(elliptic_config), verbose=False
    )
    assert runner.output_directory == os.path.join("runs", "small_elliptic")


def test_command_line_overrides(elliptic_config, tmp_path):
    runner = experiment.Experiment(
        parameters.ExperimentParams.from_string(elliptic_config),
        seed=12,
        output_directory=str(tmp_path),
        verbose=False,
    )
    assert runner.seed == 12
    assert runner.output_directory == str(tmp_path)


def test_batches_larger_than_their_set_are_rejected(elliptic_config, tmp_path):
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        _experiment(elliptic_config, tmp_path, {("bilevel", "batch_interior"): 31})


def test_invalid_settings_are_rejected(elliptic_config, tmp_path):
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        _experiment(elliptic_config, tmp_path, {("final_solve", "reuse_cases"): ["A"]})
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        _experiment(elliptic_config, tmp_path, {("bilevel", "mode"): "unrolled"})
    with pytest.raises(exceptions.KerbilMissingParameterError):
        _experiment(elliptic_config.replace("boundary = 20\n", ""), tmp_path)
    with pytest.raises(exceptions.KerbilUnknownProblemError):
        _experiment(elliptic_config, tmp_path, {("kerbil", "problem"): "heat_wave_in_a_box"})


def test_random_streams_are_reproducible(elliptic_config, tmp_path):
    first = _experiment(elliptic_config, tmp_path)
    second = _experiment(elliptic_config, tmp_path)
    assert numpy.array_equal(first.layout().interior, second.layout().interior)
    assert first.rng(experiment.BATCH_STREAM).uniform() != first.rng(
        experiment.LAYOUT_STREAM
    ).uniform()


def test_final_points(elliptic_config, tmp_path):
    runner = _experiment(elliptic_config, tmp_path)
    layout = runner.layout()
    interior, _, _ = runner.final_points(layout)
    assert numpy.array_equal(interior, layout.interior)
    with_validation = _experiment(
        elliptic_config, tmp_path, {("final_solve", "include_validation"): True}
    )
    interior, boundary, _ = with_validation.final_points(layout)
    assert interior.shape == (70, 2)
    assert boundary.shape == (20, 2)
    resampled = _experiment(elliptic_config, tmp_path, {("final_solve", "resample"): True})
    interior, _, _ = resampled.final_points(layout)
    assert interior.shape == (40, 2)
    assert not numpy.array_equal(interior, layout.interior)


def test_run_writes_the_result_files(elliptic_config, tmp_path):
    runner = _experiment(elliptic_config, tmp_path)
    report = runner.run()
    directory = str(tmp_path / "out")
    assert sorted(os.listdir(directory)) == ["errors.csv", "report.json", "trajectory.csv"]
    assert report["status"] == "completed"
    assert len(report["run"]["iterations"]) == 2
    assert len(report["final_solve"]["residual_history"]) == 3
    assert [error["case"] for error in report["errors"]] == ["learned"]
    written = report_writer.read_json(os.path.join(directory, "report.json"))
    assert written["seed"] == 3
    assert written["config"]["kerbil"]["label"] == "small_elliptic"
    columns, rows = report_writer.read_csv(os.path.join(directory, "trajectory.csv"))
    assert columns[:2] == ["k", "u.lengthscale"]
    assert [row[0] for row in rows] == ["-1", "0", "1"]


def test_runs_are_reproducible(elliptic_config, tmp_path):
    first = _experiment(elliptic_config, tmp_path / "first").run()
    second = _experiment(elliptic_config, tmp_path / "second").run()
    assert first["run"]["final_raw"] == second["run"]["final_raw"]
    assert first["errors"] == second["errors"]


def test_aborted_runs_leave_a_report(elliptic_config, tmp_path, monkeypatch):
    def abort(*_, **__):
        raise exceptions.KerbilAbortedRunError("no solvable hyperparameters")

    monkeypatch.setattr(experiment.bilevel, "run", abort)
    with pytest.raises(exceptions.KerbilAbortedRunError):
        _experiment(elliptic_config, tmp_path).run()
    report = report_writer.read_json(str(tmp_path / "out" / "report.json"))
    assert report["status"] == "aborted"
    assert "no solvable" in report["message"]


def test_landscape_scan_is_written(elliptic_config, tmp_path):
    text = elliptic_config + (
        '\n[landscape]\nparameter = "u.lengthscale"\ngn_iterations = [1]\n'
        "start = 0.1\nstop = 0.5\npoints = 5\n"
    )
    _experiment(text, tmp_path).run()
    columns, rows = report_writer.read_csv(str(tmp_path / "out" / "landscape.csv"))
    assert columns == ["k", "value", "loss"]
    assert [row[0] for row in rows] == ["1"] * 5
    assert float(rows[-1][1]) == pytest.approx(0.5)


def test_lengthscale_field_is_written_for_gibbs_kernels(tmp_path):
    report = _experiment(EIKONAL_CONFIG, tmp_path).run()
    summaries = report["lengthscale_summaries"]["u"]
    assert set(summaries) == {"centre_mean", "boundary_band_mean"}
    assert all(value > 0 for value in summaries.values())
    columns, rows = report_writer.read_csv(str(tmp_path / "out" / "lengthscale_field.csv"))
    assert columns == ["x0", "x1", "lengthscale0"]
    assert len(rows) == 100


def test_gradient_check(elliptic_config, tmp_path):
    text = elliptic_config.replace("nugget = 1e-8", "nugget = 1e-4\nfd_step = 1e-4")
    result = _experiment(text, tmp_path).gradcheck()
    assert result["passed"]
    assert result["coordinates"] == [0]
    assert result["tangent_adjoint_gap"] <= experiment.GRADCHECK_MODE_TOLERANCE


def test_gradient_check_detects_wrong_derivatives(elliptic_config, tmp_path):
    text = elliptic_config.replace("nugget = 1e-8", "nugget = 1e-4\nfd_step = 1e-4")
    runner = _experiment(text, tmp_path)
    with pytest.raises(exceptions.KerbilGradientCheckError):
        runner.gradcheck(derivative_scale=2.0)
    for kernel in runner.kernels.kernels:
        assert kernel.parameter_derivative_scale == 1.0


def test_gradient_check_on_the_additive_kernel(elliptic_config, tmp_path):
    text = elliptic_config.replace('variant = "rbf_iso"', 'variant = "additive_rbf_poly"')
    text = text.replace("nugget = 1e-8", "nugget = 1e-4\nfd_step = 1e-4")
    result = _experiment(text, tmp_path).gradcheck()
    assert result["passed"]
    assert result["coordinates"] == [0, 1, 2, 3]
    assert result["tangent_adjoint_gap"] <= experiment.GRADCHECK_MODE_TOLERANCE
    assert result["adjoint_fd_gap"] <= experiment.GRADCHECK_ANALYTIC_TOLERANCE


def test_gradient_check_on_the_gibbs_kernel(tmp_path):
    text = EIKONAL_CONFIG.replace("nugget = 1e-6", "nugget = 1e-4\nfd_step = 1e-4")
    result = _experiment(text, tmp_path).gradcheck()
    assert result["passed"]
    # One hidden layer of 3 units on 2 inputs: 9 + 4 weights and biases.
    assert result["coordinates"] == list(range(13))
    assert result["tangent_adjoint_gap"] <= experiment.GRADCHECK_MODE_TOLERANCE


def _solved_validation_loss(runner, params, layout, gn_iters):
    state, _ = inner_solver.solve_from_scratch(
        runner.problem,
        runner.kernels,
        params,
        layout.interior,
        layout.boundary,
        layout.boundary_tags,
        runner.run_config.nugget,
        gn_iters,
    )
    return bilevel.validation_loss(
        runner.problem,
        state,
        layout.validation_interior,
        runner.run_config,
        layout.validation_boundary,
        layout.validation_boundary_tags,
    )


def test_learned_hyperparameters_reduce_the_validation_loss(elliptic_config, tmp_path):
    # A lengthscale well below the point spacing leaves the validation points
    # unresolved.
    text = elliptic_config.replace("lengthscale = 0.3", "lengthscale = 0.05").replace(
        "gn_iters = 2\nadam_steps = 3\nlearning_rate = 1e-2",
        "gn_iters = 3\nadam_steps = 5\nlearning_rate = 1e-1",
    )
    runner = _experiment(text, tmp_path)
    report = runner.run()
    layout = runner.layout()
    initial = runner.initial_params()
    learned = initial.with_raw(numpy.asarray(report["run"]["final_raw"]))
    assert float(learned.get_value("u.lengthscale")) > 0.05
    initial_loss = _solved_validation_loss(runner, initial, layout, 3)
    learned_loss = _solved_validation_loss(runner, learned, layout, 3)
    assert learned_loss < 0.5 * initial_loss


def test_sweep_cell_zero_matches_the_run(elliptic_config, tmp_path):
    text = elliptic_config.replace("gn_iters = 2", "gn_iters = 0") + (
        "\n[sweep]\nparameter = \"u.lengthscale\"\nvalues = [0.3]\ninterior_counts = [40]\n"
    )
    run_report = _experiment(text, tmp_path / "run").run()
    rows = _experiment(text, tmp_path / "sweep").sweep()
    assert len(rows) == 1
    value, interior, component, l2, linf, residual = rows[0]
    assert (value, interior, component) == (0.3, 40, "u")
    assert l2 == pytest.approx(run_report["errors"][0]["l2"], rel=1e-10)
    assert linf == pytest.approx(run_report["errors"][0]["linf"], rel=1e-10)
    assert residual == pytest.approx(run_report["final_solve"]["residual_history"][-1])
    columns, written = report_writer.read_csv(str(tmp_path / "sweep" / "out" / "sweep.csv"))
    assert columns[0] == "value"
    assert len(written) == 1


def test_sweep_grid_order(elliptic_config, tmp_path):
    text = elliptic_config + (
        "\n[sweep]\nparameter = \"u.lengthscale\"\nvalues = [0.2, 0.4]\n"
        "interior_counts = [20, 30]\ngn_iters = 1\n"
    )
    rows = _experiment(text, tmp_path).sweep()
    assert [(row[0], row[1]) for row in rows] == [(0.2, 20), (0.2, 30), (0.4, 20), (0.4, 30)]


def test_sweep_needs_a_scalar_parameter(tmp_path):
    text = EIKONAL_CONFIG + '\n[sweep]\nparameter = "u.weights_0"\nvalues = [0.1]\n'
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        _experiment(text, tmp_path).sweep()


def test_compare_reports(elliptic_config, tmp_path):
    for seed in (1, 2):
        params = parameters.ExperimentParams.from_string(elliptic_config)
        experiment.Experiment(
            params, seed=seed, output_directory=str(tmp_path / str(seed)), verbose=False
        ).run()
    columns, rows = experiment.compare_reports(
        [str(tmp_path / "1"), str(tmp_path / "2"), str(tmp_path / "missing")],
        str(tmp_path / "table"),
    )
    assert columns[:4] == ["label", "problem", "seed", "status"]
    assert "u.lengthscale" in columns
    assert "learned:u:l2" in columns
    assert [row[2] for row in rows] == [1, 2]
    _, written = report_writer.read_csv(str(tmp_path / "table" / "comparison.csv"))
    assert len(written) == 2
    with pytest.raises(exceptions.KerbilEmptyReportError):
        experiment.compare_reports([str(tmp_path / "missing")], str(tmp_path / "table"))
