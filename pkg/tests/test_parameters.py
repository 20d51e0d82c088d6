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
Tests of the configuration parameters.
"""
from __future__ import absolute_import, division, print_function

import json

import pytest

from kerbil.utils import exceptions, parameters


def test_configuration_is_read_from_a_file(elliptic_config_file):
    params = parameters.ExperimentParams(elliptic_config_file)
    assert params.get_param("kerbil", "problem", type_=str, required=True) == "elliptic"
    assert params.get_param("points", "interior", type_=int) == 40
    assert params.has_group("final_solve")
    assert not params.has_group("sweep")


def test_missing_file_is_reported(tmp_path):
    with pytest.raises(exceptions.KerbilConfigurationFileReadingError):
        parameters.ExperimentParams(str(tmp_path / "missing.toml"))


def test_syntax_errors_are_reported(elliptic_config):
    with pytest.raises(exceptions.KerbilConfigurationFileSyntaxError):
        parameters.ExperimentParams.from_string(elliptic_config + "\n[points\n")


def test_unknown_groups_and_parameters_are_rejected(elliptic_config):
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        parameters.ExperimentParams.from_string(elliptic_config + "\n[monitor]\nrate = 1\n")
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        parameters.ExperimentParams.from_string(
            elliptic_config.replace("nugget = 1e-8", "nugget = 1e-8\nmomentum = 0.9")
        )


def test_missing_required_group_is_rejected(elliptic_config):
    contents = parameters.ExperimentParams.from_string(elliptic_config).get_all_parameters()
    del contents["bilevel"]
    with pytest.raises(exceptions.KerbilMissingParameterGroupError):
        parameters.ExperimentParams(contents=contents)


def test_wrong_types_are_rejected(elliptic_config):
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        parameters.ExperimentParams.from_string(
            elliptic_config.replace("interior = 40", "interior = 40.5")
        )
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        parameters.ExperimentParams.from_string(
            elliptic_config.replace("gn_iters = 2", "gn_iters = true")
        )


def test_kernel_entries_must_be_tables(elliptic_config):
    text = elliptic_config.replace(
        '[kernels.u]\nvariant = "rbf_iso"\nlengthscale = 0.3', "[kernels]\nu = 1"
    )
    with pytest.raises(exceptions.KerbilConfigurationSchemaError):
        parameters.ExperimentParams.from_string(text)


def test_get_param_rules(elliptic_config):
    params = parameters.ExperimentParams.from_string(elliptic_config)
    assert params.get_param("bilevel", "learning_rate", type_=float) == 1e-2
    # Integers are accepted where floats are requested.
    params.set_param("bilevel", "learning_rate", 1)
    value = params.get_param("bilevel", "learning_rate", type_=float)
    assert value == 1.0
    assert isinstance(value, float)
    assert params.get_param("bilevel", "beta1", default=0.9) == 0.9
    assert params.get_param("sweep", "values", default=[]) == []
    with pytest.raises(exceptions.KerbilMissingParameterError):
        params.get_param("bilevel", "beta1", required=True)
    with pytest.raises(exceptions.KerbilMissingParameterGroupError):
        params.get_param("sweep", "values", required=True)
    with pytest.raises(exceptions.KerbilWrongParameterTypeError):
        params.get_param("kerbil", "seed", type_=str)


def test_get_group_returns_a_copy(elliptic_config):
    params = parameters.ExperimentParams.from_string(elliptic_config)
    group = params.get_group("kernels")
    group["u"]["lengthscale"] = 5.0
    assert params.get_group("kernels")["u"]["lengthscale"] == 0.3
    assert params.get_group("landscape") == {}


def test_dumps_parses_back(elliptic_config):
    params = parameters.ExperimentParams.from_string(elliptic_config)
    params.set_param("kerbil", "seed", 11)
    again = parameters.ExperimentParams.from_string(params.dumps())
    assert again.get_all_parameters() == params.get_all_parameters()


def test_echo_is_sorted_json(elliptic_config):
    echo = parameters.ExperimentParams.from_string(elliptic_config).echo()
    decoded = json.loads(echo)
    assert decoded["kerbil"]["label"] == "small_elliptic"
    assert echo.index('"bilevel"') < echo.index('"kerbil"')
