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
KerBil configuration parameter object.

This module contains a class that stores a set of experiment parameters read from a
TOML file. Configuration parameters can be retrieved from this class and optionally
validated. The module also contains the schema against which every experiment
configuration is checked before any computation starts.
"""
from __future__ import absolute_import, division, print_function

import copy
import json
from typing import Any, Dict, List, MutableMapping, Union  # pylint: disable=unused-import

import toml
from future.utils import raise_from
from past.builtins import basestring

from kerbil.utils import exceptions


# Each group maps accepted parameter names to their types. Groups whose value is None
# accept arbitrary keys: they are validated later against the selected problem or
# kernel variant.
SCHEMA = {
    "kerbil": {
        "problem": str,
        "seed": int,
        "output_directory": str,
        "label": str,
    },
    "problem": None,
    "kernels": None,
    "points": {
        "interior": int,
        "boundary": int,
        "validation_interior": int,
        "validation_boundary": int,
        "observations": int,
    },
    "bilevel": {
        "mode": str,
        "gn_iters": int,
        "adam_steps": int,
        "learning_rate": float,
        "beta1": float,
        "beta2": float,
        "epsilon": float,
        "batch_interior": int,
        "batch_boundary": int,
        "boundary_weight": float,
        "data_weight": float,
        "nugget": float,
        "regularization": float,
        "regularizer": str,
        "tolerance": float,
        "convergence_metric": str,
        "gradient": str,
        "fd_step": float,
        "max_rejections": int,
    },
    "final_solve": {
        "gn_iters": int,
        "nugget": float,
        "include_validation": bool,
        "resample": bool,
        "reuse_cases": list,
    },
    "reference": {
        "resolution": int,
        "time_step": float,
        "time_samples": int,
        "cache_directory": str,
        "check": bool,
        "tolerance": float,
        "evaluation_grid": int,
    },
    "sweep": {
        "parameter": str,
        "values": list,
        "interior_counts": list,
        "boundary_count": int,
        "gn_iters": int,
        "nugget": float,
    },
    "landscape": {
        "parameter": str,
        "gn_iterations": list,
        "start": float,
        "stop": float,
        "points": int,
    },
    "report": {
        "field_resolution": int,
    },
}

REQUIRED_GROUPS = ("kerbil", "kernels", "points", "bilevel")


class ExperimentParams(object):
    """
    See documentation for the '__init__' function.
    """

    def __init__(self, config=None, contents=None):
        # type: (str, Dict[str, Any]) -> None
        """
        Storage, retrieval and validation of KerBil experiment parameters.

        This class stores a set of KerBil configuration parameters read from a file in
        TOML format. The parameters are grouped together in groups ('Tables' in TOML
        parlance) and can be retrieved and optionally validated. The whole set of
        groups is checked against the module-level schema when the object is created.

        Arguments:

            config (str): the absolute or relative path to a TOML-format configuration
                file. Ignored if the 'contents' argument is not None.

            contents (Dict[str, Any]): already parsed configuration parameters.
                Defaults to None.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilConfigurationFileReadingError`: if
                the configuration file cannot be read.

            :class:`~kerbil.utils.exceptions.KerbilConfigurationFileSyntaxError`: if
                there is a syntax error in the configuration file.

            :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if the
                configuration contains unknown groups or parameters.
        """
        if contents is not None:
            self._experiment_params = copy.deepcopy(contents)
        else:
            try:
                self._experiment_params = toml.load(config)
            except (IOError, OSError):
                raise exceptions.KerbilConfigurationFileReadingError(
                    "Cannot open or read the configuration file {0}".format(config)
                )
            except (toml.TomlDecodeError, TypeError, ValueError) as exc:
                raise_from(
                    exc=exceptions.KerbilConfigurationFileSyntaxError(
                        "Syntax error in the configuration file: {0}".format(exc)
                    ),
                    cause=exc,
                )
        self._validate_schema()

    @classmethod
    def from_string(cls, text):
        # type: (str) -> ExperimentParams
        """
        Creates a parameter object from a TOML string.

        Arguments:

            text (str): the TOML text.

        Returns:

            ExperimentParams: the parsed parameters.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilConfigurationFileSyntaxError`: if
                there is a syntax error in the string.
        """
        try:
            contents = toml.loads(text)
        except (toml.TomlDecodeError, TypeError, ValueError) as exc:
            raise_from(
                exc=exceptions.KerbilConfigurationFileSyntaxError(
                    "Syntax error in the configuration: {0}".format(exc)
                ),
                cause=exc,
            )

        return cls(contents=contents)

    def dumps(self):
        # type: () -> str
        """
        Serializes the parameters to TOML.

        Returns:

            str: a TOML string that parses back to the same parameters.
        """
        return toml.dumps(self._experiment_params)

    def echo(self):
        # type: () -> str
        """
        Returns a JSON echo of the configuration, with sorted keys.

        Returns:

            str: the JSON text.
        """
        return json.dumps(self._experiment_params, indent=4, sort_keys=True)

    def _validate_schema(self):
        # type: () -> None
        for group in REQUIRED_GROUPS:
            if group not in self._experiment_params:
                raise exceptions.KerbilMissingParameterGroupError(
                    "Parameter group [{0}] is not in the configuration file".format(
                        group
                    )
                )
        for group, entries in self._experiment_params.items():
            if group not in SCHEMA:
                raise exceptions.KerbilConfigurationSchemaError(
                    "Unknown parameter group [{0}].".format(group)
                )
            if not isinstance(entries, dict):
                raise exceptions.KerbilConfigurationSchemaError(
                    "Entry {0} must be a parameter group.".format(group)
                )
            accepted = SCHEMA[group]
            if accepted is None:
                continue
            for parameter in entries:
                if parameter not in accepted:
                    raise exceptions.KerbilConfigurationSchemaError(
                        "Unknown parameter {0} in group [{1}].".format(parameter, group)
                    )
                self.get_param(group, parameter, type_=accepted[parameter])
        for component, table in self._experiment_params["kernels"].items():
            if not isinstance(table, dict):
                raise exceptions.KerbilConfigurationSchemaError(
                    "Entry {0} in group [kernels] must be a table.".format(component)
                )

    def has_group(self, group):
        # type: (str) -> bool
        """
        Checks whether a parameter group is present.

        Arguments:

            group (str): the name of the group.

        Returns:

            bool: True if the group is present in the configuration, False otherwise.
        """
        return group in self._experiment_params

    def get_group(self, group):
        # type: (str) -> Dict[str, Any]
        """
        Returns a copy of a whole parameter group (an empty dictionary if missing).

        Arguments:

            group (str): the name of the group.

        Returns:

            Dict[str, Any]: the parameters in the group.
        """
        return copy.deepcopy(self._experiment_params.get(group, {}))

    def set_param(self, group, parameter, value):
        # type: (str, str, Any) -> None
        """
        Overrides a configuration parameter (used by the command line flags).

        Arguments:

            group (str): the name of the parameter group.

            parameter (str): the name of the parameter.

            value (Any): the new value.
        """
        self._experiment_params.setdefault(group, {})[parameter] = value

    def get_param(self, group, parameter, type_=None, required=False, default=None):
        # type: (str, str, type, bool, Any) -> Union[Any, None]
        """
        Retrieves a KerBil experiment configuration parameter.

        A missing parameter (or a missing group) is an error only if the parameter
        is required; otherwise the 'default' argument is returned. When a type is
        requested, the value is validated against it: integers are accepted (and
        converted) where floats are requested, booleans are never accepted as
        numbers, and strings are checked with 'basestring'.

        Arguments:

            group (str): the name of the parameter group.

            parameter (str): the name of the parameter.

            type_ (Optional[type]): the expected type of the parameter, or None to
                skip the validation. Defaults to None.

            required (bool): whether the parameter must be present in the
                configuration file. Defaults to False.

            default (Any): the value returned when an optional parameter is missing.
                Defaults to None.

        Returns:

            Union[Any, None]: the value of the parameter, or the default value.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilMissingParameterGroupError`: if a
                required parameter belongs to a group that is not in the
                configuration file.

            :class:`~kerbil.utils.exceptions.KerbilMissingParameterError`: if a
                required parameter is not in the configuration file.

            :class:`~kerbil.utils.exceptions.KerbilWrongParameterTypeError`: if the
                value does not have the requested type.
        """
        if group not in self._experiment_params:
            if required:
                raise exceptions.KerbilMissingParameterGroupError(
                    "Parameter group [{0}] is not in the configuration file".format(
                        group
                    )
                )
            return default
        ret = self._experiment_params[group].get(parameter)
        if ret is None:
            if required:
                raise exceptions.KerbilMissingParameterError(
                    "Required parameter {0} is missing from group [{1}].".format(
                        parameter, group
                    )
                )
            return default
        if type_ is not None:
            if type_ is str:
                valid = isinstance(ret, basestring)
            elif type_ is float:
                valid = isinstance(ret, (float, int)) and not isinstance(ret, bool)
            elif type_ is int:
                valid = isinstance(ret, int) and not isinstance(ret, bool)
            else:
                valid = isinstance(ret, type_)
            if not valid:
                raise exceptions.KerbilWrongParameterTypeError(
                    "Wrong type for parameter {0}: should be {1}, is {2}.".format(
                        parameter,
                        type_.__name__,
                        type(ret).__name__,
                    )
                )
            if type_ is float:
                ret = float(ret)

        return ret

    def get_all_parameters(self):
        # type: () -> MutableMapping[str, Any]
        """
        Returns the whole set of parameters read from the configuration file.

        Returns:

            MutableMapping[str, Any]: a dictionary containing the parameters read from
            the configuration file.
        """
        return self._experiment_params
