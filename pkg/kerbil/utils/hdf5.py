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
HDF5 files.

This module reads and writes the HDF5 files of KerBil: the cached reference fields
and the observation files of inverse problems.
"""
from __future__ import absolute_import, division, print_function

import sys
from typing import Any, Dict, Optional, Tuple  # pylint: disable=unused-import

import h5py
from future.utils import raise_from

from kerbil.utils import exceptions


def _file_error(error_class, action, hdf5_filename):
    # type: (type, str, str) -> exceptions.KerbilException
    # Builds the KerBil error for the exception being handled.
    exc_type, exc_value = sys.exc_info()[:2]
    return error_class(
        "Error while {0} the HDF5 file {1}: {2}: {3}".format(
            action, hdf5_filename, exc_type.__name__, exc_value
        )
    )


def load_hdf5_data(hdf5_filename, hdf5_path, selection=None):
    # type: (str, str, Optional[Tuple[slice, ...]]) -> Any
    """
    Reads a dataset from an HDF5 file.

    Arguments:

        hdf5_filename (str): the relative or absolute path to the HDF5 file.

        hdf5_path (str): the internal path of the dataset (for example '/values').

        selection (Optional[Tuple[slice, ...]]): one slice per axis of the dataset,
            to read only part of it, or None to read the whole dataset. Defaults to
            None.

    Returns:

        Any: the content of the dataset (a numpy array, or a scalar for scalar
        datasets).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilHdf5FileReadingError`: if the file or
            the dataset cannot be read.
    """
    try:
        with h5py.File(name=hdf5_filename, mode="r") as fhandle:
            dataset = fhandle[hdf5_path]
            return dataset[()] if selection is None else dataset[selection]
    except (IOError, OSError, KeyError) as exc:
        raise_from(
            exc=_file_error(exceptions.KerbilHdf5FileReadingError, "reading", hdf5_filename),
            cause=exc,
        )


def load_hdf5_attribute(hdf5_filename, name, hdf5_path="/"):
    # type: (str, str, str) -> Any
    """
    Reads an attribute from an HDF5 file.

    Arguments:

        hdf5_filename (str): the relative or absolute path to the HDF5 file.

        name (str): the name of the attribute.

        hdf5_path (str): the internal path of the object carrying the attribute.
            Defaults to the root group.

    Returns:

        Any: the value of the attribute (byte strings are decoded), or None if the
        attribute is missing.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilHdf5FileReadingError`: if the file
            cannot be read.
    """
    try:
        with h5py.File(name=hdf5_filename, mode="r") as fhandle:
            value = fhandle[hdf5_path].attrs.get(name)
    except (IOError, OSError, KeyError) as exc:
        raise_from(
            exc=_file_error(exceptions.KerbilHdf5FileReadingError, "reading", hdf5_filename),
            cause=exc,
        )
    if isinstance(value, bytes):
        value = value.decode("utf-8")

    return value


def save_hdf5_data(hdf5_filename, datasets, attributes=None):
    # type: (str, Dict[str, Any], Optional[Dict[str, Any]]) -> None
    """
    Writes datasets to a new HDF5 file.

    Any existing file with the same name is overwritten.

    Arguments:

        hdf5_filename (str): the relative or absolute path to the HDF5 file.

        datasets (Dict[str, Any]): the datasets to store, keyed by internal path.

        attributes (Optional[Dict[str, Any]]): attributes of the root group.
            Defaults to None.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilHdf5FileWritingError`: if the file
            cannot be written.
    """
    try:
        with h5py.File(name=hdf5_filename, mode="w") as fhandle:
            for hdf5_path, data in datasets.items():
                fhandle.create_dataset(hdf5_path, data=data)
            for name, value in (attributes or {}).items():
                fhandle.attrs[name] = value
    except (IOError, OSError, ValueError, TypeError) as exc:
        raise_from(
            exc=_file_error(exceptions.KerbilHdf5FileWritingError, "writing", hdf5_filename),
            cause=exc,
        )
