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
Tests of the HDF5 helpers.
"""
from __future__ import absolute_import, division, print_function

import numpy
import pytest

from kerbil.utils import exceptions, hdf5


def test_datasets_and_attributes_round_trip(tmp_path):
    filename = str(tmp_path / "data.h5")
    values = numpy.arange(12.0).reshape(3, 4)
    hdf5.save_hdf5_data(
        filename,
        {"/values": values, "/axes/0": numpy.linspace(0.0, 1.0, 3)},
        attributes={"key": "elliptic", "noise_std": 0.5},
    )
    assert numpy.array_equal(hdf5.load_hdf5_data(filename, "/values"), values)
    assert numpy.array_equal(
        hdf5.load_hdf5_data(filename, "/values", selection=(slice(1, 3), slice(0, 2))),
        values[1:3, 0:2],
    )
    assert hdf5.load_hdf5_attribute(filename, "key") == "elliptic"
    assert hdf5.load_hdf5_attribute(filename, "noise_std") == 0.5
    assert hdf5.load_hdf5_attribute(filename, "seed") is None


def test_missing_files_and_paths_are_reported(tmp_path):
    filename = str(tmp_path / "data.h5")
    with pytest.raises(exceptions.KerbilHdf5FileReadingError):
        hdf5.load_hdf5_data(filename, "/values")
    hdf5.save_hdf5_data(filename, {"/values": numpy.zeros(2)})
    with pytest.raises(exceptions.KerbilHdf5FileReadingError):
        hdf5.load_hdf5_data(filename, "/missing")
    with pytest.raises(exceptions.KerbilHdf5FileReadingError):
        hdf5.load_hdf5_attribute(str(tmp_path / "other.h5"), "key")


def test_unwritable_files_are_reported(tmp_path):
    with pytest.raises(exceptions.KerbilHdf5FileWritingError):
        hdf5.save_hdf5_data(str(tmp_path / "missing" / "data.h5"), {"/values": numpy.zeros(2)})
