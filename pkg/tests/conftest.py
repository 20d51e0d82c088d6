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
Shared fixtures of the KerBil test suite.
"""
from __future__ import absolute_import, division, print_function

import pytest

from kerbil.algorithms import generic_algorithms


ELLIPTIC_CONFIG = """
[kerbil]
problem = "elliptic"
seed = 3
label = "small_elliptic"

[kernels.u]
variant = "rbf_iso"
lengthscale = 0.3

[points]
interior = 40
boundary = 20
validation_interior = 30

[bilevel]
gn_iters = 2
adam_steps = 3
learning_rate = 1e-2
batch_interior = 10
nugget = 1e-8

[final_solve]
gn_iters = 3

[reference]
evaluation_grid = 12
"""


@pytest.fixture
def rng():
    """
    A seeded random generator.
    """
    return generic_algorithms.make_rng(1234)


@pytest.fixture
def elliptic_config():
    """
    The TOML text of a small elliptic experiment.
    """
    return ELLIPTIC_CONFIG


@pytest.fixture
def elliptic_config_file(tmp_path):
    """
    A small elliptic experiment written to a configuration file.
    """
    filename = tmp_path / "elliptic.toml"
    filename.write_text(
        ELLIPTIC_CONFIG.replace(
            'label = "small_elliptic"',
            'label = "small_elliptic"\noutput_directory = "{0}"'.format(
                (tmp_path / "out").as_posix()
            ),
        )
    )
    return str(filename)
