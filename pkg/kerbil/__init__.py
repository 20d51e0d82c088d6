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
The main KerBil package: Gaussian-process PDE solvers with bilevel kernel learning.
"""
__version__ = "26.10.0"
