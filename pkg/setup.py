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
# pylint: disable=invalid-name
"""
setup.py file for KerBil
"""
from __future__ import absolute_import, division, print_function

from setuptools import setup

version_fh = open("kerbil/__init__.py", "r")
version = version_fh.readlines()[-1].split("=")[1].strip().split('"')[1]
version_fh.close()
setup(
    name="kerbil",
    version=version,
    license="GNU General Public License v3.0",
    author="KerBil Team",
    description=(
        "Gaussian-process PDE solvers with bilevel kernel hyperparameter learning"
    ),
    long_description=(
        """
        KerBil (Kernel Bilevel) solves nonlinear partial differential equations and
        PDE-constrained inverse problems with Gaussian-process collocation, and learns
        the hyperparameters of the kernels while it solves.

        The solution is found with Gauss-Newton iterations. At every iteration the
        equations are linearized around the current state, and the kernel
        hyperparameters are updated with a few Adam steps on a validation loss of the
        linearized problem, whose gradient is computed exactly in forward or reverse
        mode. The learned kernel is then used to solve the problem from scratch.

        KerBil ships with nonlinear elliptic, Schrodinger, Gray-Scott, Eikonal and
        Burgers problems, a Darcy inverse problem, five kernel families (including a
        nonstationary kernel whose lengthscale field is a neural network) and
        reference solvers to measure the errors of the computed solutions.
        """
    ),
    install_requires=[
        "click>=7.0",
        "future>=0.17.1",
        "h5py>=2.9.0",
        "numpy>=1.17.0",
        "scipy>=1.4.0",
        "toml>=0.10.0",
        "typing>=3.6.4",
    ],
    extras_require={"mpi": ["mpi4py>=3.0.0"], "test": ["pytest>=4.6"]},
    entry_points={"console_scripts": ["kerbil_runner.py=kerbil.runner:main"]},
    packages=[
        "kerbil",
        "kerbil.algorithms",
        "kerbil.parallelization_layer",
        "kerbil.problems",
        "kerbil.processing_layer",
        "kerbil.utils",
    ],
    include_package_data=True,
    platforms="any",
    classifiers=[
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)",
        "Natural Language :: English",
        "Intended Audience :: Science/Research",
    ],
)
