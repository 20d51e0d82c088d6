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
Reference solutions.

This module contains independent solvers used to measure the accuracy of the
collocation solutions: closed forms, finite-difference, spectral and transform-based
solvers on regular grids, together with error metrics and the generation of noisy
observations for inverse problems.
"""
from __future__ import absolute_import, division, print_function

import collections
import hashlib
import json
import math
import os.path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from scipy import integrate, interpolate, sparse
from scipy.sparse import linalg as sparse_linalg

from kerbil.algorithms import generic_algorithms
from kerbil.problems import base
from kerbil.utils import exceptions, hdf5, named_tuples


# Resolution, time step and number of time samples of each reference solver.
DEFAULT_SETTINGS = {
    "elliptic": (256, None, None),
    "schrodinger": (512, 1e-4, 201),
    "gray_scott": (512, 1e-4, 201),
    "burgers": (512, None, 201),
    "eikonal": (500, None, None),
    "darcy_inverse": (512, None, None),
}

_NEWTON_TOLERANCE = 1e-10
_NEWTON_ITERATIONS = 20


class GridFunction(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, axes, values, component_names):
        # type: (Sequence[numpy.ndarray], numpy.ndarray, Sequence[str]) -> None
        """
        Fields sampled on a regular grid, interpolated bilinearly.

        Arguments:

            axes (Sequence[numpy.ndarray]): the increasing node coordinates along
                each axis.

            values (numpy.ndarray): the values, shape (components, n0, n1, ...).

            component_names (Sequence[str]): the names of the components.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                values do not match the axes.

            :class:`~kerbil.utils.exceptions.KerbilOracleNotConvergedError`: if
                some values are not finite.
        """
        self.axes = [numpy.asarray(axis, dtype=numpy.float64) for axis in axes]
        self.values = numpy.asarray(values, dtype=numpy.float64)
        self.component_names = tuple(component_names)
        expected = (len(self.component_names),) + tuple(axis.size for axis in self.axes)
        if self.values.shape != expected:
            raise exceptions.KerbilDimensionMismatchError(
                "Grid values of shape {0} do not match the expected shape {1}.".format(
                    self.values.shape, expected
                )
            )
        if not numpy.all(numpy.isfinite(self.values)):
            raise exceptions.KerbilOracleNotConvergedError(
                "The reference solution contains non-finite values."
            )
        self._interpolators = [
            interpolate.RegularGridInterpolator(
                self.axes, component, method="linear", bounds_error=False, fill_value=None
            )
            for component in self.values
        ]

    def __call__(self, points):
        # type: (numpy.ndarray) -> numpy.ndarray
        """
        Interpolates the fields at a set of points.

        Arguments:

            points (numpy.ndarray): the points, shape (n, d).

        Returns:

            numpy.ndarray: the values, shape (n, components).
        """
        points = numpy.atleast_2d(numpy.asarray(points, dtype=numpy.float64))
        return numpy.stack([function(points) for function in self._interpolators], axis=1)

    def component(self, name):
        # type: (str) -> numpy.ndarray
        """
        Returns the grid values of a named component.
        """
        return self.values[self.component_names.index(name)]


def _settings(problem, resolution, time_step, time_samples):
    # type: (base.Problem, Optional[int], Optional[float], Optional[int]) -> Tuple[int, Optional[float], Optional[int]]
    if problem.name not in DEFAULT_SETTINGS:
        raise exceptions.KerbilUnknownProblemError(
            "No reference solver for problem {0}.".format(problem.name)
        )
    default_resolution, default_step, default_samples = DEFAULT_SETTINGS[problem.name]
    resolution = int(resolution or default_resolution)
    if resolution < 2:
        raise exceptions.KerbilInvalidCountsError(
            "The reference resolution must be at least 2."
        )
    return (
        resolution,
        time_step if time_step is not None else default_step,
        int(time_samples) if time_samples is not None else default_samples,
    )


def _node_axis(lower, upper, resolution):
    # type: (float, float, int) -> numpy.ndarray
    return numpy.linspace(lower, upper, resolution + 1)


def _time_grid(final_time, time_step, time_samples):
    # type: (float, float, int) -> Tuple[numpy.ndarray, float, int, int]
    # The number of steps is a multiple of the number of sampling intervals.
    intervals = max(time_samples - 1, 1)
    per_sample = max(int(math.ceil(final_time / time_step / intervals)), 1)
    num_steps = per_sample * intervals
    return (
        numpy.linspace(0.0, final_time, intervals + 1),
        final_time / num_steps,
        num_steps,
        per_sample,
    )


def _crank_nicolson(rhs, jacobian, initial, time_step, num_steps, sample_every):
    # type: (Callable[[numpy.ndarray], numpy.ndarray], Callable[[numpy.ndarray], Any], numpy.ndarray, float, int, int) -> numpy.ndarray
    # Integrates w' = rhs(w), solving every implicit step with Newton iterations.
    state = numpy.array(initial, dtype=numpy.float64)
    identity = sparse.identity(state.size, format="csc")
    samples = [state.copy()]
    for step in range(1, num_steps + 1):
        old_rhs = rhs(state)
        new_state = state.copy()
        for _ in range(_NEWTON_ITERATIONS):
            residual = new_state - state - 0.5 * time_step * (rhs(new_state) + old_rhs)
            if numpy.max(numpy.abs(residual)) <= _NEWTON_TOLERANCE:
                break
            matrix = (identity - 0.5 * time_step * jacobian(new_state)).tocsc()
            new_state = new_state - sparse_linalg.spsolve(matrix, residual)
        else:
            raise exceptions.KerbilOracleNotConvergedError(
                "Newton iterations of the Crank-Nicolson step {0} did not "
                "converge.".format(step)
            )
        state = new_state
        if step % sample_every == 0:
            samples.append(state.copy())

    return numpy.array(samples)


def _neumann_laplacian(num_nodes, spacing):
    # type: (int, float) -> Any
    # Second difference with ghost nodes mirroring the first interior nodes.
    main = numpy.full(num_nodes, -2.0)
    upper = numpy.ones(num_nodes - 1)
    lower = numpy.ones(num_nodes - 1)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr") / spacing ** 2


def _five_point(face_x, face_y, spacing):
    # type: (numpy.ndarray, numpy.ndarray, float) -> Tuple[Any, numpy.ndarray]
    # Assembles -div(k grad) on the interior nodes of a square grid with Dirichlet
    # nodes on the boundary. face_x[i, j] couples interior row j between nodes i and
    # i + 1; face_y[i, j] couples interior column i between nodes j and j + 1.
    # Returns the matrix and the weight of a unit boundary value at every node.
    size = face_y.shape[0]
    index = numpy.arange(size * size).reshape(size, size)
    diagonal = face_x[:-1] + face_x[1:] + face_y[:, :-1] + face_y[:, 1:]
    rows = [index.ravel()]
    columns = [index.ravel()]
    data = [diagonal.ravel()]
    for first, second, coupling in (
        (index[:-1, :], index[1:, :], face_x[1:-1, :]),
        (index[:, :-1], index[:, 1:], face_y[:, 1:-1]),
    ):
        rows.extend([first.ravel(), second.ravel()])
        columns.extend([second.ravel(), first.ravel()])
        data.extend([-coupling.ravel(), -coupling.ravel()])
    matrix = sparse.csr_matrix(
        (numpy.concatenate(data), (numpy.concatenate(rows), numpy.concatenate(columns))),
        shape=(size * size, size * size),
    )
    boundary = numpy.zeros((size, size))
    boundary[0, :] += face_x[0, :]
    boundary[-1, :] += face_x[-1, :]
    boundary[:, 0] += face_y[:, 0]
    boundary[:, -1] += face_y[:, -1]

    return matrix / spacing ** 2, boundary.ravel() / spacing ** 2


def _elliptic_reference(problem, resolution, _time_step, _time_samples):
    # type: (Any, int, Optional[float], Optional[int]) -> GridFunction
    axes = [
        _node_axis(problem.lower[axis], problem.upper[axis], resolution)
        for axis in range(2)
    ]
    mesh = numpy.meshgrid(*axes, indexing="ij")
    points = numpy.stack([coordinate.ravel() for coordinate in mesh], axis=1)
    values = problem.exact_solution(points)[:, 0].reshape(mesh[0].shape)
    return GridFunction(axes, values[None], problem.component_names)


def _eikonal_reference(problem, resolution, _time_step, _time_samples):
    # type: (Any, int, Optional[float], Optional[int]) -> GridFunction
    # With u = -epsilon log v the equation becomes -epsilon^2 lap v + f v = 0 with
    # v = 1 on the boundary.
    spacing = 1.0 / resolution
    size = resolution - 1
    diffusion = problem.epsilon ** 2
    matrix, boundary = _five_point(
        numpy.full((size + 1, size), diffusion),
        numpy.full((size, size + 1), diffusion),
        spacing,
    )
    matrix = matrix + problem.source * sparse.identity(size * size, format="csr")
    interior = sparse_linalg.spsolve(matrix.tocsc(), boundary)
    transformed = numpy.ones((resolution + 1, resolution + 1))
    transformed[1:-1, 1:-1] = interior.reshape(size, size)
    if numpy.any(transformed <= 0.0):
        raise exceptions.KerbilOracleNotConvergedError(
            "The transformed Eikonal solution underflowed; increase the viscosity."
        )
    values = -problem.epsilon * numpy.log(transformed)
    axis = _node_axis(0.0, 1.0, resolution)
    return GridFunction([axis, axis], values[None], problem.component_names)


def _darcy_reference(problem, resolution, _time_step, _time_samples):
    # type: (Any, int, Optional[float], Optional[int]) -> GridFunction
    spacing = 1.0 / resolution
    axis = _node_axis(0.0, 1.0, resolution)
    mesh = numpy.meshgrid(axis, axis, indexing="ij")
    nodes = numpy.stack([coordinate.ravel() for coordinate in mesh], axis=1)
    coefficient = problem.true_coefficient(nodes).reshape(mesh[0].shape)

    def harmonic(first, second):
        # type: (numpy.ndarray, numpy.ndarray) -> numpy.ndarray
        return 2.0 * first * second / (first + second)

    face_x = harmonic(coefficient[:-1, 1:-1], coefficient[1:, 1:-1])
    face_y = harmonic(coefficient[1:-1, :-1], coefficient[1:-1, 1:])
    matrix, _ = _five_point(face_x, face_y, spacing)
    size = resolution - 1
    interior = sparse_linalg.spsolve(matrix.tocsc(), numpy.full(size * size, problem.source))
    solution = numpy.zeros((resolution + 1, resolution + 1))
    solution[1:-1, 1:-1] = interior.reshape(size, size)
    return GridFunction(
        [axis, axis],
        numpy.stack([solution, numpy.log(coefficient)]),
        problem.component_names,
    )


def _schrodinger_reference(problem, resolution, time_step, time_samples):
    # type: (Any, int, float, int) -> GridFunction
    # Strang splitting: exact linear flow in Fourier space, exact pointwise flow of
    # the cubic term.
    period = problem.upper[1] - problem.lower[1]
    space = problem.lower[1] + period * numpy.arange(resolution) / resolution
    times, step, _, per_sample = _time_grid(
        problem.upper[0] - problem.lower[0], time_step, time_samples
    )
    wavenumbers = 2.0 * math.pi * numpy.fft.fftfreq(resolution, d=period / resolution)
    linear_flow = numpy.exp(-0.5j * wavenumbers ** 2 * step)
    field = 2.0 / numpy.cosh(space) + 0j
    samples = [field.copy()]
    half_step = 0.5 * step * problem.nonlinearity
    for _ in range(len(times) - 1):
        for _ in range(per_sample):
            field = field * numpy.exp(1j * half_step * numpy.abs(field) ** 2)
            field = numpy.fft.ifft(linear_flow * numpy.fft.fft(field))
            field = field * numpy.exp(1j * half_step * numpy.abs(field) ** 2)
        samples.append(field.copy())
    history = numpy.array(samples)
    # Closes the periodic grid so that interpolation reaches the upper end.
    history = numpy.concatenate([history, history[:, :1]], axis=1)
    space = numpy.append(space, problem.upper[1])
    return GridFunction(
        [times + problem.lower[0], space],
        numpy.stack([history.real, history.imag]),
        problem.component_names,
    )


def _gray_scott_reference(problem, resolution, time_step, time_samples):
    # type: (Any, int, float, int) -> GridFunction
    space = _node_axis(problem.lower[1], problem.upper[1], resolution)
    num_nodes = space.size
    laplacian = _neumann_laplacian(num_nodes, space[1] - space[0])
    times, step, num_steps, per_sample = _time_grid(
        problem.upper[0] - problem.lower[0], time_step, time_samples
    )
    feed, kill = problem.feed, problem.kill

    def rhs(state):
        # type: (numpy.ndarray) -> numpy.ndarray
        u, v = state[:num_nodes], state[num_nodes:]
        reaction = u * v * v
        return numpy.concatenate(
            [
                problem.diffusion_u * laplacian.dot(u) - reaction + feed * (1.0 - u),
                problem.diffusion_v * laplacian.dot(v) + reaction - (feed + kill) * v,
            ]
        )

    def jacobian(state):
        # type: (numpy.ndarray) -> Any
        u, v = state[:num_nodes], state[num_nodes:]
        return sparse.bmat(
            [
                [
                    problem.diffusion_u * laplacian - sparse.diags(v * v + feed),
                    sparse.diags(-2.0 * u * v),
                ],
                [
                    sparse.diags(v * v),
                    problem.diffusion_v * laplacian + sparse.diags(2.0 * u * v - feed - kill),
                ],
            ],
            format="csr",
        )

    points = numpy.stack([numpy.full(num_nodes, problem.lower[0]), space], axis=1)
    initial = problem.initial_values(points)
    history = _crank_nicolson(
        rhs,
        jacobian,
        numpy.concatenate([initial[:, 0], initial[:, 1]]),
        step,
        num_steps,
        per_sample,
    )
    return GridFunction(
        [times + problem.lower[0], space],
        numpy.stack([history[:, :num_nodes], history[:, num_nodes:]]),
        problem.component_names,
    )


def burgers_crank_nicolson(problem, resolution, time_step=1e-4, time_samples=201):
    # type: (Any, int, float, int) -> GridFunction
    """
    Solves the Burgers problem with finite differences.

    Central differences of the conservative flux and of the viscous term in space,
    Crank-Nicolson in time, Newton iterations at every step.

    Arguments:

        problem (:class:`~kerbil.problems.burgers.BurgersProblem`): the problem.

        resolution (int): the number of space intervals.

        time_step (float): the largest time step. Defaults to 1e-4.

        time_samples (int): the number of stored time levels. Defaults to 201.

    Returns:

        GridFunction: the solution.
    """
    space = _node_axis(problem.lower[1], problem.upper[1], resolution)
    spacing = space[1] - space[0]
    viscosity = problem.viscosity
    times, step, num_steps, per_sample = _time_grid(
        problem.upper[0] - problem.lower[0], time_step, time_samples
    )

    def rhs(interior):
        # type: (numpy.ndarray) -> numpy.ndarray
        padded = numpy.concatenate([[0.0], interior, [0.0]])
        flux = 0.5 * padded ** 2
        return -(flux[2:] - flux[:-2]) / (2.0 * spacing) + viscosity * (
            padded[2:] - 2.0 * padded[1:-1] + padded[:-2]
        ) / spacing ** 2

    def jacobian(interior):
        # type: (numpy.ndarray) -> Any
        diffusion = viscosity / spacing ** 2
        return sparse.diags(
            [
                interior[:-1] / (2.0 * spacing) + diffusion,
                numpy.full(interior.size, -2.0 * diffusion),
                -interior[1:] / (2.0 * spacing) + diffusion,
            ],
            [-1, 0, 1],
            format="csr",
        )

    initial = -numpy.sin(math.pi * space[1:-1])
    history = _crank_nicolson(rhs, jacobian, initial, step, num_steps, per_sample)
    values = numpy.zeros((history.shape[0], space.size))
    values[:, 1:-1] = history
    return GridFunction([times + problem.lower[0], space], values[None], ("u",))


def cole_hopf(viscosity, times, space):
    # type: (float, numpy.ndarray, numpy.ndarray) -> numpy.ndarray
    """
    Evaluates the Cole-Hopf solution of the Burgers problem with u(0, x) = -sin(pi x).

    u(t, x) = -I_1 / I_0 with I_k the integrals over s of sin(pi (x - y))^k
    f(x - y) exp(-s^2), y = sqrt(4 nu t) s and f(z) = exp(-cos(pi z) / (2 pi nu)).

    Arguments:

        viscosity (float): the viscosity nu.

        times (numpy.ndarray): the times.

        space (numpy.ndarray): the space coordinates.

    Returns:

        numpy.ndarray: the solution, shape (times, space).
    """
    values = numpy.empty((len(times), len(space)))
    for row, time in enumerate(times):
        if time <= 0.0:
            values[row] = -numpy.sin(math.pi * space)
            continue
        width = math.sqrt(4.0 * viscosity * time)

        def integrands(scaled, width=width):
            # type: (float, float) -> numpy.ndarray
            shifted = space - width * scaled
            weight = numpy.exp(
                -numpy.cos(math.pi * shifted) / (2.0 * math.pi * viscosity) - scaled ** 2
            )
            return numpy.concatenate([numpy.sin(math.pi * shifted) * weight, weight])

        integrals, _ = integrate.quad_vec(
            integrands, -8.0, 8.0, epsabs=0.0, epsrel=1e-11, norm="max"
        )
        values[row] = -integrals[: len(space)] / integrals[len(space) :]

    return values


def _burgers_reference(problem, resolution, _time_step, time_samples):
    # type: (Any, int, Optional[float], int) -> GridFunction
    times = numpy.linspace(problem.lower[0], problem.upper[0], time_samples)
    space = _node_axis(problem.lower[1], problem.upper[1], resolution)
    values = cole_hopf(problem.viscosity, times - problem.lower[0], space)
    return GridFunction([times, space], values[None], problem.component_names)


_SOLVERS = {
    "elliptic": _elliptic_reference,
    "schrodinger": _schrodinger_reference,
    "gray_scott": _gray_scott_reference,
    "burgers": _burgers_reference,
    "eikonal": _eikonal_reference,
    "darcy_inverse": _darcy_reference,
}


def cache_key(problem, resolution, time_step, time_samples):
    # type: (base.Problem, int, Optional[float], Optional[int]) -> str
    """
    Returns the key identifying a reference solution.
    """
    return json.dumps(
        collections.OrderedDict(
            [
                ("problem", problem.name),
                ("constants", problem.constants),
                ("resolution", resolution),
                ("time_step", time_step),
                ("time_samples", time_samples),
            ]
        ),
        sort_keys=True,
    )


def _cache_filename(cache_directory, problem, key):
    # type: (str, base.Problem, str) -> str
    digest = hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]
    return os.path.join(cache_directory, "{0}_{1}.h5".format(problem.name, digest))


def _load_cached(filename, key, component_names):
    # type: (str, str, Sequence[str]) -> Optional[GridFunction]
    if not os.path.isfile(filename):
        return None
    try:
        stored_key = hdf5.load_hdf5_attribute(filename, "key")
        if isinstance(stored_key, bytes):
            stored_key = stored_key.decode("utf-8")
        if stored_key != key:
            return None
        values = hdf5.load_hdf5_data(filename, "/values")
        axes = [
            hdf5.load_hdf5_data(filename, "/axes/{0}".format(axis))
            for axis in range(values.ndim - 1)
        ]
    except exceptions.KerbilHdf5FileReadingError:
        return None
    return GridFunction(axes, values, component_names)


def _compute(problem, resolution, time_step, time_samples):
    # type: (base.Problem, int, Optional[float], Optional[int]) -> GridFunction
    return _SOLVERS[problem.name](problem, resolution, time_step, time_samples)


def _max_relative_change(coarse, fine):
    # type: (GridFunction, GridFunction) -> float
    selection = [slice(None)]
    for coarse_axis, fine_axis in zip(coarse.axes, fine.axes):
        stride = (fine_axis.size - 1) // max(coarse_axis.size - 1, 1)
        if (coarse_axis.size - 1) * stride != fine_axis.size - 1 or not numpy.allclose(
            fine_axis[::stride], coarse_axis
        ):
            raise exceptions.KerbilDimensionMismatchError(
                "The refined grid does not contain the coarse grid."
            )
        selection.append(slice(None, None, stride))
    shared = fine.values[tuple(selection)]
    scale = max(float(numpy.max(numpy.abs(shared))), numpy.finfo(float).tiny)
    return float(numpy.max(numpy.abs(shared - coarse.values))) / scale


def reference_solution(
    problem,
    resolution=None,
    time_step=None,
    time_samples=None,
    cache_directory=None,
    check=False,
    tolerance=1e-4,
):
    # type: (base.Problem, Optional[int], Optional[float], Optional[int], Optional[str], bool, float) -> GridFunction
    """
    Computes (or loads from the cache) the reference solution of a problem.

    Elliptic: the manufactured solution. Eikonal: the transformed linear equation,
    5-point finite differences. Darcy: the forward problem with the true
    coefficient, 5-point finite differences with harmonic-mean face coefficients
    (the second component is the true log-coefficient). Schrodinger: split-step
    Fourier. Gray-Scott: Crank-Nicolson with Newton iterations and ghost-node
    Neumann conditions. Burgers: the Cole-Hopf formula evaluated by adaptive
    quadrature.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        resolution (Optional[int]): the number of grid intervals per space axis
            (Fourier modes for Schrodinger), or None for the solver default.
            Defaults to None.

        time_step (Optional[float]): the largest time step of time-stepping
            solvers, or None for the default. Defaults to None.

        time_samples (Optional[int]): the number of stored time levels, or None for
            the default. Defaults to None.

        cache_directory (Optional[str]): the directory of the HDF5 cache, or None
            to disable caching. Defaults to None.

        check (bool): whether to also solve at half the resolution and check the
            change at the shared nodes. Defaults to False.

        tolerance (float): the largest accepted relative change. Defaults to 1e-4.

    Returns:

        GridFunction: the reference solution.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilOracleNotConvergedError`: if the
            check fails, or if the solver does not converge.
    """
    resolution, time_step, time_samples = _settings(
        problem, resolution, time_step, time_samples
    )
    key = cache_key(problem, resolution, time_step, time_samples)
    filename = None
    reference = None
    if cache_directory is not None:
        filename = _cache_filename(cache_directory, problem, key)
        reference = _load_cached(filename, key, problem.component_names)
    if reference is None:
        reference = _compute(problem, resolution, time_step, time_samples)
        if filename is not None:
            datasets = {"/values": reference.values}  # type: Dict[str, Any]
            for index, axis in enumerate(reference.axes):
                datasets["/axes/{0}".format(index)] = axis
            hdf5.save_hdf5_data(filename, datasets, attributes={"key": key})
    if check:
        coarse = _compute(problem, resolution // 2, time_step, time_samples)
        change = _max_relative_change(coarse, reference)
        if change > tolerance:
            raise exceptions.KerbilOracleNotConvergedError(
                "The reference solution of {0} changes by {1:.3e} between resolutions "
                "{2} and {3} (tolerance {4:.1e}).".format(
                    problem.name, change, resolution // 2, resolution, tolerance
                )
            )

    return reference


def refinement_study(problem, resolutions, time_step=None, time_samples=None):
    # type: (base.Problem, Sequence[int], Optional[float], Optional[int]) -> named_tuples.RefinementStudy
    """
    Measures the self-convergence of a reference solver.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        resolutions (Sequence[int]): increasing resolutions, each twice the
            previous one.

        time_step (Optional[float]): the time step. Defaults to None.

        time_samples (Optional[int]): the number of time levels. Defaults to None.

    Returns:

        :class:`~kerbil.utils.named_tuples.RefinementStudy`: the changes between
        successive resolutions and the observed orders.
    """
    resolutions = sorted(int(resolution) for resolution in resolutions)
    if len(resolutions) < 2:
        raise exceptions.KerbilInvalidCountsError(
            "A refinement study needs at least two resolutions."
        )
    solutions = [
        _compute(problem, *_settings(problem, resolution, time_step, time_samples))
        for resolution in resolutions
    ]
    changes = [
        _max_relative_change(coarse, fine)
        for coarse, fine in zip(solutions[:-1], solutions[1:])
    ]
    orders = []
    for previous, current in zip(changes[:-1], changes[1:]):
        orders.append(
            math.log(previous / current, 2.0) if previous > 0 and current > 0 else float("inf")
        )

    return named_tuples.RefinementStudy(
        resolutions=resolutions, changes=changes, orders=orders
    )


def field_errors(predicted, truth):
    # type: (numpy.ndarray, numpy.ndarray) -> named_tuples.ErrorMetrics
    """
    Computes the errors between two sampled fields.

    Arguments:

        predicted (numpy.ndarray): the approximate values.

        truth (numpy.ndarray): the reference values, same shape.

    Returns:

        :class:`~kerbil.utils.named_tuples.ErrorMetrics`: the root mean square, the
        maximum absolute and the relative root mean square errors.
    """
    predicted = numpy.asarray(predicted, dtype=numpy.float64)
    truth = numpy.asarray(truth, dtype=numpy.float64)
    if predicted.shape != truth.shape:
        raise exceptions.KerbilDimensionMismatchError(
            "Fields of shapes {0} and {1} cannot be compared.".format(
                predicted.shape, truth.shape
            )
        )
    difference = predicted - truth
    l2 = float(numpy.sqrt(numpy.mean(difference ** 2)))
    scale = float(numpy.sqrt(numpy.mean(truth ** 2)))
    return named_tuples.ErrorMetrics(
        l2=l2,
        linf=float(numpy.max(numpy.abs(difference))),
        rel_l2=l2 / scale if scale > 0 else float("inf"),
    )


def evaluation_points(problem, num_per_axis=100):
    # type: (base.Problem, int) -> numpy.ndarray
    """
    Returns the cell centres of a uniform grid covering the domain.
    """
    _, points = generic_algorithms.uniform_grid(problem.box, num_per_axis)
    return points


def error_metrics(state, problem, reference, num_per_axis=100):
    # type: (Any, base.Problem, GridFunction, int) -> Dict[str, named_tuples.ErrorMetrics]
    """
    Measures the errors of a state against a reference solution.

    Arguments:

        state (Union[GnState, ZeroState]): the state.

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        reference (GridFunction): the reference solution.

        num_per_axis (int): the number of evaluation points along each axis of a
            cell-centred grid. Defaults to 100.

    Returns:

        Dict[str, :class:`~kerbil.utils.named_tuples.ErrorMetrics`]: the errors of
        each component.
    """
    points = evaluation_points(problem, num_per_axis)
    zero = (0,) * problem.dimension
    features = state.features_at(
        points, dict((name, (zero,)) for name in problem.component_names)
    )
    truth = reference(points)
    errors = collections.OrderedDict()  # type: Dict[str, named_tuples.ErrorMetrics]
    for index, name in enumerate(problem.component_names):
        errors[name] = field_errors(features.values[name][zero], truth[:, index])

    return errors


def generate_observations(problem, reference, num_observations, noise_std, rng, seed=None):
    # type: (base.Problem, GridFunction, int, float, numpy.random.Generator, Optional[int]) -> named_tuples.Observations
    """
    Generates noisy observations of the first component of a reference solution.

    Arguments:

        problem (:class:`~kerbil.problems.base.Problem`): the problem.

        reference (GridFunction): the reference solution.

        num_observations (int): the number of observations.

        noise_std (float): the standard deviation of the Gaussian noise.

        rng (numpy.random.Generator): the generator of locations and noise.

        seed (Optional[int]): the seed of the generator, stored with the
            observations. Defaults to None.

    Returns:

        :class:`~kerbil.utils.named_tuples.Observations`: uniformly drawn interior
        locations, the bilinearly interpolated values with independent noise added,
        and the noise-free values.
    """
    if num_observations < 1:
        raise exceptions.KerbilInvalidCountsError("At least one observation is needed.")
    points = problem.sample_interior(num_observations, rng)
    truth = reference(points)[:, 0]
    values = truth + noise_std * rng.standard_normal(num_observations)
    return named_tuples.Observations(
        points=points,
        values=values,
        truth=truth,
        noise_std=float(noise_std),
        seed=seed,
    )


def save_observations(filename, observations):
    # type: (str, named_tuples.Observations) -> None
    """
    Saves observations to an HDF5 file.
    """
    attributes = {"noise_std": observations.noise_std}  # type: Dict[str, Any]
    if observations.seed is not None:
        attributes["seed"] = observations.seed
    hdf5.save_hdf5_data(
        filename,
        {
            "/points": observations.points,
            "/values": observations.values,
            "/truth": observations.truth,
        },
        attributes=attributes,
    )


def load_observations(filename):
    # type: (str) -> named_tuples.Observations
    """
    Loads observations saved by :func:`save_observations`.
    """
    seed = hdf5.load_hdf5_attribute(filename, "seed")
    return named_tuples.Observations(
        points=hdf5.load_hdf5_data(filename, "/points"),
        values=hdf5.load_hdf5_data(filename, "/values"),
        truth=hdf5.load_hdf5_data(filename, "/truth"),
        noise_std=float(hdf5.load_hdf5_attribute(filename, "noise_std")),
        seed=None if seed is None else int(seed),
    )
