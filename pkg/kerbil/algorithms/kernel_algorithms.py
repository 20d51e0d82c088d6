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
Kernel algorithms.

This module contains the kernel catalogue and the functions that compute kernel
values, mixed derivatives with respect to the two kernel arguments and derivatives
with respect to the kernel hyperparameters. All derivatives are computed exactly by
propagating truncated Taylor expansions through the scalar formula of each kernel
(see :mod:`~kerbil.algorithms.taylor_arithmetic`).

Kernel hyperparameters are stored unconstrained: positive parameters (lengthscales,
amplitudes) are stored as logarithms and exponentiated inside the kernel formulas.
"""
from __future__ import absolute_import, division, print_function

import collections
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union  # pylint: disable=unused-import

import numpy
from past.builtins import basestring
from scipy import special

from kerbil.algorithms import taylor_arithmetic as taylor
from kerbil.utils import exceptions, named_tuples


# Number of scalars (rows x columns x Taylor coefficients) processed per chunk.
_CHUNK_SCALARS = 2 ** 21
_TAPE_CHUNK_SCALARS = 2 ** 19

MAX_ORDER = 2


class ParamVector(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, raw, layout):
        # type: (numpy.ndarray, Sequence[named_tuples.ParamSlot]) -> None
        """
        Unconstrained hyperparameter vector.

        Arguments:

            raw (numpy.ndarray): the unconstrained values.

            layout (Sequence[:class:`~kerbil.utils.named_tuples.ParamSlot`]): the
                named slices of the raw vector. The slices must partition the vector.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                layout does not partition the raw vector.
        """
        self.raw = numpy.array(raw, dtype=numpy.float64).ravel()
        self.layout = tuple(layout)
        position = 0
        for slot in self.layout:
            if slot.start != position:
                raise exceptions.KerbilDimensionMismatchError(
                    "Parameter {0} does not start at entry {1}.".format(
                        slot.name, position
                    )
                )
            position += _slot_size(slot)
        if position != self.raw.shape[0]:
            raise exceptions.KerbilDimensionMismatchError(
                "The layout covers {0} entries, the raw vector has {1}.".format(
                    position, self.raw.shape[0]
                )
            )
        self._slots = collections.OrderedDict(
            (slot.name, slot) for slot in self.layout
        )

    @property
    def size(self):
        # type: () -> int
        """
        The number of unconstrained entries.
        """
        return self.raw.shape[0]

    def names(self):
        # type: () -> List[str]
        """
        Returns the parameter names, in layout order.
        """
        return list(self._slots.keys())

    def slot(self, name):
        # type: (str) -> named_tuples.ParamSlot
        """
        Returns the slot of a named parameter.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if the
                parameter does not exist.
        """
        try:
            return self._slots[name]
        except KeyError:
            raise exceptions.KerbilConfigurationSchemaError(
                "Unknown kernel parameter {0} (known: {1}).".format(
                    name, ", ".join(self.names())
                )
            )

    def get_raw(self, name):
        # type: (str) -> numpy.ndarray
        """
        Returns the unconstrained value of a named parameter.
        """
        slot = self.slot(name)
        return self.raw[slot.start : slot.start + _slot_size(slot)].reshape(slot.shape)

    def get_value(self, name):
        # type: (str) -> numpy.ndarray
        """
        Returns the constrained value of a named parameter.
        """
        slot = self.slot(name)
        raw = self.get_raw(name)
        return numpy.exp(raw) if slot.transform == "exp" else raw

    def with_raw(self, raw):
        # type: (numpy.ndarray) -> ParamVector
        """
        Returns a parameter vector with the same layout and new raw values.
        """
        return ParamVector(raw, self.layout)

    def to_dict(self, max_entries=16):
        # type: (int) -> Dict[str, Any]
        """
        Returns the constrained values of the parameters.

        Parameters with more than 'max_entries' entries (network weights) are
        summarized by their Euclidean norm.

        Arguments:

            max_entries (int): the largest parameter reported entry by entry.
                Defaults to 16.

        Returns:

            Dict[str, Any]: the values, keyed by parameter name.
        """
        values = collections.OrderedDict()  # type: Dict[str, Any]
        for name in self.names():
            value = self.get_value(name)
            if value.size > max_entries:
                values[name + ".norm"] = float(numpy.linalg.norm(value))
            elif value.ndim == 0:
                values[name] = float(value)
            else:
                values[name] = [float(entry) for entry in value.ravel()]
        return values


def _slot_size(slot):
    # type: (named_tuples.ParamSlot) -> int
    return int(numpy.prod(slot.shape)) if slot.shape else 1


def raw_values(params):
    # type: (Union[ParamVector, numpy.ndarray]) -> numpy.ndarray
    """
    Returns the unconstrained values of a parameter vector or of a plain array.
    """
    if isinstance(params, ParamVector):
        return params.raw
    return numpy.asarray(params, dtype=numpy.float64).ravel()


class Kernel(object):
    """
    See documentation of the '__init__' function.
    """

    variant = ""
    accepted_keys = ("variant",)  # type: Tuple[str, ...]

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Base class of all kernels.

        A kernel declares its hyperparameter layout, creates the initial
        unconstrained values from its configuration table and evaluates its scalar
        formula on jets.

        Arguments:

            dimension (int): the dimension of the kernel arguments.

            options (Optional[Dict[str, Any]]): the entries of the kernel
                configuration table. Defaults to None.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilConfigurationSchemaError`: if the
                table contains keys that the kernel does not accept.
        """
        self.dimension = dimension
        self.options = dict(options or {})
        for key in self.options:
            if key not in self.accepted_keys:
                raise exceptions.KerbilConfigurationSchemaError(
                    "Kernel variant {0} does not accept the parameter {1}.".format(
                        self.variant, key
                    )
                )
        # Scales every hyperparameter derivative. Only changed to check that the
        # gradient check detects wrong derivatives.
        self.parameter_derivative_scale = 1.0

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        """
        Returns the hyperparameter layout of the kernel.
        """
        raise NotImplementedError

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        """
        Returns the initial unconstrained hyperparameters.
        """
        raise NotImplementedError

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        """
        Evaluates the kernel on jets.

        Arguments:

            xs (List[Jet]): the coordinates of the first argument.

            ys (List[Jet]): the coordinates of the second argument.

            params (Dict[str, Jet]): the unconstrained hyperparameters.

        Returns:

            Jet: the kernel value.
        """
        raise NotImplementedError

    @property
    def num_params(self):
        # type: () -> int
        """
        The number of unconstrained hyperparameters.
        """
        return sum(_slot_size(slot) for slot in self.layout())

    @property
    def tape_width(self):
        # type: () -> int
        """
        The largest number of values per point pair in an intermediate of the
        formula.
        """
        return 1

    def _positive_option(self, name, default):
        # type: (str, float) -> float
        value = self.options.get(name, default)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            raise exceptions.KerbilWrongParameterTypeError(
                "Kernel parameter {0} must be a positive number.".format(name)
            )
        return float(value)


def _squared_distance(xs, ys, weights=None):
    # type: (List[taylor.Jet], List[taylor.Jet], Optional[List[Any]]) -> taylor.Jet
    total = None
    for index, (first, second) in enumerate(zip(xs, ys)):
        difference = first - second
        term = difference * difference
        if weights is not None:
            term = term * weights[index]
        total = term if total is None else total + term
    return total


class RbfIso(Kernel):
    """
    See documentation of the '__init__' function.
    """

    variant = "rbf_iso"
    accepted_keys = ("variant", "lengthscale")

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Isotropic squared-exponential kernel.

        k(x, y) = exp(-|x - y|^2 / (2 l^2)), with one parameter, 'lengthscale'
        (configuration key 'lengthscale', default 1.0).
        """
        super(RbfIso, self).__init__(dimension, options)
        self._initial = self._positive_option("lengthscale", 1.0)

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        return (named_tuples.ParamSlot("lengthscale", 0, (), "exp"),)

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        return numpy.array([math.log(self._initial)])

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        inverse_square = taylor.exp(params["lengthscale"] * -2.0)
        return taylor.exp(_squared_distance(xs, ys) * inverse_square * -0.5)


class RbfAniso(Kernel):
    """
    See documentation of the '__init__' function.
    """

    variant = "rbf_aniso"
    accepted_keys = ("variant", "lengthscale")

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Anisotropic squared-exponential kernel.

        k(x, y) = exp(-sum_i (x_i - y_i)^2 / (2 l_i^2)), with one lengthscale per
        coordinate. The configuration key 'lengthscale' is either a number (shared
        initial value) or a list with one entry per coordinate.
        """
        super(RbfAniso, self).__init__(dimension, options)
        initial = self.options.get("lengthscale", 1.0)
        if isinstance(initial, list):
            if len(initial) != dimension:
                raise exceptions.KerbilDimensionMismatchError(
                    "Expected {0} initial lengthscales, got {1}.".format(
                        dimension, len(initial)
                    )
                )
            self._initial = numpy.array(initial, dtype=numpy.float64)
        else:
            self._initial = numpy.full(
                dimension, self._positive_option("lengthscale", 1.0)
            )
        if numpy.any(self._initial <= 0):
            raise exceptions.KerbilWrongParameterTypeError(
                "Kernel lengthscales must be positive."
            )

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        return (named_tuples.ParamSlot("lengthscale", 0, (self.dimension,), "exp"),)

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        return numpy.log(self._initial)

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        weights = [
            taylor.exp(taylor.take(params["lengthscale"], index) * -2.0)
            for index in range(self.dimension)
        ]
        return taylor.exp(_squared_distance(xs, ys, weights) * -0.5)


class PeriodicTimeSpace(Kernel):
    """
    See documentation of the '__init__' function.
    """

    variant = "periodic_time_space"
    accepted_keys = ("variant", "time_lengthscale", "space_lengthscale", "period")

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Space-time kernel, squared-exponential in time and periodic in space.

        k((t, x), (s, y)) = exp(-(t - s)^2 / (2 l_t^2))
        * exp(-2 sin^2(pi (x - y) / p) / l_x^2). Time is coordinate 0 and space is
        coordinate 1. The period p (configuration key 'period', default 10.0) is a
        fixed constant, not a hyperparameter.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                dimension is not 2.
        """
        super(PeriodicTimeSpace, self).__init__(dimension, options)
        if dimension != 2:
            raise exceptions.KerbilDimensionMismatchError(
                "The periodic space-time kernel needs (t, x) points."
            )
        self.period = self._positive_option("period", 10.0)
        self._initial_time = self._positive_option("time_lengthscale", 1.0)
        self._initial_space = self._positive_option("space_lengthscale", 1.0)

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        return (
            named_tuples.ParamSlot("time_lengthscale", 0, (), "exp"),
            named_tuples.ParamSlot("space_lengthscale", 1, (), "exp"),
        )

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        return numpy.log([self._initial_time, self._initial_space])

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        time_difference = xs[0] - ys[0]
        time_term = (
            time_difference
            * time_difference
            * taylor.exp(params["time_lengthscale"] * -2.0)
            * -0.5
        )
        phase = taylor.sin((xs[1] - ys[1]) * (math.pi / self.period))
        space_term = (
            phase * phase * taylor.exp(params["space_lengthscale"] * -2.0) * -2.0
        )
        return taylor.exp(time_term + space_term)


class AdditiveRbfPoly(Kernel):
    """
    See documentation of the '__init__' function.
    """

    variant = "additive_rbf_poly"
    accepted_keys = ("variant", "sigma", "lengthscale", "shift", "scale")

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Sum of a squared-exponential kernel and a quadratic polynomial kernel.

        k(x, y) = sigma^2 exp(-|x - y|^2 / (2 l^2)) + (c + alpha x.y)^2. The
        amplitude 'sigma' and the 'lengthscale' l are positive; the 'shift' c and
        the 'scale' alpha are free. All initial values default to 1.0.
        """
        super(AdditiveRbfPoly, self).__init__(dimension, options)
        self._initial_sigma = self._positive_option("sigma", 1.0)
        self._initial_lengthscale = self._positive_option("lengthscale", 1.0)
        self._initial_shift = float(self.options.get("shift", 1.0))
        self._initial_scale = float(self.options.get("scale", 1.0))

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        return (
            named_tuples.ParamSlot("sigma", 0, (), "exp"),
            named_tuples.ParamSlot("lengthscale", 1, (), "exp"),
            named_tuples.ParamSlot("shift", 2, (), "identity"),
            named_tuples.ParamSlot("scale", 3, (), "identity"),
        )

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        return numpy.array(
            [
                math.log(self._initial_sigma),
                math.log(self._initial_lengthscale),
                self._initial_shift,
                self._initial_scale,
            ]
        )

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        inverse_square = taylor.exp(params["lengthscale"] * -2.0)
        rbf = taylor.exp(
            _squared_distance(xs, ys) * inverse_square * -0.5
            + params["sigma"] * 2.0
        )
        inner = None
        for first, second in zip(xs, ys):
            term = first * second
            inner = term if inner is None else inner + term
        polynomial_base = params["shift"] + params["scale"] * inner
        return rbf + polynomial_base * polynomial_base


class GibbsMlp(Kernel):
    """
    See documentation of the '__init__' function.
    """

    variant = "gibbs_mlp"
    accepted_keys = ("variant", "hidden_layers", "outputs", "initial_lengthscale")

    def __init__(self, dimension, options=None):
        # type: (int, Optional[Dict[str, Any]]) -> None
        """
        Non-stationary Gibbs kernel with a neural-network lengthscale field.

        k(x, y) = prod_i sqrt(2 l_i(x) l_i(y) / (l_i(x)^2 + l_i(y)^2))
        * exp(-sum_i (x_i - y_i)^2 / (l_i(x)^2 + l_i(y)^2)). The field l is a
        fully connected network with tanh hidden layers (configuration key
        'hidden_layers', default [50, 50]) followed by a softplus output. With one
        output ('outputs' = 1, the default) the same lengthscale is used for every
        coordinate; otherwise there must be one output per coordinate.

        Weights are initialized with the Glorot-uniform scheme and biases with zeros.
        If 'initial_lengthscale' is given, the output biases are set so that the
        field starts near that value.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                number of outputs is neither 1 nor the dimension.
        """
        super(GibbsMlp, self).__init__(dimension, options)
        self.hidden_layers = [int(size) for size in self.options.get("hidden_layers", [50, 50])]
        self.outputs = int(self.options.get("outputs", 1))
        if self.outputs not in (1, dimension):
            raise exceptions.KerbilDimensionMismatchError(
                "A Gibbs kernel in dimension {0} needs 1 or {0} lengthscale "
                "outputs.".format(dimension)
            )
        self.initial_lengthscale = self.options.get("initial_lengthscale")
        if self.initial_lengthscale is not None:
            self._positive_option("initial_lengthscale", 1.0)
        self.sizes = [dimension] + self.hidden_layers + [self.outputs]

    @property
    def tape_width(self):
        # type: () -> int
        return max(self.sizes)

    def layout(self):
        # type: () -> Tuple[named_tuples.ParamSlot, ...]
        slots = []
        start = 0
        for layer, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            slots.append(
                named_tuples.ParamSlot(
                    "weights_{0}".format(layer), start, (fan_in, fan_out), "identity"
                )
            )
            start += fan_in * fan_out
            slots.append(
                named_tuples.ParamSlot(
                    "biases_{0}".format(layer), start, (fan_out,), "identity"
                )
            )
            start += fan_out
        return tuple(slots)

    def initial_raw(self, rng):
        # type: (numpy.random.Generator) -> numpy.ndarray
        blocks = []
        num_layers = len(self.sizes) - 1
        for layer, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            blocks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
            biases = numpy.zeros(fan_out)
            if layer == num_layers - 1 and self.initial_lengthscale is not None:
                biases[:] = softplus_inverse(float(self.initial_lengthscale))
            blocks.append(biases)
        return numpy.concatenate(blocks)

    def _field(self, coordinates, params):
        # type: (List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        hidden = taylor.stack(coordinates)
        num_layers = len(self.sizes) - 1
        for layer in range(num_layers):
            hidden = taylor.matmul(
                hidden, params["weights_{0}".format(layer)]
            ) + params["biases_{0}".format(layer)]
            if layer < num_layers - 1:
                hidden = taylor.tanh(hidden)
        return taylor.softplus(hidden)

    def formula(self, xs, ys, params):
        # type: (List[taylor.Jet], List[taylor.Jet], Dict[str, taylor.Jet]) -> taylor.Jet
        field_x = self._field(xs, params)
        field_y = self._field(ys, params)
        prefactor = None
        exponent = None
        shared = None
        for index in range(self.dimension):
            if self.outputs == 1 and shared is not None:
                factor, square_sum = shared
            else:
                output = 0 if self.outputs == 1 else index
                lengthscale_x = taylor.take(field_x, output)
                lengthscale_y = taylor.take(field_y, output)
                square_sum = (
                    lengthscale_x * lengthscale_x + lengthscale_y * lengthscale_y
                )
                factor = taylor.sqrt(
                    lengthscale_x * lengthscale_y * 2.0 / square_sum
                )
                shared = (factor, square_sum)
            difference = xs[index] - ys[index]
            term = difference * difference / square_sum
            prefactor = factor if prefactor is None else prefactor * factor
            exponent = term if exponent is None else exponent + term
        return prefactor * taylor.exp(-exponent)

    def lengthscales(self, raw, points):
        # type: (numpy.ndarray, numpy.ndarray) -> numpy.ndarray
        """
        Evaluates the lengthscale field at a set of points.

        Arguments:

            raw (numpy.ndarray): the unconstrained hyperparameters.

            points (numpy.ndarray): the points, shape (n, d).

        Returns:

            numpy.ndarray: the lengthscales, shape (n, outputs).
        """
        params = ParamVector(raw, self.layout())
        hidden = numpy.atleast_2d(numpy.asarray(points, dtype=numpy.float64))
        num_layers = len(self.sizes) - 1
        for layer in range(num_layers):
            hidden = hidden.dot(params.get_raw("weights_{0}".format(layer)))
            hidden = hidden + params.get_raw("biases_{0}".format(layer))
            if layer < num_layers - 1:
                hidden = numpy.tanh(hidden)
        return numpy.logaddexp(0.0, hidden)


KERNEL_VARIANTS = collections.OrderedDict(
    (kernel.variant, kernel)
    for kernel in (RbfIso, RbfAniso, PeriodicTimeSpace, AdditiveRbfPoly, GibbsMlp)
)


def build_kernel(table, dimension):
    # type: (Dict[str, Any], int) -> Kernel
    """
    Creates a kernel from its configuration table.

    Arguments:

        table (Dict[str, Any]): the configuration table. The 'variant' entry selects
            the kernel family; the other entries are the family's initial values and
            options.

        dimension (int): the dimension of the kernel arguments.

    Returns:

        Kernel: the kernel.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilUnknownKernelError`: if the variant is
            missing or unknown.
    """
    variant = table.get("variant")
    if not isinstance(variant, basestring) or variant not in KERNEL_VARIANTS:
        raise exceptions.KerbilUnknownKernelError(
            "Unknown kernel variant {0} (known: {1}).".format(
                variant, ", ".join(KERNEL_VARIANTS)
            )
        )

    return KERNEL_VARIANTS[variant](dimension, table)


class ComponentKernels(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, names, kernels):
        # type: (Sequence[str], Sequence[Kernel]) -> None
        """
        The independent kernels of the components of a problem.

        The hyperparameters of all components are concatenated into one vector, in
        component order. Parameter names are prefixed with the component name (for
        example 'u.lengthscale').

        Arguments:

            names (Sequence[str]): the component names.

            kernels (Sequence[Kernel]): the kernel of each component.
        """
        self.names = tuple(names)
        self.kernels = tuple(kernels)
        self.offsets = []  # type: List[int]
        layout = []
        start = 0
        for name, kernel in zip(self.names, self.kernels):
            self.offsets.append(start)
            for slot in kernel.layout():
                layout.append(
                    named_tuples.ParamSlot(
                        "{0}.{1}".format(name, slot.name),
                        start + slot.start,
                        slot.shape,
                        slot.transform,
                    )
                )
            start += kernel.num_params
        self.layout = tuple(layout)
        self.num_params = start

    def component_slice(self, component):
        # type: (int) -> slice
        """
        Returns the entries of the full raw vector used by one component.
        """
        start = self.offsets[component]
        return slice(start, start + self.kernels[component].num_params)

    def initial_params(self, rng):
        # type: (numpy.random.Generator) -> ParamVector
        """
        Returns the initial hyperparameters of all the components.
        """
        return ParamVector(
            numpy.concatenate([kernel.initial_raw(rng) for kernel in self.kernels]),
            self.layout,
        )

    def set_parameter_derivative_scale(self, scale):
        # type: (float) -> None
        """
        Scales all hyperparameter derivatives (a test hook for the gradient check).
        """
        for kernel in self.kernels:
            kernel.parameter_derivative_scale = scale


def _check_multi_index(index, dimension):
    # type: (Sequence[int], int) -> Tuple[int, ...]
    index = tuple(int(order) for order in index)
    if len(index) != dimension:
        raise exceptions.KerbilDimensionMismatchError(
            "Multi-index {0} for points of dimension {1}.".format(index, dimension)
        )
    if any(order < 0 for order in index) or sum(index) > MAX_ORDER:
        raise exceptions.KerbilUnsupportedOrderError(
            "Derivative order {0} is not supported (at most {1} per argument).".format(
                index, MAX_ORDER
            )
        )
    return index


def _multi_factorial(index):
    # type: (Sequence[int]) -> float
    result = 1.0
    for order in index:
        result *= math.factorial(order)
    return result


def _prepare_pairs(pairs, dimension):
    # type: (Sequence[Tuple[Sequence[int], Sequence[int]]], int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]
    checked = []
    for alpha, beta in pairs:
        pair = (_check_multi_index(alpha, dimension), _check_multi_index(beta, dimension))
        if pair not in checked:
            checked.append(pair)
    return checked


def _space_for(pairs, dimension, num_tangents):
    # type: (List[Tuple[Tuple[int, ...], Tuple[int, ...]]], int, int) -> taylor.JetSpace
    targets = []
    for alpha, beta in pairs:
        targets.append(alpha + beta + (0,) * num_tangents)
        for tangent in range(num_tangents):
            unit = tuple(1 if position == tangent else 0 for position in range(num_tangents))
            targets.append(alpha + beta + unit)
    return taylor.jet_space(2 * dimension + num_tangents, targets)


def _point_jets(space, points, first_variable, axis):
    # type: (taylor.JetSpace, numpy.ndarray, int, int) -> List[taylor.Jet]
    jets = []
    for coordinate in range(points.shape[1]):
        values = points[:, coordinate]
        values = values[:, None] if axis == 0 else values[None, :]
        jets.append(taylor.variable(space, values, first_variable + coordinate))
    return jets


def _param_jets(kernel, raw, space, directions=None, tape=None):
    # type: (Kernel, numpy.ndarray, taylor.JetSpace, Optional[numpy.ndarray], Optional[taylor.Tape]) -> Tuple[Dict[str, taylor.Jet], List[taylor.Jet]]
    params = {}  # type: Dict[str, taylor.Jet]
    leaves = []  # type: List[taylor.Jet]
    first_tangent = 2 * kernel.dimension
    for slot in kernel.layout():
        size = _slot_size(slot)
        value = raw[slot.start : slot.start + size].reshape(slot.shape)
        if tape is not None:
            jet = tape.leaf(space, value)
            leaves.append(jet)
        else:
            jet = taylor.constant(space, value)
            if directions is not None:
                for tangent in range(directions.shape[0]):
                    direction = directions[tangent, slot.start : slot.start + size]
                    if numpy.any(direction != 0.0):
                        jet.coeffs[space.unit(first_tangent + tangent)] = direction.reshape(
                            slot.shape
                        )
        params[slot.name] = jet
    return params, leaves


def _row_chunks(num_rows, num_columns, space_size, budget):
    # type: (int, int, int, int) -> List[Tuple[int, int]]
    step = max(1, budget // max(1, num_columns * space_size))
    return [(start, min(start + step, num_rows)) for start in range(0, num_rows, step)]


def _prepare_points(kernel, points):
    # type: (Kernel, numpy.ndarray) -> numpy.ndarray
    points = numpy.atleast_2d(numpy.asarray(points, dtype=numpy.float64))
    if points.shape[1] != kernel.dimension:
        raise exceptions.KerbilDimensionMismatchError(
            "Points of dimension {0} for a kernel of dimension {1}.".format(
                points.shape[1], kernel.dimension
            )
        )
    return points


def derivative_blocks(kernel, raw, points_a, points_b, pairs):
    # type: (Kernel, Any, numpy.ndarray, numpy.ndarray, Sequence[Tuple[Sequence[int], Sequence[int]]]) -> Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], numpy.ndarray]
    """
    Computes mixed kernel derivatives between two sets of points.

    Arguments:

        kernel (Kernel): the kernel.

        raw (Union[ParamVector, numpy.ndarray]): the unconstrained hyperparameters of
            the kernel.

        points_a (numpy.ndarray): the first arguments, shape (n_a, d).

        points_b (numpy.ndarray): the second arguments, shape (n_b, d).

        pairs (Sequence[Tuple[Sequence[int], Sequence[int]]]): pairs of multi-indices
            (alpha, beta).

    Returns:

        Dict[Tuple, numpy.ndarray]: for each pair, the matrix of
        d^alpha_x d^beta_y k(x, y), shape (n_a, n_b).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilUnsupportedOrderError`: if a
            multi-index has an order larger than 2.
    """
    raw = raw_values(raw)
    points_a = _prepare_points(kernel, points_a)
    points_b = _prepare_points(kernel, points_b)
    pairs = _prepare_pairs(pairs, kernel.dimension)
    space = _space_for(pairs, kernel.dimension, 0)
    blocks = {pair: numpy.empty((points_a.shape[0], points_b.shape[0])) for pair in pairs}
    params, _ = _param_jets(kernel, raw, space)
    ys = _point_jets(space, points_b, kernel.dimension, 1)
    for start, stop in _row_chunks(
        points_a.shape[0], points_b.shape[0], space.size, _CHUNK_SCALARS
    ):
        xs = _point_jets(space, points_a[start:stop], 0, 0)
        value = kernel.formula(xs, ys, params)
        for alpha, beta in pairs:
            blocks[(alpha, beta)][start:stop] = numpy.broadcast_to(
                value.coefficient(alpha + beta),
                (stop - start, points_b.shape[0]),
            ) * (_multi_factorial(alpha) * _multi_factorial(beta))

    return blocks


def tangent_blocks(kernel, raw, points_a, points_b, pairs, directions):
    # type: (Kernel, Any, numpy.ndarray, numpy.ndarray, Sequence[Tuple[Sequence[int], Sequence[int]]], numpy.ndarray) -> Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], Tuple[numpy.ndarray, numpy.ndarray]]
    """
    Computes mixed kernel derivatives and their hyperparameter tangents.

    Arguments:

        kernel (Kernel): the kernel.

        raw (Union[ParamVector, numpy.ndarray]): the unconstrained hyperparameters of
            the kernel.

        points_a (numpy.ndarray): the first arguments, shape (n_a, d).

        points_b (numpy.ndarray): the second arguments, shape (n_b, d).

        pairs (Sequence[Tuple[Sequence[int], Sequence[int]]]): pairs of multi-indices
            (alpha, beta).

        directions (numpy.ndarray): directions in the unconstrained hyperparameter
            space, shape (P, num_params).

    Returns:

        Dict[Tuple, Tuple[numpy.ndarray, numpy.ndarray]]: for each pair, the matrix
        of derivatives, shape (n_a, n_b), and its directional derivatives along each
        direction, shape (P, n_a, n_b).
    """
    raw = raw_values(raw)
    directions = numpy.atleast_2d(numpy.asarray(directions, dtype=numpy.float64))
    if directions.shape[1] != kernel.num_params:
        raise exceptions.KerbilDimensionMismatchError(
            "Directions of size {0} for a kernel with {1} parameters.".format(
                directions.shape[1], kernel.num_params
            )
        )
    num_tangents = directions.shape[0]
    points_a = _prepare_points(kernel, points_a)
    points_b = _prepare_points(kernel, points_b)
    pairs = _prepare_pairs(pairs, kernel.dimension)
    space = _space_for(pairs, kernel.dimension, num_tangents)
    num_a, num_b = points_a.shape[0], points_b.shape[0]
    blocks = {
        pair: (numpy.empty((num_a, num_b)), numpy.empty((num_tangents, num_a, num_b)))
        for pair in pairs
    }
    params, _ = _param_jets(kernel, raw, space, directions=directions)
    ys = _point_jets(space, points_b, kernel.dimension, 1)
    units = [
        tuple(1 if position == tangent else 0 for position in range(num_tangents))
        for tangent in range(num_tangents)
    ]
    zeros = (0,) * num_tangents
    for start, stop in _row_chunks(num_a, num_b, space.size, _CHUNK_SCALARS):
        xs = _point_jets(space, points_a[start:stop], 0, 0)
        value = kernel.formula(xs, ys, params)
        for alpha, beta in pairs:
            factor = _multi_factorial(alpha) * _multi_factorial(beta)
            values, tangents = blocks[(alpha, beta)]
            values[start:stop] = numpy.broadcast_to(
                value.coefficient(alpha + beta + zeros), (stop - start, num_b)
            ) * factor
            for tangent, unit in enumerate(units):
                tangents[tangent, start:stop] = numpy.broadcast_to(
                    value.coefficient(alpha + beta + unit), (stop - start, num_b)
                ) * (factor * kernel.parameter_derivative_scale)

    return blocks


def vjp_blocks(kernel, raw, points_a, points_b, seeds):
    # type: (Kernel, Any, numpy.ndarray, numpy.ndarray, Dict[Tuple[Sequence[int], Sequence[int]], numpy.ndarray]) -> numpy.ndarray
    """
    Pulls back cotangents of mixed kernel derivatives to the hyperparameters.

    Arguments:

        kernel (Kernel): the kernel.

        raw (Union[ParamVector, numpy.ndarray]): the unconstrained hyperparameters of
            the kernel.

        points_a (numpy.ndarray): the first arguments, shape (n_a, d).

        points_b (numpy.ndarray): the second arguments, shape (n_b, d).

        seeds (Dict[Tuple, numpy.ndarray]): for each pair of multi-indices
            (alpha, beta), the cotangent of the derivative matrix, shape (n_a, n_b).

    Returns:

        numpy.ndarray: the gradient of sum over pairs of <seed, derivative matrix>
        with respect to the unconstrained hyperparameters.
    """
    raw = raw_values(raw)
    points_a = _prepare_points(kernel, points_a)
    points_b = _prepare_points(kernel, points_b)
    checked = collections.OrderedDict()  # type: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], numpy.ndarray]
    for (alpha, beta), seed in seeds.items():
        pair = _prepare_pairs([(alpha, beta)], kernel.dimension)[0]
        seed = numpy.asarray(seed, dtype=numpy.float64)
        checked[pair] = seed if pair not in checked else checked[pair] + seed
    gradient = numpy.zeros(kernel.num_params)
    if not checked:
        return gradient
    space = _space_for(list(checked.keys()), kernel.dimension, 0)
    num_b = points_b.shape[0]
    # Adjoints are kept per point pair, so wide formulas get smaller chunks.
    for start, stop in _row_chunks(
        points_a.shape[0], num_b, space.size, _TAPE_CHUNK_SCALARS // kernel.tape_width
    ):
        chunk_seeds = [(pair, seed[start:stop]) for pair, seed in checked.items()]
        if not any(numpy.any(seed != 0.0) for _, seed in chunk_seeds):
            continue
        tape = taylor.Tape()
        params, leaves = _param_jets(kernel, raw, space, tape=tape)
        xs = _point_jets(space, points_a[start:stop], 0, 0)
        ys = _point_jets(space, points_b, kernel.dimension, 1)
        value = kernel.formula(xs, ys, params)
        cotangent = [None] * space.size  # type: List[Any]
        for (alpha, beta), seed in chunk_seeds:
            position = space.index[alpha + beta]
            scaled = seed * (_multi_factorial(alpha) * _multi_factorial(beta))
            cotangent[position] = (
                scaled if cotangent[position] is None else cotangent[position] + scaled
            )
        pieces = tape.gradients(value, cotangent, leaves)
        gradient += numpy.concatenate([piece.ravel() for piece in pieces])

    return gradient * kernel.parameter_derivative_scale


def kernel_eval(kernel, params, x, y):
    # type: (Kernel, Any, Sequence[float], Sequence[float]) -> float
    """
    Evaluates a kernel at a pair of points.

    Arguments:

        kernel (Kernel): the kernel.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of the kernel.

        x (Sequence[float]): the first point.

        y (Sequence[float]): the second point.

    Returns:

        float: k(x, y).
    """
    zero = (0,) * kernel.dimension
    return kernel_mixed_deriv(kernel, params, x, zero, y, zero)


def kernel_mixed_deriv(kernel, params, x, alpha, y, beta):
    # type: (Kernel, Any, Sequence[float], Sequence[int], Sequence[float], Sequence[int]) -> float
    """
    Computes one mixed derivative of a kernel at a pair of points.

    Arguments:

        kernel (Kernel): the kernel.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of the kernel.

        x (Sequence[float]): the first point.

        alpha (Sequence[int]): the derivative orders in the first argument.

        y (Sequence[float]): the second point.

        beta (Sequence[int]): the derivative orders in the second argument.

    Returns:

        float: d^alpha_x d^beta_y k(x, y).

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilUnsupportedOrderError`: if alpha or
            beta has an order larger than 2.
    """
    blocks = derivative_blocks(kernel, params, [x], [y], [(alpha, beta)])
    return float(list(blocks.values())[0][0, 0])


def kernel_param_tangent(kernel, params, direction, x, alpha, y, beta):
    # type: (Kernel, Any, numpy.ndarray, Sequence[float], Sequence[int], Sequence[float], Sequence[int]) -> float
    """
    Directional hyperparameter derivative of one mixed kernel derivative.

    Arguments:

        kernel (Kernel): the kernel.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of the kernel.

        direction (numpy.ndarray): the direction in the unconstrained hyperparameter
            space.

        x (Sequence[float]): the first point.

        alpha (Sequence[int]): the derivative orders in the first argument.

        y (Sequence[float]): the second point.

        beta (Sequence[int]): the derivative orders in the second argument.

    Returns:

        float: the derivative of d^alpha_x d^beta_y k(x, y) along the direction.
    """
    blocks = tangent_blocks(
        kernel, params, [x], [y], [(alpha, beta)], numpy.atleast_2d(raw_values(direction))
    )
    return float(list(blocks.values())[0][1][0, 0, 0])


def kernel_param_vjp(kernel, params, x, alpha, y, beta, weight):
    # type: (Kernel, Any, Sequence[float], Sequence[int], Sequence[float], Sequence[int], float) -> numpy.ndarray
    """
    Weighted hyperparameter gradient of one mixed kernel derivative.

    Arguments:

        kernel (Kernel): the kernel.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of the kernel.

        x (Sequence[float]): the first point.

        alpha (Sequence[int]): the derivative orders in the first argument.

        y (Sequence[float]): the second point.

        beta (Sequence[int]): the derivative orders in the second argument.

        weight (float): the cotangent of the derivative.

    Returns:

        numpy.ndarray: weight times the gradient of d^alpha_x d^beta_y k(x, y) with
        respect to the unconstrained hyperparameters.
    """
    return vjp_blocks(
        kernel, params, [x], [y], {(tuple(alpha), tuple(beta)): numpy.array([[weight]])}
    )


def lengthscale_field(kernel, params, points):
    # type: (Kernel, Any, numpy.ndarray) -> numpy.ndarray
    """
    Evaluates the lengthscale field of a Gibbs kernel.

    Arguments:

        kernel (Kernel): the kernel.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of the kernel.

        points (numpy.ndarray): a point, shape (d,), or points, shape (n, d).

    Returns:

        numpy.ndarray: the lengthscales, shape (outputs,) for one point or
        (n, outputs) for several points.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilVariantMismatchError`: if the kernel
            is not a Gibbs kernel.
    """
    if not isinstance(kernel, GibbsMlp):
        raise exceptions.KerbilVariantMismatchError(
            "Kernel variant {0} has no lengthscale field.".format(kernel.variant)
        )
    points = numpy.asarray(points, dtype=numpy.float64)
    field = kernel.lengthscales(raw_values(params), points)
    return field[0] if points.ndim == 1 else field


def softplus_inverse(value):
    # type: (float) -> float
    """
    Returns the input at which the softplus function takes a given positive value.
    """
    return float(value + numpy.log(-special.expm1(-value)))
