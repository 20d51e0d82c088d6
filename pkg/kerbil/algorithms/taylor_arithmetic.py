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
Truncated multivariate Taylor arithmetic.

This module contains the dual-number engine used to differentiate kernel formulas.
A jet stores the Taylor coefficients of a quantity with respect to a set of
variables (the coordinates of the two kernel arguments and, optionally, directions
in hyperparameter space), truncated to a downward-closed set of monomials. Every
coefficient is a numpy array, broadcast over batches of points, or None when it is
structurally zero.

Jets can be recorded on a tape, so that the gradient of any coefficient of a
result with respect to constant-coefficient leaves (the kernel hyperparameters) can
be computed in reverse mode.
"""
from __future__ import absolute_import, division, print_function

import itertools
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple  # pylint: disable=unused-import

import numpy
from numpy.polynomial import polynomial
from scipy import special


_SPACES = {}  # type: Dict[Tuple[int, frozenset], JetSpace]


class JetSpace(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, num_variables, monomials):
        # type: (int, Sequence[Tuple[int, ...]]) -> None
        """
        A downward-closed set of monomials.

        The monomials are sorted by total degree, so the constant monomial always
        comes first. The multiplication table lists all the pairs of monomials whose
        product is still in the set.

        Arguments:

            num_variables (int): the number of variables.

            monomials (Sequence[Tuple[int, ...]]): the exponent tuples. The set must
                be closed under lowering any exponent.
        """
        self.num_variables = num_variables
        self.monomials = tuple(
            sorted(set(monomials), key=lambda monomial: (sum(monomial), monomial))
        )
        self.index = {
            monomial: position for position, monomial in enumerate(self.monomials)
        }
        self.size = len(self.monomials)
        self.degrees = tuple(sum(monomial) for monomial in self.monomials)
        self.max_degree = max(self.degrees)
        self.mul_table = []  # type: List[Tuple[int, int, int]]
        for first, first_monomial in enumerate(self.monomials):
            for second, second_monomial in enumerate(self.monomials):
                product = tuple(
                    exponent_1 + exponent_2
                    for exponent_1, exponent_2 in zip(first_monomial, second_monomial)
                )
                target = self.index.get(product)
                if target is not None:
                    self.mul_table.append((first, second, target))

    def unit(self, variable):
        # type: (int) -> int
        """
        Returns the position of the degree-one monomial of a variable.

        Raises:

            KeyError: if the space does not contain that monomial.
        """
        return self.index[self._unit_monomial(variable)]

    def unit_position(self, variable):
        # type: (int) -> Optional[int]
        """
        Returns the position of the degree-one monomial of a variable, or None if no
        requested coefficient involves the variable.
        """
        return self.index.get(self._unit_monomial(variable))

    def _unit_monomial(self, variable):
        # type: (int) -> Tuple[int, ...]
        return tuple(
            1 if position == variable else 0 for position in range(self.num_variables)
        )


def jet_space(num_variables, targets):
    # type: (int, Sequence[Tuple[int, ...]]) -> JetSpace
    """
    Returns the smallest jet space containing a set of monomials.

    Spaces are cached, so repeated requests for the same monomials are cheap.

    Arguments:

        num_variables (int): the number of variables.

        targets (Sequence[Tuple[int, ...]]): the exponent tuples whose coefficients
            are needed.

    Returns:

        JetSpace: the downward closure of the target monomials.
    """
    key = (num_variables, frozenset(tuple(target) for target in targets))
    space = _SPACES.get(key)
    if space is None:
        closure = set([(0,) * num_variables])
        for target in key[1]:
            closure.update(
                itertools.product(*[range(exponent + 1) for exponent in target])
            )
        space = JetSpace(num_variables, sorted(closure))
        _SPACES[key] = space

    return space


class Jet(object):
    """
    See documentation of the '__init__' function.
    """

    __slots__ = ("space", "coeffs", "tape", "node")

    def __init__(self, space, coeffs, tape=None, node=None):
        # type: (JetSpace, List[Any], Optional[Tape], Optional[int]) -> None
        """
        A truncated Taylor expansion.

        Arguments:

            space (JetSpace): the monomials of the expansion.

            coeffs (List[Any]): one coefficient per monomial: a float, a numpy array
                or None for a structural zero.

            tape (Optional[Tape]): the tape recording the jet, if any. Defaults to
                None.

            node (Optional[int]): the position of the jet on its tape. Defaults to
                None.
        """
        self.space = space
        self.coeffs = coeffs
        self.tape = tape
        self.node = node

    @property
    def value(self):
        # type: () -> Any
        """
        The constant coefficient.
        """
        return self.coeffs[0]

    def coefficient(self, monomial):
        # type: (Tuple[int, ...]) -> Any
        """
        Returns the coefficient of a monomial (0.0 for a structural zero).

        Arguments:

            monomial (Tuple[int, ...]): the exponents.

        Returns:

            Any: the coefficient.
        """
        value = self.coeffs[self.space.index[tuple(monomial)]]
        return 0.0 if value is None else value

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return mul(self, reciprocal(other))
        return mul(self, 1.0 / other)

    __div__ = __truediv__

    def __rtruediv__(self, other):
        return mul(reciprocal(self), other)

    __rdiv__ = __rtruediv__

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if isinstance(exponent, int) and exponent >= 0:
            return integer_power(self, exponent)
        return power(self, exponent)


class Tape(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self):
        # type: () -> None
        """
        Reverse-mode recording of jet operations.

        Leaves are constant-coefficient jets (typically kernel hyperparameters). Every
        operation involving a recorded jet is recorded too, with a function mapping
        the adjoint of the result to the adjoints of its operands.

        The adjoints of intermediate jets keep one entry per batch element (they are
        never summed down to the shape of a broadcast coefficient). Only the adjoints
        of the leaves are reduced to the shape of their values.
        """
        self._parents = []  # type: List[Optional[Tuple[Jet, ...]]]
        self._backwards = []  # type: List[Optional[Callable[[List[Any]], List[Any]]]]
        self._shapes = []  # type: List[List[Optional[Tuple[int, ...]]]]

    def leaf(self, space, value):
        # type: (JetSpace, Any) -> Jet
        """
        Creates a recorded constant jet.

        Arguments:

            space (JetSpace): the jet space.

            value (Any): the constant coefficient.

        Returns:

            Jet: the leaf.
        """
        jet = Jet(space, [numpy.asarray(value, dtype=numpy.float64)] + [None] * (space.size - 1))
        self._register(jet, None, None)
        return jet

    def _register(self, jet, parents, backward):
        # type: (Jet, Optional[Tuple[Jet, ...]], Optional[Callable[[List[Any]], List[Any]]]) -> None
        jet.tape = self
        jet.node = len(self._parents)
        self._parents.append(parents)
        self._backwards.append(backward)
        self._shapes.append(
            [None if coeff is None else numpy.shape(coeff) for coeff in jet.coeffs]
        )

    def gradients(self, output, seed, leaves):
        # type: (Jet, List[Any], Sequence[Jet]) -> List[numpy.ndarray]
        """
        Pulls back a cotangent on the coefficients of a jet to the leaves.

        Arguments:

            output (Jet): a recorded jet.

            seed (List[Any]): the cotangent of each coefficient of the output (None
                for no contribution).

            leaves (Sequence[Jet]): the leaves whose gradients are needed.

        Returns:

            List[numpy.ndarray]: the gradient of the scalar <seed, output> with
            respect to the constant coefficient of each leaf.
        """
        adjoints = {}  # type: Dict[int, List[Any]]
        if output.tape is self:
            adjoints[output.node] = self._fit(list(seed), output.node)
        for node in range(len(self._parents) - 1, -1, -1):
            parents = self._parents[node]
            if parents is None:
                continue
            cotangent = adjoints.pop(node, None)
            if cotangent is None or all(entry is None for entry in cotangent):
                continue
            for parent, parent_cotangent in zip(
                parents, self._backwards[node](cotangent)
            ):
                if parent_cotangent is None or parent.tape is not self:
                    continue
                fitted = self._fit(parent_cotangent, parent.node)
                current = adjoints.get(parent.node)
                if current is None:
                    adjoints[parent.node] = fitted
                else:
                    adjoints[parent.node] = [
                        _add_coeff(first, second)
                        for first, second in zip(current, fitted)
                    ]
        gradients = []
        for leaf in leaves:
            cotangent = adjoints.get(leaf.node)
            shape = self._shapes[leaf.node][0]
            if cotangent is None or cotangent[0] is None:
                gradients.append(numpy.zeros(shape))
            else:
                gradients.append(numpy.asarray(cotangent[0], dtype=numpy.float64))

        return gradients

    def _fit(self, cotangent, node):
        # type: (List[Any], int) -> List[Any]
        # Structural zeros get no adjoint. Batch axes are only summed at the leaves.
        shapes = self._shapes[node]
        is_leaf = self._parents[node] is None
        fitted = []  # type: List[Any]
        for entry, shape in zip(cotangent, shapes):
            if entry is None or shape is None:
                fitted.append(None)
            elif is_leaf:
                fitted.append(_unbroadcast(entry, shape))
            else:
                fitted.append(numpy.asarray(entry, dtype=numpy.float64))
        return fitted


def _unbroadcast(gradient, shape):
    # type: (Any, Tuple[int, ...]) -> numpy.ndarray
    # Sums a gradient over the axes along which a value of the given shape was
    # broadcast.
    gradient = numpy.asarray(gradient, dtype=numpy.float64)
    if gradient.shape == shape:
        return gradient
    if gradient.ndim < len(shape):
        gradient = gradient.reshape((1,) * (len(shape) - gradient.ndim) + gradient.shape)
    extra = gradient.ndim - len(shape)
    if extra > 0:
        gradient = gradient.sum(axis=tuple(range(extra)))
    axes = tuple(
        axis
        for axis, size in enumerate(shape)
        if size == 1 and gradient.shape[axis] != 1
    )
    if axes:
        gradient = gradient.sum(axis=axes, keepdims=True)
    return gradient


def _add_coeff(first, second):
    # type: (Any, Any) -> Any
    if first is None:
        return second
    if second is None:
        return first
    return first + second


def _scale_coeff(coeff, factor):
    # type: (Any, Any) -> Any
    if coeff is None:
        return None
    return coeff * factor


def _mul_coeffs(space, first, second):
    # type: (JetSpace, List[Any], List[Any]) -> List[Any]
    result = [None] * space.size  # type: List[Any]
    for index_1, index_2, target in space.mul_table:
        coeff_1 = first[index_1]
        if coeff_1 is None:
            continue
        coeff_2 = second[index_2]
        if coeff_2 is None:
            continue
        result[target] = _add_coeff(result[target], coeff_1 * coeff_2)
    return result


def _mul_adjoint(space, factor, cotangent):
    # type: (JetSpace, List[Any], List[Any]) -> List[Any]
    # Adjoint of the linear map b -> factor * b.
    result = [None] * space.size  # type: List[Any]
    for index_1, index_2, target in space.mul_table:
        coeff_1 = factor[index_1]
        if coeff_1 is None:
            continue
        coeff_c = cotangent[target]
        if coeff_c is None:
            continue
        result[index_2] = _add_coeff(result[index_2], coeff_1 * coeff_c)
    return result


def _tape_of(*jets):
    # type: (*Any) -> Optional[Tape]
    for jet in jets:
        if isinstance(jet, Jet) and jet.tape is not None:
            return jet.tape
    return None


def _result(space, coeffs, parents, backward):
    # type: (JetSpace, List[Any], Tuple[Jet, ...], Callable[[List[Any]], List[Any]]) -> Jet
    jet = Jet(space, coeffs)
    tape = _tape_of(*parents)
    if tape is not None:
        tape._register(jet, parents, backward)  # pylint: disable=protected-access
    return jet


def constant(space, value):
    # type: (JetSpace, Any) -> Jet
    """
    Creates a jet with only a constant coefficient.

    Arguments:

        space (JetSpace): the jet space.

        value (Any): the constant coefficient.

    Returns:

        Jet: the constant jet.
    """
    return Jet(space, [value] + [None] * (space.size - 1))


def variable(space, value, variable_index):
    # type: (JetSpace, Any, int) -> Jet
    """
    Creates the jet of an independent variable.

    Arguments:

        space (JetSpace): the jet space.

        value (Any): the value at the expansion point.

        variable_index (int): the index of the variable.

    Returns:

        Jet: the jet value + delta, where delta is the variable's increment. When
        the space has no monomial in the variable, the jet is the constant value.
    """
    coeffs = [value] + [None] * (space.size - 1)  # type: List[Any]
    position = space.unit_position(variable_index)
    if position is not None:
        coeffs[position] = 1.0
    return Jet(space, coeffs)


def add(first, second):
    # type: (Jet, Any) -> Jet
    """
    Adds a jet and a jet or a constant.
    """
    space = first.space
    if not isinstance(second, Jet):
        coeffs = list(first.coeffs)
        coeffs[0] = _add_coeff(coeffs[0], second)
        return _result(space, coeffs, (first,), lambda cotangent: [cotangent])
    coeffs = [
        _add_coeff(coeff_1, coeff_2)
        for coeff_1, coeff_2 in zip(first.coeffs, second.coeffs)
    ]
    return _result(
        space, coeffs, (first, second), lambda cotangent: [cotangent, cotangent]
    )


def neg(jet):
    # type: (Jet) -> Jet
    """
    Negates a jet.
    """
    return _result(
        jet.space,
        [_scale_coeff(coeff, -1.0) for coeff in jet.coeffs],
        (jet,),
        lambda cotangent: [[_scale_coeff(entry, -1.0) for entry in cotangent]],
    )


def sub(first, second):
    # type: (Jet, Any) -> Jet
    """
    Subtracts a jet or a constant from a jet.
    """
    if not isinstance(second, Jet):
        return add(first, -second)
    return add(first, neg(second))


def mul(first, second):
    # type: (Jet, Any) -> Jet
    """
    Multiplies a jet by a jet or by a constant, truncating the product.
    """
    space = first.space
    if not isinstance(second, Jet):
        return _result(
            space,
            [_scale_coeff(coeff, second) for coeff in first.coeffs],
            (first,),
            lambda cotangent: [[_scale_coeff(entry, second) for entry in cotangent]],
        )

    def backward(cotangent):
        # type: (List[Any]) -> List[Any]
        return [
            _mul_adjoint(space, second.coeffs, cotangent)
            if first.tape is not None
            else None,
            _mul_adjoint(space, first.coeffs, cotangent)
            if second.tape is not None
            else None,
        ]

    return _result(
        space, _mul_coeffs(space, first.coeffs, second.coeffs), (first, second), backward
    )


def integer_power(jet, exponent):
    # type: (Jet, int) -> Jet
    """
    Raises a jet to a non-negative integer power by repeated multiplication.
    """
    if exponent == 0:
        return constant(jet.space, 1.0)
    result = jet
    for _ in range(exponent - 1):
        result = mul(result, jet)
    return result


def _compose(space, derivatives, jet):
    # type: (JetSpace, List[Any], Jet) -> List[Any]
    # sum_n f^(n)(a0) / n! * (a - a0)^n, truncated at the degree of the space.
    delta = [None] + list(jet.coeffs[1:])
    result = [None] * space.size  # type: List[Any]
    result[0] = derivatives[0]
    term = delta
    for order in range(1, space.max_degree + 1):
        factor = derivatives[order] / math.factorial(order)
        result = [
            _add_coeff(current, _scale_coeff(entry, factor))
            for current, entry in zip(result, term)
        ]
        if order < space.max_degree:
            term = _mul_coeffs(space, term, delta)
    return result


def unary(jet, derivatives_function):
    # type: (Jet, Callable[[Any, int], List[Any]]) -> Jet
    """
    Applies a smooth scalar function to a jet.

    Arguments:

        jet (Jet): the argument.

        derivatives_function (Callable[[Any, int], List[Any]]): a function returning
            the values of f, f', ..., f^(n) at a point, for a requested n.

    Returns:

        Jet: the jet of f applied to the argument.
    """
    space = jet.space
    derivatives = derivatives_function(jet.coeffs[0], space.max_degree + 1)
    coeffs = _compose(space, derivatives, jet)

    def backward(cotangent):
        # type: (List[Any]) -> List[Any]
        slope = _compose(space, derivatives[1:], jet)
        return [_mul_adjoint(space, slope, cotangent)]

    return _result(space, coeffs, (jet,), backward)


def _exp_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    result = numpy.exp(value)
    return [result] * (order + 1)


def _log_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    derivatives = [numpy.log(value)]
    for index in range(1, order + 1):
        derivatives.append(
            (-1.0) ** (index - 1) * math.factorial(index - 1) / value ** index
        )
    return derivatives


def _sin_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    cycle = [numpy.sin(value), numpy.cos(value)]
    cycle += [-cycle[0], -cycle[1]]
    return [cycle[index % 4] for index in range(order + 1)]


def _cos_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    cycle = [numpy.cos(value), -numpy.sin(value)]
    cycle += [-cycle[0], -cycle[1]]
    return [cycle[index % 4] for index in range(order + 1)]


def _tanh_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    # d^n tanh / dx^n = P_n(tanh x), with P_{n+1} = P_n' * (1 - t^2).
    tanh = numpy.tanh(value)
    derivatives = [tanh]
    poly = numpy.array([0.0, 1.0])
    for _ in range(order):
        poly = polynomial.polymul(polynomial.polyder(poly), [1.0, 0.0, -1.0])
        derivatives.append(polynomial.polyval(tanh, poly))
    return derivatives


def _softplus_derivatives(value, order):
    # type: (Any, int) -> List[Any]
    # With s the logistic function, d^(n+1) softplus / dx^(n+1) = Q_n(s), where
    # Q_0 = s and Q_{n+1} = Q_n' * s (1 - s).
    logistic = special.expit(value)
    derivatives = [numpy.logaddexp(0.0, value)]
    poly = numpy.array([0.0, 1.0])
    for index in range(order):
        if index > 0:
            poly = polynomial.polymul(polynomial.polyder(poly), [0.0, 1.0, -1.0])
        derivatives.append(polynomial.polyval(logistic, poly))
    return derivatives


def _power_derivatives(exponent):
    # type: (float) -> Callable[[Any, int], List[Any]]
    def derivatives_function(value, order):
        # type: (Any, int) -> List[Any]
        derivatives = []
        falling = 1.0
        for index in range(order + 1):
            derivatives.append(falling * numpy.power(value, exponent - index))
            falling *= exponent - index
        return derivatives

    return derivatives_function


def exp(jet):
    # type: (Jet) -> Jet
    """
    Exponential of a jet.
    """
    return unary(jet, _exp_derivatives)


def log(jet):
    # type: (Jet) -> Jet
    """
    Natural logarithm of a jet.
    """
    return unary(jet, _log_derivatives)


def sin(jet):
    # type: (Jet) -> Jet
    """
    Sine of a jet.
    """
    return unary(jet, _sin_derivatives)


def cos(jet):
    # type: (Jet) -> Jet
    """
    Cosine of a jet.
    """
    return unary(jet, _cos_derivatives)


def tanh(jet):
    # type: (Jet) -> Jet
    """
    Hyperbolic tangent of a jet.
    """
    return unary(jet, _tanh_derivatives)


def softplus(jet):
    # type: (Jet) -> Jet
    """
    Softplus, log(1 + exp(x)), of a jet.
    """
    return unary(jet, _softplus_derivatives)


def power(jet, exponent):
    # type: (Jet, float) -> Jet
    """
    Real power of a jet with a positive constant coefficient.
    """
    return unary(jet, _power_derivatives(float(exponent)))


def sqrt(jet):
    # type: (Jet) -> Jet
    """
    Square root of a jet.
    """
    return power(jet, 0.5)


def reciprocal(jet):
    # type: (Jet) -> Jet
    """
    Reciprocal of a jet.
    """
    return power(jet, -1.0)


def stack(jets):
    # type: (Sequence[Jet]) -> Jet
    """
    Stacks jets along a new last axis.

    Structural zeros are filled with zeros when at least one jet has a coefficient
    for the same monomial.
    """
    space = jets[0].space
    coeffs = []  # type: List[Any]
    for position in range(space.size):
        entries = [jet.coeffs[position] for jet in jets]
        if all(entry is None for entry in entries):
            coeffs.append(None)
            continue
        shape = numpy.broadcast(
            *[numpy.asarray(entry) for entry in entries if entry is not None]
        ).shape
        coeffs.append(
            numpy.stack(
                [
                    numpy.zeros(shape)
                    if entry is None
                    else numpy.broadcast_to(numpy.asarray(entry, dtype=numpy.float64), shape)
                    for entry in entries
                ],
                axis=-1,
            )
        )

    def backward(cotangent):
        # type: (List[Any]) -> List[Any]
        return [
            [None if entry is None else entry[..., index] for entry in cotangent]
            for index in range(len(jets))
        ]

    return _result(space, coeffs, tuple(jets), backward)


def take(jet, index):
    # type: (Jet, int) -> Jet
    """
    Selects one entry along the last axis of the coefficients of a jet.
    """
    space = jet.space
    coeffs = [
        None if coeff is None else numpy.asarray(coeff)[..., index]
        for coeff in jet.coeffs
    ]
    sizes = [
        None if coeff is None else numpy.shape(coeff)[-1] for coeff in jet.coeffs
    ]

    def backward(cotangent):
        # type: (List[Any]) -> List[Any]
        result = []  # type: List[Any]
        for entry, size in zip(cotangent, sizes):
            if entry is None or size is None:
                result.append(None)
                continue
            entry = numpy.asarray(entry)
            expanded = numpy.zeros(entry.shape + (size,))
            expanded[..., index] = entry
            result.append(expanded)
        return [result]

    return _result(space, coeffs, (jet,), backward)


def matmul(jet, weights):
    # type: (Jet, Jet) -> Jet
    """
    Contracts the last axis of a jet with a weight-matrix jet.

    Arguments:

        jet (Jet): the input, with coefficients of shape (..., n_in).

        weights (Jet): the weights, with coefficients of shape (n_in, n_out).

    Returns:

        Jet: the product, with coefficients of shape (..., n_out).
    """
    space = jet.space
    coeffs = [None] * space.size  # type: List[Any]
    for index_1, index_2, target in space.mul_table:
        coeff_1 = jet.coeffs[index_1]
        coeff_2 = weights.coeffs[index_2]
        if coeff_1 is None or coeff_2 is None:
            continue
        coeffs[target] = _add_coeff(
            coeffs[target], numpy.matmul(numpy.asarray(coeff_1), coeff_2)
        )

    def backward(cotangent):
        # type: (List[Any]) -> List[Any]
        input_cotangent = [None] * space.size  # type: List[Any]
        weight_cotangent = [None] * space.size  # type: List[Any]
        for index_1, index_2, target in space.mul_table:
            coeff_1 = jet.coeffs[index_1]
            coeff_2 = weights.coeffs[index_2]
            coeff_c = cotangent[target]
            if coeff_1 is None or coeff_2 is None or coeff_c is None:
                continue
            if jet.tape is not None:
                input_cotangent[index_1] = _add_coeff(
                    input_cotangent[index_1], numpy.matmul(coeff_c, coeff_2.T)
                )
            if weights.tape is not None:
                # Contract every leading (batch) axis of the input and of the
                # cotangent.
                coeff_c = numpy.asarray(coeff_c, dtype=numpy.float64)
                num_in, num_out = numpy.shape(coeff_2)
                batch_shape = numpy.broadcast(
                    numpy.empty(numpy.shape(coeff_1)[:-1]),
                    numpy.empty(coeff_c.shape[:-1]),
                ).shape
                inputs = numpy.broadcast_to(
                    numpy.asarray(coeff_1, dtype=numpy.float64), batch_shape + (num_in,)
                ).reshape(-1, num_in)
                outputs = numpy.broadcast_to(coeff_c, batch_shape + (num_out,)).reshape(
                    -1, num_out
                )
                weight_cotangent[index_2] = _add_coeff(
                    weight_cotangent[index_2], inputs.T.dot(outputs)
                )
        return [input_cotangent, weight_cotangent]

    return _result(space, coeffs, (jet, weights), backward)
