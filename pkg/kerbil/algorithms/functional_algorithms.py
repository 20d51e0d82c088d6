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
Algorithms for linear functionals.

This module contains the sets of differential functionals that define a collocation
problem and the functions that apply them to the kernels: Gram matrices, cross
matrices between two sets of functionals, and the hyperparameter derivatives of
both (as products with directions or as pulled-back cotangents).

Rows of a functional set are grouped in blocks. All the rows of a block share the
same structure (the same GP components and the same partial derivatives) and only
differ in their evaluation points and coefficients, so that whole blocks can be
processed at once.
"""
from __future__ import absolute_import, division, print_function

import itertools
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union  # pylint: disable=unused-import

import numpy
from scipy import spatial

from kerbil.algorithms import kernel_algorithms
from kerbil.utils import exceptions, named_tuples


_DUPLICATE_DISTANCE = 1e-12
# Target points per kernel call when evaluating an expansion.
_EVALUATION_ROWS = 2048


class FunctionalSet(object):
    """
    See documentation of the '__init__' function.
    """

    def __init__(self, blocks, num_components, check_duplicates=True):
        # type: (Sequence[named_tuples.FunctionalBlock], int, bool) -> None
        """
        An ordered set of linear functionals.

        The order of the rows is the order of the blocks, and within each block the
        order of the points. Row indices are the coordinates of the right-hand sides
        and of the representer coefficients.

        Arguments:

            blocks (Sequence[:class:`~kerbil.utils.named_tuples.FunctionalBlock`]):
                the blocks of rows.

            num_components (int): the number of GP components.

            check_duplicates (bool): whether to reject blocks with repeated points.
                Defaults to True.

        Raises:

            :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the
                shapes of the points and of the coefficients do not agree.

            :class:`~kerbil.utils.exceptions.KerbilUnsupportedOrderError`: if a
                derivative has an order larger than 2.

            :class:`~kerbil.utils.exceptions.KerbilDuplicatePointError`: if two
                rows of the same block are evaluated at the same point.
        """
        self.num_components = num_components
        self.blocks = tuple(
            _checked_block(block, num_components, check_duplicates) for block in blocks
        )
        dimensions = set(block.points.shape[1] for block in self.blocks)
        if len(dimensions) > 1:
            raise exceptions.KerbilDimensionMismatchError(
                "Functional blocks have points of different dimensions."
            )
        self.dimension = dimensions.pop() if dimensions else 0
        self.offsets = [0]  # type: List[int]
        for block in self.blocks:
            self.offsets.append(self.offsets[-1] + block.points.shape[0])
        self.size = self.offsets[-1]

    def __len__(self):
        # type: () -> int
        return self.size

    def block_slice(self, index):
        # type: (int) -> slice
        """
        Returns the rows of a block.
        """
        return slice(self.offsets[index], self.offsets[index + 1])

    def row_tags(self):
        # type: () -> numpy.ndarray
        """
        Returns the tag of the block of each row.
        """
        if not self.blocks:
            return numpy.array([], dtype=object)
        return numpy.concatenate(
            [
                numpy.array([block.tag] * block.points.shape[0], dtype=object)
                for block in self.blocks
            ]
        )

    def row(self, index):
        # type: (int) -> Tuple[named_tuples.DiffFunctional, ...]
        """
        Returns one row as a sum of differential functionals.

        Arguments:

            index (int): the row index.

        Returns:

            Tuple[:class:`~kerbil.utils.named_tuples.DiffFunctional`, ...]: one
            differential functional per GP component the row acts on.
        """
        if index < 0 or index >= self.size:
            raise IndexError("Row {0} of a set of {1} functionals.".format(index, self.size))
        block_index = int(numpy.searchsorted(self.offsets, index, side="right")) - 1
        block = self.blocks[block_index]
        local = index - self.offsets[block_index]
        point = tuple(float(coordinate) for coordinate in block.points[local])
        return tuple(
            named_tuples.DiffFunctional(
                component=part.component,
                point=point,
                terms=tuple(
                    (alpha, float(part.coefficients[local, column]))
                    for column, alpha in enumerate(part.alphas)
                ),
            )
            for part in block.parts
        )

    def subset(self, indices):
        # type: (Sequence[int]) -> FunctionalSet
        """
        Returns the functionals at a set of row indices, in increasing row order.

        Arguments:

            indices (Sequence[int]): the row indices.

        Returns:

            FunctionalSet: the selected rows, with the block structure preserved.
        """
        indices = numpy.unique(numpy.asarray(indices, dtype=numpy.int64))
        blocks = []
        for block_index, block in enumerate(self.blocks):
            start, stop = self.offsets[block_index], self.offsets[block_index + 1]
            local = indices[(indices >= start) & (indices < stop)] - start
            if local.size == 0:
                continue
            blocks.append(
                named_tuples.FunctionalBlock(
                    tag=block.tag,
                    points=block.points[local],
                    parts=tuple(
                        part._replace(coefficients=part.coefficients[local])
                        for part in block.parts
                    ),
                )
            )

        return FunctionalSet(blocks, self.num_components, check_duplicates=False)

    @classmethod
    def from_functionals(cls, functionals, num_components, tag="functional"):
        # type: (Sequence[Any], int, str) -> FunctionalSet
        """
        Creates a set from single rows.

        Consecutive rows with the same structure are grouped in one block.

        Arguments:

            functionals (Sequence[Any]): the rows, each either a
                :class:`~kerbil.utils.named_tuples.DiffFunctional` or a tuple of
                differential functionals on distinct components at the same point.

            num_components (int): the number of GP components.

            tag (str): the tag of the blocks. Defaults to 'functional'.

        Returns:

            FunctionalSet: the functionals.
        """
        blocks = []  # type: List[named_tuples.FunctionalBlock]
        for _, group in itertools.groupby(
            (_normalized_row(functional) for functional in functionals),
            key=lambda row: row[0],
        ):
            rows = list(group)
            structure = rows[0][0]
            points = numpy.array([row[1] for row in rows], dtype=numpy.float64)
            parts = []
            for part_index, (component, alphas) in enumerate(structure):
                parts.append(
                    named_tuples.BlockPart(
                        component=component,
                        alphas=alphas,
                        coefficients=numpy.array(
                            [row[2][part_index] for row in rows], dtype=numpy.float64
                        ),
                    )
                )
            blocks.append(
                named_tuples.FunctionalBlock(tag=tag, points=points, parts=tuple(parts))
            )

        return cls(blocks, num_components)


def concatenate(sets):
    # type: (Sequence[FunctionalSet]) -> FunctionalSet
    """
    Concatenates functional sets, keeping the order of their rows.

    Raises:

        :class:`~kerbil.utils.exceptions.KerbilDimensionMismatchError`: if the sets
            do not have the same number of GP components.
    """
    components = set(functional_set.num_components for functional_set in sets)
    if len(components) != 1:
        raise exceptions.KerbilDimensionMismatchError(
            "Cannot concatenate sets with different numbers of GP components."
        )
    return FunctionalSet(
        [block for functional_set in sets for block in functional_set.blocks],
        components.pop(),
        check_duplicates=False,
    )


def _normalized_row(functional):
    # type: (Any) -> Tuple[Tuple[Tuple[int, Tuple[Tuple[int, ...], ...]], ...], Tuple[float, ...], List[List[float]]]
    if isinstance(functional, named_tuples.DiffFunctional):
        functional = (functional,)
    point = tuple(float(coordinate) for coordinate in functional[0].point)
    structure = []
    coefficients = []
    for part in sorted(functional, key=lambda entry: entry.component):
        if tuple(float(coordinate) for coordinate in part.point) != point:
            raise exceptions.KerbilDimensionMismatchError(
                "All the parts of a functional must act at the same point."
            )
        if not part.terms:
            raise exceptions.KerbilDimensionMismatchError(
                "A differential functional needs at least one term."
            )
        structure.append(
            (
                int(part.component),
                tuple(tuple(int(order) for order in alpha) for alpha, _ in part.terms),
            )
        )
        coefficients.append([float(coefficient) for _, coefficient in part.terms])

    return tuple(structure), point, coefficients


def _checked_block(block, num_components, check_duplicates):
    # type: (named_tuples.FunctionalBlock, int, bool) -> named_tuples.FunctionalBlock
    points = numpy.asarray(block.points, dtype=numpy.float64)
    if points.ndim == 1:
        points = points[None, :]
    num_points = points.shape[0]
    seen = set()
    parts = []
    for part in block.parts:
        if part.component < 0 or part.component >= num_components:
            raise exceptions.KerbilDimensionMismatchError(
                "Functional on component {0} of a problem with {1} components.".format(
                    part.component, num_components
                )
            )
        if part.component in seen:
            raise exceptions.KerbilDimensionMismatchError(
                "Two parts of block {0} act on component {1}.".format(
                    block.tag, part.component
                )
            )
        seen.add(part.component)
        alphas = tuple(tuple(int(order) for order in alpha) for alpha in part.alphas)
        for alpha in alphas:
            if len(alpha) != points.shape[1]:
                raise exceptions.KerbilDimensionMismatchError(
                    "Multi-index {0} for points of dimension {1}.".format(
                        alpha, points.shape[1]
                    )
                )
            if min(alpha) < 0 or sum(alpha) > kernel_algorithms.MAX_ORDER:
                raise exceptions.KerbilUnsupportedOrderError(
                    "Derivative order {0} is not supported.".format(alpha)
                )
        coefficients = numpy.asarray(part.coefficients, dtype=numpy.float64)
        if coefficients.ndim == 1 and len(alphas) == 1:
            coefficients = coefficients[:, None]
        if coefficients.shape != (num_points, len(alphas)):
            raise exceptions.KerbilDimensionMismatchError(
                "Block {0} has coefficients of shape {1}, expected {2}.".format(
                    block.tag, coefficients.shape, (num_points, len(alphas))
                )
            )
        if not numpy.all(numpy.isfinite(coefficients)):
            raise exceptions.KerbilDimensionMismatchError(
                "Block {0} has non-finite coefficients.".format(block.tag)
            )
        parts.append(
            named_tuples.BlockPart(
                component=int(part.component), alphas=alphas, coefficients=coefficients
            )
        )
    if check_duplicates and num_points > 1:
        duplicates = spatial.cKDTree(points).query_pairs(_DUPLICATE_DISTANCE)
        if duplicates:
            first, second = sorted(duplicates)[0]
            raise exceptions.KerbilDuplicatePointError(
                "Rows {0} and {1} of block {2} share the point {3}.".format(
                    first, second, block.tag, points[first].tolist()
                )
            )

    return named_tuples.FunctionalBlock(tag=block.tag, points=points, parts=tuple(parts))


def _active_terms(part):
    # type: (named_tuples.BlockPart) -> List[Tuple[Tuple[int, ...], numpy.ndarray]]
    # Terms whose coefficient vanishes at every row are skipped.
    return [
        (alpha, part.coefficients[:, column])
        for column, alpha in enumerate(part.alphas)
        if numpy.any(part.coefficients[:, column] != 0.0)
    ]


def _matching_parts(block_a, block_b):
    # type: (named_tuples.FunctionalBlock, named_tuples.FunctionalBlock) -> List[Tuple[int, List[Any], List[Any]]]
    matches = []
    for part_a in block_a.parts:
        for part_b in block_b.parts:
            if part_a.component != part_b.component:
                continue
            terms_a = _active_terms(part_a)
            terms_b = _active_terms(part_b)
            if terms_a and terms_b:
                matches.append((part_a.component, terms_a, terms_b))
    return matches


def _block_values(kernels, raw, block_a, block_b):
    # type: (kernel_algorithms.ComponentKernels, numpy.ndarray, named_tuples.FunctionalBlock, named_tuples.FunctionalBlock) -> numpy.ndarray
    values = numpy.zeros((block_a.points.shape[0], block_b.points.shape[0]))
    for component, terms_a, terms_b in _matching_parts(block_a, block_b):
        pairs = [(alpha, beta) for alpha, _ in terms_a for beta, _ in terms_b]
        derivatives = kernel_algorithms.derivative_blocks(
            kernels.kernels[component],
            raw[kernels.component_slice(component)],
            block_a.points,
            block_b.points,
            pairs,
        )
        for alpha, coefficients_a in terms_a:
            for beta, coefficients_b in terms_b:
                values += (
                    coefficients_a[:, None]
                    * derivatives[(alpha, beta)]
                    * coefficients_b[None, :]
                )
    return values


def _block_tangents(kernels, raw, block_a, block_b, directions):
    # type: (kernel_algorithms.ComponentKernels, numpy.ndarray, named_tuples.FunctionalBlock, named_tuples.FunctionalBlock, numpy.ndarray) -> Optional[numpy.ndarray]
    tangents = None  # type: Optional[numpy.ndarray]
    for component, terms_a, terms_b in _matching_parts(block_a, block_b):
        component_slice = kernels.component_slice(component)
        component_directions = directions[:, component_slice]
        if not numpy.any(component_directions != 0.0):
            continue
        pairs = [(alpha, beta) for alpha, _ in terms_a for beta, _ in terms_b]
        derivatives = kernel_algorithms.tangent_blocks(
            kernels.kernels[component],
            raw[component_slice],
            block_a.points,
            block_b.points,
            pairs,
            component_directions,
        )
        if tangents is None:
            tangents = numpy.zeros(
                (directions.shape[0], block_a.points.shape[0], block_b.points.shape[0])
            )
        for alpha, coefficients_a in terms_a:
            for beta, coefficients_b in terms_b:
                tangents += (
                    coefficients_a[None, :, None]
                    * derivatives[(alpha, beta)][1]
                    * coefficients_b[None, None, :]
                )
    return tangents


def _accumulate_block_vjp(kernels, raw, block_a, block_b, seed, gradient):
    # type: (kernel_algorithms.ComponentKernels, numpy.ndarray, named_tuples.FunctionalBlock, named_tuples.FunctionalBlock, numpy.ndarray, numpy.ndarray) -> None
    if not numpy.any(seed != 0.0):
        return
    for component, terms_a, terms_b in _matching_parts(block_a, block_b):
        component_slice = kernels.component_slice(component)
        seeds = {}  # type: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], numpy.ndarray]
        for alpha, coefficients_a in terms_a:
            for beta, coefficients_b in terms_b:
                seeds[(alpha, beta)] = (
                    coefficients_a[:, None] * seed * coefficients_b[None, :]
                )
        gradient[component_slice] += kernel_algorithms.vjp_blocks(
            kernels.kernels[component],
            raw[component_slice],
            block_a.points,
            block_b.points,
            seeds,
        )


def gram(kernels, params, functionals):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet) -> numpy.ndarray
    """
    Computes the Gram matrix of a set of functionals.

    Entry (i, j) is the kernel acted on by functional i in its first argument and by
    functional j in its second argument. Functionals on different GP components do
    not interact, so the matrix is block-diagonal across components.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        functionals (FunctionalSet): the functionals.

    Returns:

        numpy.ndarray: the symmetric Gram matrix, shape (M, M).
    """
    raw = kernel_algorithms.raw_values(params)
    matrix = numpy.zeros((functionals.size, functionals.size))
    for index_a, block_a in enumerate(functionals.blocks):
        rows = functionals.block_slice(index_a)
        for index_b in range(index_a, len(functionals.blocks)):
            columns = functionals.block_slice(index_b)
            values = _block_values(kernels, raw, block_a, functionals.blocks[index_b])
            matrix[rows, columns] = values
            if index_b != index_a:
                matrix[columns, rows] = values.T

    return 0.5 * (matrix + matrix.T)


def cross_matrix(kernels, params, targets, functionals):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, FunctionalSet) -> numpy.ndarray
    """
    Computes the kernel acted on by two sets of functionals.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        targets (FunctionalSet): the functionals acting on the first argument.

        functionals (FunctionalSet): the functionals acting on the second argument.

    Returns:

        numpy.ndarray: the cross matrix, shape (len(targets), len(functionals)).
    """
    raw = kernel_algorithms.raw_values(params)
    matrix = numpy.zeros((targets.size, functionals.size))
    for index_a, block_a in enumerate(targets.blocks):
        rows = targets.block_slice(index_a)
        for index_b, block_b in enumerate(functionals.blocks):
            matrix[rows, functionals.block_slice(index_b)] = _block_values(
                kernels, raw, block_a, block_b
            )

    return matrix


def apply_to_kernel(kernels, params, first, second):
    # type: (kernel_algorithms.ComponentKernels, Any, named_tuples.DiffFunctional, named_tuples.DiffFunctional) -> float
    """
    Applies two differential functionals to the kernel.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        first (:class:`~kerbil.utils.named_tuples.DiffFunctional`): the functional
            acting on the first kernel argument.

        second (:class:`~kerbil.utils.named_tuples.DiffFunctional`): the functional
            acting on the second kernel argument.

    Returns:

        float: the pairing, 0.0 when the functionals act on different components.
    """
    if first.component != second.component:
        return 0.0
    matrix = cross_matrix(
        kernels,
        params,
        FunctionalSet.from_functionals([first], len(kernels.kernels)),
        FunctionalSet.from_functionals([second], len(kernels.kernels)),
    )
    return float(matrix[0, 0])


def cross_row(kernels, params, functional, functionals):
    # type: (kernel_algorithms.ComponentKernels, Any, Any, FunctionalSet) -> numpy.ndarray
    """
    Applies one functional and every functional of a set to the kernel.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        functional (Any): a differential functional, or a tuple of differential
            functionals on distinct components at the same point.

        functionals (FunctionalSet): the set.

    Returns:

        numpy.ndarray: the row, shape (len(functionals),).
    """
    target = FunctionalSet.from_functionals([functional], functionals.num_components)
    return cross_matrix(kernels, params, target, functionals)[0]


def _as_directions(directions, num_params):
    # type: (numpy.ndarray, int) -> numpy.ndarray
    directions = numpy.atleast_2d(numpy.asarray(directions, dtype=numpy.float64))
    if directions.shape[1] != num_params:
        raise exceptions.KerbilDimensionMismatchError(
            "Directions of size {0} for {1} hyperparameters.".format(
                directions.shape[1], num_params
            )
        )
    return directions


def gram_tangent_products(kernels, params, functionals, directions, vector):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, numpy.ndarray, numpy.ndarray) -> numpy.ndarray
    """
    Multiplies the directional derivatives of a Gram matrix with a vector.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        functionals (FunctionalSet): the functionals.

        directions (numpy.ndarray): directions in the unconstrained hyperparameter
            space, shape (P, num_params).

        vector (numpy.ndarray): the vector, shape (M,).

    Returns:

        numpy.ndarray: the products dG_p v, shape (P, M).
    """
    raw = kernel_algorithms.raw_values(params)
    directions = _as_directions(directions, kernels.num_params)
    vector = numpy.asarray(vector, dtype=numpy.float64)
    products = numpy.zeros((directions.shape[0], functionals.size))
    for index_a, block_a in enumerate(functionals.blocks):
        rows = functionals.block_slice(index_a)
        for index_b in range(index_a, len(functionals.blocks)):
            columns = functionals.block_slice(index_b)
            tangents = _block_tangents(
                kernels, raw, block_a, functionals.blocks[index_b], directions
            )
            if tangents is None:
                continue
            if index_a == index_b:
                products[:, rows] += 0.5 * (
                    numpy.einsum("pab,b->pa", tangents, vector[columns])
                    + numpy.einsum("pba,b->pa", tangents, vector[columns])
                )
            else:
                products[:, rows] += numpy.einsum("pab,b->pa", tangents, vector[columns])
                products[:, columns] += numpy.einsum("pab,a->pb", tangents, vector[rows])

    return products


def cross_tangent_products(kernels, params, targets, functionals, directions, vector):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, FunctionalSet, numpy.ndarray, numpy.ndarray) -> numpy.ndarray
    """
    Multiplies the directional derivatives of a cross matrix with a vector.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        targets (FunctionalSet): the functionals acting on the first argument.

        functionals (FunctionalSet): the functionals acting on the second argument.

        directions (numpy.ndarray): directions in the unconstrained hyperparameter
            space, shape (P, num_params).

        vector (numpy.ndarray): the vector, shape (len(functionals),).

    Returns:

        numpy.ndarray: the products dV_p v, shape (P, len(targets)).
    """
    raw = kernel_algorithms.raw_values(params)
    directions = _as_directions(directions, kernels.num_params)
    vector = numpy.asarray(vector, dtype=numpy.float64)
    products = numpy.zeros((directions.shape[0], targets.size))
    for index_a, block_a in enumerate(targets.blocks):
        rows = targets.block_slice(index_a)
        for index_b, block_b in enumerate(functionals.blocks):
            tangents = _block_tangents(kernels, raw, block_a, block_b, directions)
            if tangents is not None:
                products[:, rows] += numpy.einsum(
                    "pab,b->pa", tangents, vector[functionals.block_slice(index_b)]
                )

    return products


def gram_vjp(kernels, params, functionals, cotangent):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, numpy.ndarray) -> numpy.ndarray
    """
    Pulls back a cotangent of a Gram matrix to the hyperparameters.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        functionals (FunctionalSet): the functionals.

        cotangent (numpy.ndarray): the cotangent of the Gram matrix, shape (M, M).

    Returns:

        numpy.ndarray: the gradient of <cotangent, G> with respect to the
        unconstrained hyperparameters.
    """
    raw = kernel_algorithms.raw_values(params)
    cotangent = numpy.asarray(cotangent, dtype=numpy.float64)
    symmetric = 0.5 * (cotangent + cotangent.T)
    gradient = numpy.zeros(kernels.num_params)
    for index_a, block_a in enumerate(functionals.blocks):
        rows = functionals.block_slice(index_a)
        for index_b in range(index_a, len(functionals.blocks)):
            # The block below the diagonal mirrors the one above it.
            weight = 1.0 if index_a == index_b else 2.0
            _accumulate_block_vjp(
                kernels,
                raw,
                block_a,
                functionals.blocks[index_b],
                weight * symmetric[rows, functionals.block_slice(index_b)],
                gradient,
            )

    return gradient


def cross_vjp(kernels, params, targets, functionals, cotangent):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, FunctionalSet, numpy.ndarray) -> numpy.ndarray
    """
    Pulls back a cotangent of a cross matrix to the hyperparameters.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        targets (FunctionalSet): the functionals acting on the first argument.

        functionals (FunctionalSet): the functionals acting on the second argument.

        cotangent (numpy.ndarray): the cotangent of the cross matrix, shape
            (len(targets), len(functionals)).

    Returns:

        numpy.ndarray: the gradient of <cotangent, V> with respect to the
        unconstrained hyperparameters.
    """
    raw = kernel_algorithms.raw_values(params)
    cotangent = numpy.asarray(cotangent, dtype=numpy.float64)
    gradient = numpy.zeros(kernels.num_params)
    for index_a, block_a in enumerate(targets.blocks):
        rows = targets.block_slice(index_a)
        for index_b, block_b in enumerate(functionals.blocks):
            _accumulate_block_vjp(
                kernels,
                raw,
                block_a,
                block_b,
                cotangent[rows, functionals.block_slice(index_b)],
                gradient,
            )

    return gradient


def evaluate_derivatives(kernels, params, functionals, coefficients, points, component, alphas):
    # type: (kernel_algorithms.ComponentKernels, Any, FunctionalSet, numpy.ndarray, numpy.ndarray, int, Sequence[Tuple[int, ...]]) -> Dict[Tuple[int, ...], numpy.ndarray]
    """
    Evaluates partial derivatives of one component of a kernel expansion.

    The expansion is the function whose value on the functional set's component is
    the sum of the kernel, acted on by each functional, weighted by the
    coefficients.

    Arguments:

        kernels (:class:`~kerbil.algorithms.kernel_algorithms.ComponentKernels`):
            the kernels of the GP components.

        params (Union[ParamVector, numpy.ndarray]): the unconstrained
            hyperparameters of all the components.

        functionals (FunctionalSet): the functionals of the expansion.

        coefficients (numpy.ndarray): the coefficients of the expansion, shape (M,).

        points (numpy.ndarray): the evaluation points, shape (n, d).

        component (int): the component to evaluate.

        alphas (Sequence[Tuple[int, ...]]): the partial derivatives to evaluate.

    Returns:

        Dict[Tuple[int, ...], numpy.ndarray]: the values of each partial derivative
        at the points, shape (n,).
    """
    raw = kernel_algorithms.raw_values(params)
    points = numpy.asarray(points, dtype=numpy.float64)
    if points.ndim == 1:
        points = points[None, :]
    alphas = [tuple(int(order) for order in alpha) for alpha in alphas]
    values = dict((alpha, numpy.zeros(points.shape[0])) for alpha in alphas)
    kernel = kernels.kernels[component]
    component_raw = raw[kernels.component_slice(component)]
    for block_index, block in enumerate(functionals.blocks):
        weights = coefficients[functionals.block_slice(block_index)]
        for part in block.parts:
            if part.component != component:
                continue
            terms = _active_terms(part)
            if not terms:
                continue
            pairs = [(alpha, beta) for alpha in alphas for beta, _ in terms]
            step = max(1, _EVALUATION_ROWS // max(1, len(pairs)))
            for start in range(0, points.shape[0], step):
                stop = min(start + step, points.shape[0])
                derivatives = kernel_algorithms.derivative_blocks(
                    kernel, component_raw, points[start:stop], block.points, pairs
                )
                for alpha in alphas:
                    for beta, column in terms:
                        values[alpha][start:stop] += derivatives[(alpha, beta)].dot(
                            column * weights
                        )

    return values
