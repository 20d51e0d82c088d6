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
KerBil named tuples.

This module contains a collection of named tuples used throughout the KerBil
framework.
"""
from __future__ import absolute_import, division, print_function

import collections


Face = collections.namedtuple("Face", ["axis", "value", "tag"])
"""
A face of an axis-aligned box.

Arguments:

    axis (int): the coordinate that is constant on the face.

    value (float): the value of that coordinate on the face.

    tag (str): the kind of condition imposed on the face ('boundary' or 'initial').
"""


ParamSlot = collections.namedtuple(
    "ParamSlot", ["name", "start", "shape", "transform"]
)
"""
Location of a named kernel parameter inside a raw parameter vector.

Arguments:

    name (str): the name of the parameter.

    start (int): the index of the first raw entry of the parameter.

    shape (Tuple[int, ...]): the shape of the parameter.

    transform (str): 'exp' for positive parameters stored as logarithms, 'identity'
        for free parameters.
"""


DiffFunctional = collections.namedtuple(
    "DiffFunctional", ["component", "point", "terms"]
)
"""
A linear combination of partial derivatives evaluated at a point.

Arguments:

    component (int): the index of the GP component the functional acts on.

    point (Tuple[float, ...]): the evaluation point.

    terms (Tuple[Tuple[Tuple[int, ...], float], ...]): pairs of multi-index and
        coefficient.
"""


FunctionalBlock = collections.namedtuple(
    "FunctionalBlock", ["tag", "points", "parts"]
)
"""
A batch of linear functionals sharing the same structure.

Every row of the block is a sum of differential functionals, one per part, all
evaluated at the same point.

Arguments:

    tag (str): the kind of rows in the block (e.g. 'interior', 'boundary').

    points (numpy.ndarray): the evaluation points, shape (n, d).

    parts (Tuple[BlockPart, ...]): one entry per GP component the rows act on.
"""


BlockPart = collections.namedtuple(
    "BlockPart", ["component", "alphas", "coefficients"]
)
"""
The part of a functional block acting on one GP component.

Arguments:

    component (int): the index of the GP component.

    alphas (Tuple[Tuple[int, ...], ...]): the multi-indices of the derivatives.

    coefficients (numpy.ndarray): the coefficient of each derivative at each row,
        shape (n, len(alphas)).
"""


LinearizedEquation = collections.namedtuple(
    "LinearizedEquation", ["functional", "rhs"]
)
"""
One linearized equation at one point.

Arguments:

    functional (Tuple[DiffFunctional, ...]): the linearized operator at the point,
        one differential functional per GP component.

    rhs (float): the right-hand side.
"""


StateFeatures = collections.namedtuple("StateFeatures", ["points", "values"])
"""
Values and partial derivatives of a state at a set of points.

Arguments:

    points (numpy.ndarray): the points, shape (n, d).

    values (Dict[str, Dict[Tuple[int, ...], numpy.ndarray]]): for each component
        name, the value of each required partial derivative at the points.
"""


BoundaryCondition = collections.namedtuple(
    "BoundaryCondition", ["tag", "component", "terms", "value"]
)
"""
A linear condition imposed on the faces with a given tag.

Arguments:

    tag (str): the tag of the faces where the condition holds.

    component (str): the name of the constrained component.

    terms (Tuple[Tuple[Tuple[int, ...], float], ...]): the differential operator.

    value (Callable[[numpy.ndarray], numpy.ndarray]): the imposed value at the
        points.
"""


CollocationLayout = collections.namedtuple(
    "CollocationLayout",
    [
        "interior",
        "boundary",
        "boundary_tags",
        "validation_interior",
        "validation_boundary",
        "validation_boundary_tags",
    ],
)
"""
The point sets of a run.

Arguments:

    interior (numpy.ndarray): collocation points in the domain, shape (n, d).

    boundary (numpy.ndarray): collocation points on the boundary and initial faces.

    boundary_tags (numpy.ndarray): the face tag of each boundary point.

    validation_interior (numpy.ndarray): validation points in the domain.

    validation_boundary (numpy.ndarray): validation points on the faces.

    validation_boundary_tags (numpy.ndarray): the face tag of each validation
        boundary point.
"""


Observations = collections.namedtuple(
    "Observations", ["points", "values", "truth", "noise_std", "seed"]
)
"""
Noisy point observations of the state.

Arguments:

    points (numpy.ndarray): the observation locations, shape (L, d).

    values (numpy.ndarray): the noisy observed values.

    truth (numpy.ndarray): the noise-free reference values.

    noise_std (float): the standard deviation of the added noise.

    seed (int): the seed of the noise generator.
"""


ErrorMetrics = collections.namedtuple("ErrorMetrics", ["l2", "linf", "rel_l2"])
"""
Errors of a state against a reference field.

Arguments:

    l2 (float): root mean square error over the evaluation grid.

    linf (float): maximum absolute error over the evaluation grid.

    rel_l2 (float): l2 error divided by the root mean square of the reference.
"""


AdamState = collections.namedtuple(
    "AdamState", ["first_moment", "second_moment", "step"]
)
"""
Internal state of the Adam optimizer.

Arguments:

    first_moment (numpy.ndarray): the running mean of the gradients.

    second_moment (numpy.ndarray): the running mean of the squared gradients.

    step (int): the number of updates applied so far.
"""


IterationRecord = collections.namedtuple(
    "IterationRecord",
    [
        "index",
        "theta",
        "raw",
        "linearized_loss",
        "validation_loss",
        "adam_steps",
        "skipped_steps",
        "rejected_steps",
        "constraint_residual",
        "seconds",
    ],
)
"""
Diagnostics of one Gauss-Newton iteration of a bilevel run.

Arguments:

    index (int): the Gauss-Newton iteration.

    theta (Dict[str, List[float]]): the constrained hyperparameters after the
        iteration.

    raw (List[float]): the unconstrained hyperparameters after the iteration.

    linearized_loss (float): the mini-batch linearized loss of the last accepted
        Adam step.

    validation_loss (float): the nonlinear residual loss of the new state on the full
        validation set.

    adam_steps (int): the number of applied Adam updates.

    skipped_steps (int): the number of updates skipped for non-finite gradients.

    rejected_steps (int): the number of updates skipped for rejected
        hyperparameters.

    constraint_residual (float): the largest residual of the linearized
        constraints satisfied by the new state.

    seconds (float): the wall-clock duration of the iteration.
"""


RunConfig = collections.namedtuple(
    "RunConfig",
    [
        "mode",
        "gn_iters",
        "adam_steps",
        "learning_rate",
        "beta1",
        "beta2",
        "epsilon",
        "batch_interior",
        "batch_boundary",
        "boundary_weight",
        "data_weight",
        "nugget",
        "regularization",
        "regularizer",
        "tolerance",
        "convergence_metric",
        "gradient",
        "fd_step",
        "max_rejections",
    ],
)
"""
Settings of a bilevel hyperparameter-learning run.

Arguments:

    mode (str): 'dto' (validation points fixed for the whole run) or 'otd'
        (validation points resampled at every Gauss-Newton iteration).

    gn_iters (int): the number of Gauss-Newton iterations.

    adam_steps (int): the number of Adam updates per Gauss-Newton iteration.

    learning_rate (float): the Adam step size.

    beta1 (float): the Adam first-moment decay rate.

    beta2 (float): the Adam second-moment decay rate.

    epsilon (float): the Adam denominator offset.

    batch_interior (int): the number of interior validation points per update.

    batch_boundary (int): the number of boundary validation points per update.

    boundary_weight (float): the weight of the boundary and initial rows in the
        validation loss.

    data_weight (float): the weight of each observation misfit in the validation
        loss.

    nugget (float): the diagonal regularization of the Gram matrices.

    regularization (float): the weight of the hyperparameter penalty.

    regularizer (str): the kind of hyperparameter penalty ('l2' or 'l1').

    tolerance (float): the early-stopping tolerance (0 runs all the iterations).

    convergence_metric (str): 'theta_change' or 'loss_change'.

    gradient (str): the hypergradient mode ('tangent', 'adjoint' or 'fd').

    fd_step (float): the step of the finite-difference hypergradient.

    max_rejections (int): the number of consecutive rejected updates after which
        the run is aborted.
"""


RefinementStudy = collections.namedtuple(
    "RefinementStudy", ["resolutions", "changes", "orders"]
)
"""
Self-convergence of a reference solver under grid refinement.

Arguments:

    resolutions (List[int]): the resolutions, in increasing order.

    changes (List[float]): the largest relative change of the field between each
        pair of successive resolutions, at the nodes they share.

    orders (List[float]): the observed orders, log2 of the ratio of successive
        changes.
"""
