""" Pointwise evaluation of coordinate expressions and interpolation into spaces. """

import numpy as np

from shape_tape.forms import FormError, as_expr
from shape_tape.forms.expr import Argument, Coefficient, FacetNormal, iter_nodes

from .assembly import IntegrandEvaluator
from .function import FEFunction


class PointBatch:
    """ Stand-in batch with one entity and no cells: only the spatial coordinate is defined. """

    normals = None

    def __init__(self, points:np.ndarray) -> None:
        self.X = np.asarray(points, dtype=float).reshape(1, -1, 2)

    def basis(self, space):
        raise FormError('Only expressions of the spatial coordinate can be evaluated at points.')


def evaluate_at_points(expr, points:np.ndarray) -> np.ndarray:
    """ Values of an expression of x at each point, shape (n, *value_shape). """
    expr = as_expr(expr)
    for node in iter_nodes(expr):
        if isinstance(node, (Argument, Coefficient, FacetNormal)):
            raise FormError(f'Cannot evaluate {node} at points.')
    batch = PointBatch(points)
    n = batch.X.shape[1]
    values = IntegrandEvaluator(batch)(expr)
    values = np.broadcast_to(values, (1, 1, 1, n) + expr.shape)
    return values.reshape((n,) + expr.shape).copy()


def interpolate(expr, space, name:str=None) -> FEFunction:
    """ Function on <space> whose dofs are the values of <expr> at the dof coordinates. """
    expr = as_expr(expr)
    if expr.shape != space.value_shape:
        raise FormError(f'Cannot interpolate shape {expr.shape} into {space}.')
    values = evaluate_at_points(expr, space.dof_coordinates())
    if expr.shape:
        values = values[np.arange(space.dim), space.dof_components()]
    return FEFunction(space, values, name)
