""" Polynomial degree estimation for choosing quadrature rules. Non-polynomial operators are
    counted as one degree above their argument. """

from functools import singledispatch

from .calculus import is_spatially_constant
from .expr import Argument, Coefficient, Det, Division, Dot, Expr, Grad, Inner, ListTensor, MathFunction, Power, \
    Product, SpatialCoordinate, Sum, Terminal, iter_nodes
from .form import Form

MAX_DEGREE = 8


@singledispatch
def _degree(e:Expr, ops:list) -> int:
    # Indexed, Transpose and Trace keep the degree of their operand.
    return max(ops, default=0)


@_degree.register(Terminal)
def _(e:Expr, ops:list) -> int:
    return 0


@_degree.register(SpatialCoordinate)
def _(e:Expr, ops:list) -> int:
    return 1


@_degree.register(Argument)
@_degree.register(Coefficient)
def _(e:Expr, ops:list) -> int:
    return e.space.degree


@_degree.register(Grad)
def _(e:Expr, ops:list) -> int:
    return max(ops[0] - 1, 0)


@_degree.register(Sum)
@_degree.register(ListTensor)
def _(e:Expr, ops:list) -> int:
    return max(ops)


@_degree.register(Product)
@_degree.register(Inner)
@_degree.register(Dot)
def _(e:Expr, ops:list) -> int:
    return sum(ops)


@_degree.register(Division)
def _(e:Expr, ops:list) -> int:
    numerator, denominator = ops
    if is_spatially_constant(e.operands[1]):
        return numerator
    return numerator + denominator + 1


@_degree.register(Power)
def _(e:Expr, ops:list) -> int:
    exponent = e.exponent
    if exponent.is_integer() and exponent >= 0:
        return int(exponent) * ops[0]
    return 0 if is_spatially_constant(e.operands[0]) else ops[0] + 1


@_degree.register(MathFunction)
def _(e:Expr, ops:list) -> int:
    return 0 if is_spatially_constant(e.operands[0]) else ops[0] + 1


@_degree.register(Det)
def _(e:Expr, ops:list) -> int:
    return 2 * ops[0]


def estimate_degree(e:Expr) -> int:
    """ Estimated polynomial degree of <e> on one cell. """
    degrees = {}
    for node in iter_nodes(e):
        degrees[node] = _degree(node, [degrees[op] for op in node.operands])
    return degrees[e]


def estimate_quadrature_degree(target) -> int:
    """ Degree of the quadrature rule used to integrate an expression or every integral of a form,
        capped at the highest tabulated rule. """
    if isinstance(target, Form):
        return max([estimate_quadrature_degree(i.integrand) for i in target.integrals], default=0)
    return min(estimate_degree(target), MAX_DEGREE)
