""" Symbolic transformations of forms: substitution, action, adjoint, Gateaux and shape derivatives. """

from functools import singledispatchmethod
from typing import Mapping, Tuple

from .calculus import div, grad
from .derivatives import apply_derivatives
from .expr import Argument, ArityError, Coefficient, Cos, Det, Division, Dot, Expr, FormError, Grad, Indexed, Inner, \
    ListTensor, Power, Product, ShapeMismatchError, Sin, SpatialCoordinate, Sqrt, Sum, Terminal, Trace, Transpose, \
    Zero, add, as_expr, as_vector, cos, det, divide, dot, indexed, inner, iter_nodes, multiply, negate, power, sin, \
    sqrt, tr, transpose
from .form import CELL, Form, UnsupportedMeasureError


class Replacer:
    """ Substitutes terminals in one simultaneous pass. Replacement values are never visited again. """

    def __init__(self, mapping:Mapping[Expr, Expr]) -> None:
        self._mapping = {}
        for key, value in mapping.items():
            value = as_expr(value)
            if key.shape != value.shape:
                raise ShapeMismatchError(f'Cannot replace {key} of shape {key.shape} '
                                         f'with {value} of shape {value.shape}.')
            self._mapping[key] = value
        self._cache = {}

    def arguments(self, arguments) -> frozenset:
        """ The argument set an expression linear in <arguments> has after replacement. """
        out = frozenset()
        for a in arguments:
            out |= self._mapping[a].arguments if a in self._mapping else frozenset([a])
        return out

    def __call__(self, e:Expr) -> Expr:
        try:
            return self._cache[e]
        except KeyError:
            pass
        if e in self._mapping:
            result = self._mapping[e]
        elif e.is_terminal:
            result = self.terminal(e)
        else:
            result = self.rebuild(e, *[self(op) for op in e.operands])
        self._cache[e] = result
        return result

    def terminal(self, e:Terminal) -> Expr:
        if isinstance(e, Zero):
            return Zero(e.shape, self.arguments(e.arguments))
        return e

    @singledispatchmethod
    def rebuild(self, e:Expr, *operands:Expr) -> Expr:
        raise NotImplementedError(f'Cannot rebuild {type(e).__name__} nodes.')

    @rebuild.register(Grad)
    def _(self, e:Expr, a:Expr) -> Expr:
        return grad(a)

    @rebuild.register(Sum)
    def _(self, e:Expr, a:Expr, b:Expr) -> Expr:
        return add(a, b)

    @rebuild.register(Product)
    def _(self, e:Expr, a:Expr, b:Expr) -> Expr:
        return multiply(a, b)

    @rebuild.register(Division)
    def _(self, e:Expr, a:Expr, b:Expr) -> Expr:
        return divide(a, b)

    @rebuild.register(Power)
    def _(self, e:Expr, a:Expr) -> Expr:
        return power(a, e.exponent)

    @rebuild.register(Sin)
    def _(self, e:Expr, a:Expr) -> Expr:
        return sin(a)

    @rebuild.register(Cos)
    def _(self, e:Expr, a:Expr) -> Expr:
        return cos(a)

    @rebuild.register(Sqrt)
    def _(self, e:Expr, a:Expr) -> Expr:
        return sqrt(a)

    @rebuild.register(Inner)
    def _(self, e:Expr, a:Expr, b:Expr) -> Expr:
        return inner(a, b)

    @rebuild.register(Dot)
    def _(self, e:Expr, a:Expr, b:Expr) -> Expr:
        return dot(a, b)

    @rebuild.register(Transpose)
    def _(self, e:Expr, a:Expr) -> Expr:
        return transpose(a)

    @rebuild.register(Trace)
    def _(self, e:Expr, a:Expr) -> Expr:
        return tr(a)

    @rebuild.register(Det)
    def _(self, e:Expr, a:Expr) -> Expr:
        return det(a)

    @rebuild.register(Indexed)
    def _(self, e:Expr, a:Expr) -> Expr:
        return indexed(a, e.index)

    @rebuild.register(ListTensor)
    def _(self, e:Expr, *items:Expr) -> Expr:
        return as_vector(items)


def replace(target, mapping:Mapping[Expr, Expr]):
    """ Substitute the terminals in <mapping> throughout an expression or form. """
    replacer = Replacer(mapping)
    if isinstance(target, Form):
        integrands = [replacer(i.integrand) for i in target.integrals]
        return target.reconstruct(integrands, replacer.arguments(target.arguments))
    return replacer(as_expr(target))


def action(form:Form, function) -> Form:
    """ Replace the highest-numbered argument of <form> with <function>. """
    if not form.arity:
        raise ArityError('A functional has no argument to act on.')
    last = form.arguments[-1]
    function = as_expr(function)
    if function.arguments:
        raise ArityError('The action must be taken with a function, not an argument.')
    return replace(form, {last: function})


def adjoint_form(form:Form) -> Form:
    """ Swap the test and trial functions of a bilinear form. """
    if form.arity != 2:
        raise ArityError(f'adjoint_form() needs a bilinear form, got arity {form.arity}.')
    test, trial = form.arguments
    return replace(form, {test: Argument(test.space, 1), trial: Argument(trial.space, 0)})


def _check_arity(form:Form, direction:Expr) -> frozenset:
    numbers = {a.number for a in form.arguments}
    added = direction.arguments
    if any(a.number in numbers for a in added):
        raise ArityError('The direction reuses an argument number of the form.')
    arguments = frozenset(form.arguments) | added
    if len(arguments) > 2:
        raise ArityError(f'Differentiating an arity {form.arity} form would exceed arity 2.')
    return arguments


def gateaux_derivative(form:Form, wrt:Coefficient, direction=None) -> Form:
    """ Derivative of <form> with respect to the coefficient <wrt> in <direction>.
        The default direction is a new argument of the space of <wrt>, which raises the arity by one. """
    if not isinstance(wrt, Coefficient):
        raise FormError(f'Can only differentiate with respect to a coefficient, got {wrt}.')
    if direction is None:
        if form.arity >= 2:
            raise ArityError('Cannot add an argument to a bilinear form.')
        direction = Argument(wrt.space, form.arity)
    direction = as_expr(direction)
    if direction.shape != wrt.shape:
        raise ShapeMismatchError(f'Direction shape {direction.shape} does not match {wrt} of shape {wrt.shape}.')
    arguments = _check_arity(form, direction)
    rules = {wrt: direction}
    return form.reconstruct([apply_derivatives(i.integrand, rules) for i in form.integrals], arguments)


def shape_derivative(form:Form, direction) -> Form:
    """ Derivative of <form> when every point x of its mesh moves to x + t V. Functions are transported
        with the mesh, so their gradients change while their reference values do not. """
    direction = as_expr(direction)
    if direction.shape != (2,):
        raise ShapeMismatchError(f'Shape directions must be vectors, got shape {direction.shape}.')
    for integral in form.integrals:
        if integral.measure.kind != CELL:
            raise UnsupportedMeasureError('Shape derivatives of facet integrals are not supported.')
    arguments = _check_arity(form, direction)
    grad_direction = grad(direction)
    div_direction = div(direction)
    integrands = []
    for integral in form.integrals:
        f = integral.integrand
        rules = {SpatialCoordinate(integral.mesh): direction}
        for node in iter_nodes(f):
            if isinstance(node, Grad):
                rules[node] = negate(dot(node, grad_direction))
        integrands.append(add(apply_derivatives(f, rules), multiply(f, div_direction)))
    return form.reconstruct(integrands, arguments)


def system(residual:Form, unknown:Coefficient) -> Tuple[Form, Form]:
    """ Split a residual that is affine in <unknown> into a bilinear form a and a linear form L
        such that the residual vanishes exactly when a(unknown, v) = L(v). """
    if residual.arity != 1:
        raise ArityError(f'system() needs a residual of arity 1, got {residual.arity}.')
    a = gateaux_derivative(residual, unknown)
    if any(c is unknown for c in a.coefficients()):
        raise FormError(f'The residual is not affine in {unknown}.')
    L = -replace(residual, {unknown: Zero(unknown.shape)})
    return a, L
