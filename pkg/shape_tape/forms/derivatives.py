""" Directional derivatives of expressions by forward propagation through the expression tree.

    A ruleset is seeded with the derivatives of some terminals (and, for shape derivatives, of some
    gradient nodes). Every other terminal has a zero derivative. Operators apply the usual
    sum, product, quotient and chain rules to the derivatives of their operands. """

from functools import singledispatchmethod
from typing import Mapping

from .calculus import grad
from .expr import Cos, Det, Division, Dot, Expr, Grad, Indexed, Inner, ListTensor, Power, Product, Sin, Sqrt, Sum, \
    Terminal, Trace, Transpose, Zero, add, as_vector, cos, divide, dot, indexed, inner, multiply, negate, power, sin, \
    sqrt, tr, transpose


class DerivativeRuleset:
    """ Computes d<expr> given d<t> for the terminals t in <rules>. Results are memoized per instance. """

    def __init__(self, rules:Mapping[Expr, Expr]) -> None:
        self._rules = dict(rules)
        self._direction_arguments = frozenset().union(*[d.arguments for d in self._rules.values()])
        self._cache = {}

    def __call__(self, e:Expr) -> Expr:
        try:
            return self._cache[e]
        except KeyError:
            pass
        if e in self._rules:
            result = self._rules[e]
        else:
            result = self.process(e)
        self._cache[e] = result
        return result

    def _zero(self, e:Expr) -> Zero:
        return Zero(e.shape, e.arguments | self._direction_arguments)

    @singledispatchmethod
    def process(self, e:Expr) -> Expr:
        raise NotImplementedError(f'No derivative rule for {type(e).__name__}.')

    @process.register(Terminal)
    def _(self, e:Expr) -> Expr:
        return self._zero(e)

    @process.register(Grad)
    def _(self, e:Expr) -> Expr:
        function = e.operands[0]
        if function in self._rules:
            return grad(self._rules[function])
        return self._zero(e)

    @process.register(Sum)
    def _(self, e:Expr) -> Expr:
        a, b = e.operands
        return add(self(a), self(b))

    @process.register(Product)
    def _(self, e:Expr) -> Expr:
        a, b = e.operands
        return add(multiply(self(a), b), multiply(a, self(b)))

    @process.register(Division)
    def _(self, e:Expr) -> Expr:
        a, b = e.operands
        return add(divide(self(a), b), negate(divide(multiply(self(b), a), power(b, 2))))

    @process.register(Power)
    def _(self, e:Expr) -> Expr:
        a = e.operands[0]
        return multiply(multiply(e.exponent, power(a, e.exponent - 1.0)), self(a))

    @process.register(Sin)
    def _(self, e:Expr) -> Expr:
        a = e.operands[0]
        return multiply(cos(a), self(a))

    @process.register(Cos)
    def _(self, e:Expr) -> Expr:
        a = e.operands[0]
        return negate(multiply(sin(a), self(a)))

    @process.register(Sqrt)
    def _(self, e:Expr) -> Expr:
        a = e.operands[0]
        return divide(self(a), multiply(2.0, sqrt(a)))

    @process.register(Inner)
    def _(self, e:Expr) -> Expr:
        a, b = e.operands
        return add(inner(self(a), b), inner(a, self(b)))

    @process.register(Dot)
    def _(self, e:Expr) -> Expr:
        a, b = e.operands
        return add(dot(self(a), b), dot(a, self(b)))

    @process.register(Transpose)
    def _(self, e:Expr) -> Expr:
        return transpose(self(e.operands[0]))

    @process.register(Trace)
    def _(self, e:Expr) -> Expr:
        return tr(self(e.operands[0]))

    @process.register(Det)
    def _(self, e:Expr) -> Expr:
        a = e.operands[0]
        da = self(a)
        a00, a01, a10, a11 = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
        d00, d01, d10, d11 = da[0, 0], da[0, 1], da[1, 0], da[1, 1]
        return add(add(multiply(a00, d11), multiply(d00, a11)),
                   negate(add(multiply(a01, d10), multiply(d01, a10))))

    @process.register(Indexed)
    def _(self, e:Expr) -> Expr:
        return indexed(self(e.operands[0]), e.index)

    @process.register(ListTensor)
    def _(self, e:Expr) -> Expr:
        return as_vector([self(item) for item in e.operands])


def apply_derivatives(e:Expr, rules:Mapping[Expr, Expr]) -> Expr:
    """ Derivative of <e> where each key of <rules> varies in the direction of its value. """
    return DerivativeRuleset(rules)(e)
