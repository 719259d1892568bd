""" Spatial gradients of composite expressions.

    Grad nodes only ever wrap functions (arguments and coefficients). grad() of anything else is
    expanded at construction by the chain and product rules until only gradients of functions remain.
    The gradient of the spatial coordinate is the identity. """

from functools import singledispatchmethod

from .expr import Argument, Coefficient, Constant, Cos, Det, Division, Dot, Expr, FacetNormal, FormError, GDIM, \
    Grad, Identity, Indexed, Inner, ListTensor, Power, Product, Sin, SpatialCoordinate, Sqrt, Sum, Terminal, \
    Trace, Transpose, Zero, add, as_expr, as_vector, cos, divide, dot, indexed, multiply, negate, power, sin, sqrt, \
    tr, transpose


def is_spatially_constant(e:Expr) -> bool:
    """ True if nothing in <e> varies in space. """
    if isinstance(e, (Constant, Zero, Identity)):
        return True
    if e.is_terminal:
        return False
    return all(is_spatially_constant(op) for op in e.operands)


class ComponentRuleset:
    """ Pushes component selection through operators so that the result is built from
        components of terminals. Used to differentiate tensor-valued expressions entry by entry. """

    def __call__(self, e:Expr, i:int) -> Expr:
        return self.process(e, i)

    @singledispatchmethod
    def process(self, e:Expr, i:int) -> Expr:
        return indexed(e, i)

    @process.register(Sum)
    def _(self, e:Expr, i:int) -> Expr:
        a, b = e.operands
        return add(self(a, i), self(b, i))

    @process.register(Product)
    def _(self, e:Expr, i:int) -> Expr:
        a, b = e.operands
        return multiply(a, self(b, i))

    @process.register(Division)
    def _(self, e:Expr, i:int) -> Expr:
        a, b = e.operands
        return divide(self(a, i), b)

    @process.register(Dot)
    def _(self, e:Expr, i:int) -> Expr:
        a, b = e.operands
        if a.rank >= 2:
            return dot(self(a, i), b)
        # Vector times matrix: component i is the dot product with column i.
        return dot(a, as_vector([self(row, i) for row in _rows(b, self)]))

    @process.register(Transpose)
    def _(self, e:Expr, i:int) -> Expr:
        a = e.operands[0]
        return as_vector([self(row, i) for row in _rows(a, self)])

    @process.register(ListTensor)
    def _(self, e:Expr, i:int) -> Expr:
        return e.operands[i]


def _rows(e:Expr, component:ComponentRuleset) -> list:
    return [component(e, j) for j in range(e.shape[0])]


component = ComponentRuleset()


def entries(e:Expr) -> list:
    """ Flat list of the scalar entries of <e> in row-major order. """
    if not e.shape:
        return [e]
    return [x for j in range(e.shape[0]) for x in entries(component(e, j))]


class GradRuleset:
    """ Expands grad(f) for any supported f. Results are memoized per instance. """

    def __init__(self) -> None:
        self._cache = {}

    def __call__(self, f:Expr) -> Expr:
        f = as_expr(f)
        if f.rank > 1 and not isinstance(f, (Terminal, Grad)):
            raise FormError(f'Gradients of rank-{f.rank} expressions are not supported: {f}')
        try:
            return self._cache[f]
        except KeyError:
            result = self._cache[f] = self.process(f)
            return result

    def _zero(self, f:Expr) -> Zero:
        return Zero(f.shape + (GDIM,), f.arguments)

    @singledispatchmethod
    def process(self, f:Expr) -> Expr:
        raise FormError(f'Cannot take the gradient of {type(f).__name__} expressions.')

    @process.register(Constant)
    @process.register(Zero)
    @process.register(Identity)
    def _(self, f:Expr) -> Expr:
        return self._zero(f)

    @process.register(SpatialCoordinate)
    def _(self, f:Expr) -> Expr:
        return Identity(GDIM)

    @process.register(FacetNormal)
    def _(self, f:Expr) -> Expr:
        raise FormError('The facet normal has no gradient.')

    @process.register(Argument)
    @process.register(Coefficient)
    def _(self, f:Expr) -> Expr:
        return Grad(f)

    @process.register(Grad)
    def _(self, f:Expr) -> Expr:
        function = f.operands[0]
        if function.space.degree <= 1:
            return self._zero(f)
        raise FormError(f'Second derivatives of degree {function.space.degree} functions are not supported.')

    @process.register(Sum)
    def _(self, f:Expr) -> Expr:
        a, b = f.operands
        return add(self(a), self(b))

    @process.register(Product)
    def _(self, f:Expr) -> Expr:
        a, b = f.operands
        if is_spatially_constant(a):
            return multiply(a, self(b))
        if not b.shape:
            return add(multiply(a, self(b)), multiply(b, self(a)))
        return as_vector([self(multiply(a, x)) for x in _rows(b, component)])

    @process.register(Division)
    def _(self, f:Expr) -> Expr:
        a, b = f.operands
        if is_spatially_constant(b):
            return divide(self(a), b)
        if not a.shape:
            return divide(add(multiply(b, self(a)), negate(multiply(a, self(b)))), power(b, 2))
        return as_vector([self(divide(x, b)) for x in _rows(a, component)])

    @process.register(Power)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        return multiply(multiply(f.exponent, power(a, f.exponent - 1.0)), self(a))

    @process.register(Sin)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        return multiply(cos(a), self(a))

    @process.register(Cos)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        return negate(multiply(sin(a), self(a)))

    @process.register(Sqrt)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        return divide(self(a), multiply(2.0, sqrt(a)))

    @process.register(Inner)
    def _(self, f:Expr) -> Expr:
        a, b = f.operands
        terms = [self(multiply(x, y)) for x, y in zip(entries(a), entries(b))]
        return sum(terms[1:], terms[0])

    @process.register(Dot)
    def _(self, f:Expr) -> Expr:
        if not f.shape:
            a, b = f.operands
            terms = [self(multiply(x, y)) for x, y in zip(entries(a), entries(b))]
            return sum(terms[1:], terms[0])
        return as_vector([self(x) for x in _rows(f, component)])

    @process.register(Trace)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        terms = [self(component(component(a, i), i)) for i in range(a.shape[0])]
        return sum(terms[1:], terms[0])

    @process.register(Det)
    def _(self, f:Expr) -> Expr:
        (a00, a01), (a10, a11) = [[component(row, j) for j in range(2)] for row in _rows(f.operands[0], component)]
        return self(add(multiply(a00, a11), negate(multiply(a01, a10))))

    @process.register(Indexed)
    def _(self, f:Expr) -> Expr:
        a = f.operands[0]
        if a.rank == 1 or isinstance(a, (Terminal, Grad)):
            return indexed(self(a), f.index)
        pushed = component(a, f.index)
        if isinstance(pushed, Indexed) and pushed.operands[0] is a:
            raise FormError(f'Cannot take the gradient of {f}.')
        return self(pushed)

    @process.register(ListTensor)
    def _(self, f:Expr) -> Expr:
        return as_vector([self(item) for item in f.operands])


_grad = GradRuleset()


def grad(f) -> Expr:
    return _grad(f)


def div(f) -> Expr:
    """ Divergence of a vector expression, as the trace of its gradient. """
    f = as_expr(f)
    if f.rank != 1:
        raise FormError(f'div() needs a vector expression, got shape {f.shape}.')
    return tr(grad(f))


def nabla_grad(f) -> Expr:
    return transpose(grad(f))
