""" Immutable expression nodes of the form language.

    Every node has a value shape and a frozen set of the arguments (test/trial functions) it is linear in.
    Nodes compare and hash structurally, except coefficients, which are compared by identity.
    The lowercase helpers at the bottom fold constants and zeros and should be used instead of the node
    constructors, which only validate. """

import itertools
from numbers import Number
from typing import FrozenSet, Iterable, Iterator, Sequence, Tuple

import numpy as np

Shape = Tuple[int, ...]
GDIM = 2  # Geometric dimension of every mesh.


class FormError(ValueError):
    """ Raised when an expression or form is not well formed. """


class ShapeMismatchError(FormError):
    """ Raised when operand value shapes do not compose. """


class ArityError(FormError):
    """ Raised when an operation would make an expression nonlinear in an argument. """


class Expr:
    """ Base expression node. Subclasses set <shape>, <operands> and a structural key. """

    __slots__ = ("shape", "operands", "arguments", "_key", "_hash")

    def __init__(self, shape:Shape, operands:Sequence["Expr"]=(), extra:tuple=(),
                 arguments:FrozenSet["Argument"]=None) -> None:
        self.shape = tuple(shape)          # Value shape: () scalar, (n,) vector, (n, m) matrix.
        self.operands = tuple(operands)    # Child expressions.
        if arguments is None:
            arguments = frozenset().union(*[op.arguments for op in self.operands])
        self.arguments = arguments         # Arguments this expression is linear in.
        self._key = (type(self).__name__, self.shape, extra, *[op._key for op in self.operands])
        self._hash = hash(self._key)

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def is_terminal(self) -> bool:
        return not self.operands

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other:object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self._key == other._key

    def __ne__(self, other:object) -> bool:
        return not self == other

    def __add__(self, other):
        return add(self, other) if _is_operand(other) else NotImplemented

    def __radd__(self, other):
        return add(other, self) if _is_operand(other) else NotImplemented

    def __sub__(self, other):
        return add(self, negate(other)) if _is_operand(other) else NotImplemented

    def __rsub__(self, other):
        return add(other, negate(self)) if _is_operand(other) else NotImplemented

    def __mul__(self, other):
        return multiply(self, other) if _is_operand(other) else NotImplemented

    def __rmul__(self, other):
        return multiply(other, self) if _is_operand(other) else NotImplemented

    def __truediv__(self, other):
        return divide(self, other) if _is_operand(other) else NotImplemented

    def __rtruediv__(self, other):
        return divide(other, self) if _is_operand(other) else NotImplemented

    def __neg__(self):
        return negate(self)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        if not isinstance(exponent, Number):
            return NotImplemented
        return power(self, exponent)

    def __getitem__(self, index):
        if isinstance(index, tuple):
            out = self
            for i in index:
                out = indexed(out, i)
            return out
        return indexed(self, index)

    @property
    def T(self) -> "Expr":
        return transpose(self)

    def __iter__(self):
        raise TypeError("Expressions are not iterable; use indexing or split().")

    def __repr__(self) -> str:
        return f'<{type(self).__name__}: {self}>'


def _is_operand(value:object) -> bool:
    return isinstance(value, (Expr, Number, list, tuple, np.ndarray))


def iter_nodes(expr:Expr) -> Iterator[Expr]:
    """ Yield every distinct node of <expr> once, children before parents. """
    seen = set()
    stack = [(expr, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        stack += [(op, False) for op in reversed(node.operands) if op not in seen]


# ---------------------------------------------------------------- terminals

class Terminal(Expr):
    """ Leaf node. """

    __slots__ = ()

    def __str__(self) -> str:
        raise NotImplementedError


class Constant(Terminal):
    """ A fixed numeric value of any shape. """

    __slots__ = ("value",)

    def __init__(self, value) -> None:
        value = np.array(value, dtype=float)
        value.setflags(write=False)
        self.value = value
        super().__init__(value.shape, extra=tuple(value.ravel().tolist()))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        if not self.shape:
            return repr(float(self.value))
        return repr(self.value.tolist())


class Zero(Terminal):
    """ Identically zero. Keeps the arguments of the expression it replaced. """

    __slots__ = ()

    def __init__(self, shape:Shape=(), arguments:Iterable["Argument"]=()) -> None:
        arguments = frozenset(arguments)
        super().__init__(shape, extra=tuple(sorted(a.number for a in arguments)), arguments=arguments)

    def __str__(self) -> str:
        return "0"


class Identity(Terminal):
    __slots__ = ()

    def __init__(self, dim:int=GDIM) -> None:
        super().__init__((dim, dim))

    def __str__(self) -> str:
        return "I"


class SpatialCoordinate(Terminal):
    """ The position x on a mesh. Its value follows the mesh coordinates. """

    __slots__ = ("mesh",)

    def __init__(self, mesh) -> None:
        self.mesh = mesh
        super().__init__((GDIM,), extra=(id(mesh),))

    def __str__(self) -> str:
        return "x"


class FacetNormal(Terminal):
    """ Outward unit normal of a boundary facet. Only meaningful in facet integrals. """

    __slots__ = ("mesh",)

    def __init__(self, mesh) -> None:
        self.mesh = mesh
        super().__init__((GDIM,), extra=(id(mesh),))

    def __str__(self) -> str:
        return "n"


class Argument(Terminal):
    """ Basis placeholder of a function space. Number 0 is the test function, number 1 the trial function. """

    __slots__ = ("space", "number")

    def __init__(self, space, number:int) -> None:
        if number not in (0, 1):
            raise ArityError(f'Argument number must be 0 (test) or 1 (trial), got {number}.')
        self.space = space
        self.number = number
        super().__init__(space.value_shape, extra=(id(space), number), arguments=frozenset())
        self.arguments = frozenset([self])

    def __str__(self) -> str:
        return f'v_{self.number}'


def TestFunction(space) -> Argument:
    return Argument(space, 0)


def TrialFunction(space) -> Argument:
    return Argument(space, 1)


class Coefficient(Terminal):
    """ A discrete function whose values are read at assembly time. Compared by identity. """

    __slots__ = ("space", "name", "__weakref__")

    _names = itertools.count()

    def __init__(self, space, name:str=None) -> None:
        self.space = space
        self.name = name or f'w_{next(self._names)}'
        super().__init__(space.value_shape, extra=(id(self),))

    def __hash__(self) -> int:
        return id(self)

    def __eq__(self, other:object) -> bool:
        return self is other

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------- operators

def _check_disjoint(*operands:Expr) -> None:
    numbers = [a.number for op in operands for a in op.arguments]
    if len(numbers) != len(set(numbers)):
        raise ArityError('A product may not contain the same argument twice.')


def _check_same_arguments(operands:Sequence[Expr]) -> None:
    live = [op for op in operands if not isinstance(op, Zero)]
    if any(op.arguments != live[0].arguments for op in live[1:]):
        raise ArityError('Terms of a sum must be linear in the same arguments.')


def _check_no_arguments(operand:Expr, what:str) -> None:
    if operand.arguments:
        raise ArityError(f'{what} of an argument is not linear.')


class Sum(Expr):
    __slots__ = ()

    def __init__(self, a:Expr, b:Expr) -> None:
        if a.shape != b.shape:
            raise ShapeMismatchError(f'Cannot add shapes {a.shape} and {b.shape}.')
        _check_same_arguments([a, b])
        super().__init__(a.shape, (a, b), arguments=a.arguments or b.arguments)

    def __str__(self) -> str:
        a, b = self.operands
        return f'({a} + {b})'


class Product(Expr):
    """ Scalar times scalar or tensor. The scalar is always the first operand. """

    __slots__ = ()

    def __init__(self, a:Expr, b:Expr) -> None:
        if a.shape:
            raise ShapeMismatchError(f'First factor must be scalar, got shape {a.shape}.')
        _check_disjoint(a, b)
        super().__init__(b.shape, (a, b))

    def __str__(self) -> str:
        a, b = self.operands
        return f'({a} * {b})'


class Division(Expr):
    __slots__ = ()

    def __init__(self, a:Expr, b:Expr) -> None:
        if b.shape:
            raise ShapeMismatchError(f'Denominator must be scalar, got shape {b.shape}.')
        _check_no_arguments(b, 'Division by a function')
        super().__init__(a.shape, (a, b))

    def __str__(self) -> str:
        a, b = self.operands
        return f'({a} / {b})'


class Power(Expr):
    __slots__ = ("exponent",)

    def __init__(self, a:Expr, exponent:float) -> None:
        if a.shape:
            raise ShapeMismatchError(f'Base of a power must be scalar, got shape {a.shape}.')
        _check_no_arguments(a, 'A power')
        self.exponent = float(exponent)
        super().__init__((), (a,), extra=(self.exponent,))

    def __str__(self) -> str:
        return f'({self.operands[0]} ** {self.exponent!r})'


class MathFunction(Expr):
    """ Elementwise scalar function. """

    __slots__ = ()
    name = ""

    def __init__(self, a:Expr) -> None:
        if a.shape:
            raise ShapeMismatchError(f'{self.name} needs a scalar argument, got shape {a.shape}.')
        _check_no_arguments(a, self.name)
        super().__init__((), (a,))

    def __str__(self) -> str:
        return f'{self.name}({self.operands[0]})'


class Sin(MathFunction):
    __slots__ = ()
    name = "sin"


class Cos(MathFunction):
    __slots__ = ()
    name = "cos"


class Sqrt(MathFunction):
    __slots__ = ()
    name = "sqrt"


class Inner(Expr):
    """ Full contraction of two operands of equal shape. """

    __slots__ = ()

    def __init__(self, a:Expr, b:Expr) -> None:
        if a.shape != b.shape:
            raise ShapeMismatchError(f'inner() needs equal shapes, got {a.shape} and {b.shape}.')
        _check_disjoint(a, b)
        super().__init__((), (a, b))

    def __str__(self) -> str:
        a, b = self.operands
        return f'inner({a}, {b})'


class Dot(Expr):
    """ Contraction of the last axis of the first operand with the first axis of the second. """

    __slots__ = ()

    def __init__(self, a:Expr, b:Expr) -> None:
        if not a.shape or not b.shape or a.shape[-1] != b.shape[0]:
            raise ShapeMismatchError(f'dot() cannot contract shapes {a.shape} and {b.shape}.')
        _check_disjoint(a, b)
        super().__init__(a.shape[:-1] + b.shape[1:], (a, b))

    def __str__(self) -> str:
        a, b = self.operands
        return f'dot({a}, {b})'


class Transpose(Expr):
    __slots__ = ()

    def __init__(self, a:Expr) -> None:
        if a.rank != 2:
            raise ShapeMismatchError(f'transpose() needs a matrix, got shape {a.shape}.')
        super().__init__(a.shape[::-1], (a,))

    def __str__(self) -> str:
        return f'transpose({self.operands[0]})'


class Trace(Expr):
    __slots__ = ()

    def __init__(self, a:Expr) -> None:
        if a.rank != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatchError(f'tr() needs a square matrix, got shape {a.shape}.')
        super().__init__((), (a,))

    def __str__(self) -> str:
        return f'tr({self.operands[0]})'


class Det(Expr):
    __slots__ = ()

    def __init__(self, a:Expr) -> None:
        if a.shape != (2, 2):
            raise ShapeMismatchError(f'det() needs a 2x2 matrix, got shape {a.shape}.')
        _check_no_arguments(a, 'A determinant')
        super().__init__((), (a,))

    def __str__(self) -> str:
        return f'det({self.operands[0]})'


class Indexed(Expr):
    """ Component <index> along the first axis. """

    __slots__ = ("index",)

    def __init__(self, a:Expr, index:int) -> None:
        if not a.shape:
            raise ShapeMismatchError('Cannot index a scalar.')
        if not 0 <= index < a.shape[0]:
            raise ShapeMismatchError(f'Index {index} out of range for shape {a.shape}.')
        self.index = index
        super().__init__(a.shape[1:], (a,), extra=(index,))

    def __str__(self) -> str:
        return f'{self.operands[0]}[{self.index}]'


class ListTensor(Expr):
    """ Stacks equally shaped items along a new first axis. """

    __slots__ = ()

    def __init__(self, items:Sequence[Expr]) -> None:
        if not items:
            raise ShapeMismatchError('Cannot build a tensor from no items.')
        shape = items[0].shape
        if any(item.shape != shape for item in items):
            raise ShapeMismatchError('Tensor items must have equal shapes.')
        _check_same_arguments(items)
        live = [item for item in items if not isinstance(item, Zero)]
        arguments = live[0].arguments if live else frozenset()
        super().__init__((len(items), *shape), items, arguments=arguments)

    def __str__(self) -> str:
        return '[' + ', '.join(map(str, self.operands)) + ']'


class Grad(Expr):
    """ Spatial gradient of a terminal. Adds a trailing axis of length 2. """

    __slots__ = ()

    def __init__(self, a:Expr) -> None:
        if not isinstance(a, (Argument, Coefficient)):
            raise FormError(f'Grad node needs a function operand; use grad() to expand {a}.')
        super().__init__(a.shape + (GDIM,), (a,))

    def __str__(self) -> str:
        return f'grad({self.operands[0]})'


# ---------------------------------------------------------------- folding helpers

def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (list, tuple)):
        return as_vector(value)
    if isinstance(value, (Number, np.ndarray)):
        return Constant(value)
    raise FormError(f'Cannot use {type(value).__name__} in an expression.')


def as_vector(items:Sequence) -> Expr:
    items = [as_expr(item) for item in items]
    if all(isinstance(item, Constant) for item in items):
        return Constant([item.value for item in items])
    if all(isinstance(item, Zero) for item in items):
        return Zero((len(items), *items[0].shape), frozenset().union(*[i.arguments for i in items]))
    return ListTensor(items)


as_matrix = as_vector


def _is_zero(e:Expr) -> bool:
    return isinstance(e, Zero) or (isinstance(e, Constant) and not e.value.any())


def _zero(shape:Shape, *operands:Expr) -> Zero:
    return Zero(shape, frozenset().union(*[op.arguments for op in operands]))


def _is_one(e:Expr) -> bool:
    return isinstance(e, Constant) and not e.shape and float(e.value) == 1.0


def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    # Python's sum() starts from the scalar 0.
    if b.shape and not a.shape and _is_zero(a):
        return b
    if a.shape and not b.shape and _is_zero(b):
        return a
    if a.shape != b.shape:
        raise ShapeMismatchError(f'Cannot add shapes {a.shape} and {b.shape}.')
    if isinstance(a, Zero):
        return b
    if isinstance(b, Zero):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value + b.value)
    return Sum(a, b)


def multiply(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if a.shape and not b.shape:
        a, b = b, a
    if a.shape:
        raise ShapeMismatchError(f'Use inner() or dot() to multiply shapes {a.shape} and {b.shape}.')
    if _is_zero(a) or _is_zero(b):
        return _zero(b.shape, a, b)
    if _is_one(a):
        return b
    if _is_one(b) and not b.shape:
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    return Product(a, b)


def negate(a) -> Expr:
    return multiply(-1.0, a)


def divide(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.shape:
        raise ShapeMismatchError(f'Denominator must be scalar, got shape {b.shape}.')
    if _is_zero(b):
        raise ZeroDivisionError('Division by a zero expression.')
    if _is_zero(a):
        return _zero(a.shape, a)
    if _is_one(b):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value / b.value)
    return Division(a, b)


def power(a, exponent:float) -> Expr:
    a = as_expr(a)
    exponent = float(exponent)
    if exponent == 1.0:
        return a
    if exponent == 0.0:
        return Constant(1.0)
    if isinstance(a, Constant):
        return Constant(a.value ** exponent)
    if isinstance(a, Zero) and exponent > 0.0:
        return a
    return Power(a, exponent)


def sqrt(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Constant):
        return Constant(np.sqrt(a.value))
    return Sqrt(a)


def sin(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, (Constant, Zero)):
        return Constant(np.sin(a.value if isinstance(a, Constant) else 0.0))
    return Sin(a)


def cos(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, (Constant, Zero)):
        return Constant(np.cos(a.value if isinstance(a, Constant) else 0.0))
    return Cos(a)


def inner(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f'inner() needs equal shapes, got {a.shape} and {b.shape}.')
    if _is_zero(a) or _is_zero(b):
        return _zero((), a, b)
    if not a.shape:
        return multiply(a, b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(np.sum(a.value * b.value))
    return Inner(a, b)


def dot(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if not a.shape or not b.shape or a.shape[-1] != b.shape[0]:
        raise ShapeMismatchError(f'dot() cannot contract shapes {a.shape} and {b.shape}.')
    shape = a.shape[:-1] + b.shape[1:]
    if _is_zero(a) or _is_zero(b):
        return _zero(shape, a, b)
    if isinstance(b, Identity):
        return a
    if isinstance(a, Identity):
        return b
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(np.tensordot(a.value, b.value, axes=1))
    return Dot(a, b)


def transpose(a) -> Expr:
    a = as_expr(a)
    if a.rank != 2:
        raise ShapeMismatchError(f'transpose() needs a matrix, got shape {a.shape}.')
    if isinstance(a, Zero):
        return _zero(a.shape[::-1], a)
    if isinstance(a, Constant):
        return Constant(a.value.T)
    if isinstance(a, Identity):
        return a
    if isinstance(a, Transpose):
        return a.operands[0]
    return Transpose(a)


def tr(a) -> Expr:
    a = as_expr(a)
    if a.rank != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f'tr() needs a square matrix, got shape {a.shape}.')
    if isinstance(a, Zero):
        return _zero((), a)
    if isinstance(a, Constant):
        return Constant(np.trace(a.value))
    if isinstance(a, Identity):
        return Constant(float(a.shape[0]))
    if isinstance(a, Transpose):
        return tr(a.operands[0])
    return Trace(a)


def det(a) -> Expr:
    a = as_expr(a)
    if isinstance(a, Constant):
        return Constant(np.linalg.det(a.value))
    if isinstance(a, Identity):
        return Constant(1.0)
    return Det(a)


def sym(a) -> Expr:
    return 0.5 * (a + transpose(a))


def indexed(a, index:int) -> Expr:
    a = as_expr(a)
    index = int(index)
    if not a.shape:
        raise ShapeMismatchError('Cannot index a scalar.')
    if index < 0:
        index += a.shape[0]
    if not 0 <= index < a.shape[0]:
        raise ShapeMismatchError(f'Index {index} out of range for shape {a.shape}.')
    if isinstance(a, Zero):
        return _zero(a.shape[1:], a)
    if isinstance(a, Constant):
        return Constant(a.value[index])
    if isinstance(a, Identity):
        return Constant(np.eye(a.shape[0])[index])
    if isinstance(a, ListTensor):
        return a.operands[index]
    return Indexed(a, index)


def components(a:Expr) -> list:
    """ Return the items of <a> along its first axis. """
    return [indexed(a, i) for i in range(a.shape[0])]


def split(w:Expr) -> Tuple[Expr, Expr]:
    """ Split a Taylor-Hood function or argument into its velocity vector and pressure scalar. """
    if w.shape != (3,):
        raise ShapeMismatchError(f'split() needs a velocity-pressure function, got shape {w.shape}.')
    return as_vector([w[0], w[1]]), w[2]
