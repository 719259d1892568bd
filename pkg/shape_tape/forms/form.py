from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .expr import Argument, ArityError, Coefficient, Expr, FacetNormal, FormError, ShapeMismatchError, \
    SpatialCoordinate, Zero, as_expr, iter_nodes, multiply

CELL = "cell"
EXTERIOR_FACET = "exterior_facet"

Tags = Optional[Tuple[int, ...]]


class UnsupportedMeasureError(FormError):
    """ Raised when a transform cannot handle the measure of an integral. """


def _as_tags(subdomain) -> Tags:
    if subdomain is None:
        return None
    if isinstance(subdomain, int):
        return (subdomain,)
    return tuple(sorted(set(map(int, subdomain))))


class Measure:
    """ Integration measure. Multiplying a scalar expression by a measure gives a Form.
        Facet measures optionally carry the marker tags they integrate over (all marked facets by default). """

    def __init__(self, kind:str, tags:Tags=None, degree:int=None, domain=None) -> None:
        self.kind = kind      # CELL or EXTERIOR_FACET.
        self.tags = tags      # Sorted facet tags, or None for every marked facet.
        self.degree = degree  # Fixed quadrature degree, or None to estimate it.
        self.domain = domain  # Mesh to integrate over when the integrand has no mesh-bound terminal.

    def __call__(self, subdomain=None, *, degree:int=None, domain=None) -> "Measure":
        if subdomain is not None and self.kind == CELL:
            raise UnsupportedMeasureError('Cell measures have no subdomains.')
        return Measure(self.kind, _as_tags(subdomain) if subdomain is not None else self.tags,
                       self.degree if degree is None else degree, domain or self.domain)

    def __rmul__(self, integrand) -> "Form":
        integrand = as_expr(integrand)
        if integrand.shape:
            raise ShapeMismatchError(f'Integrands must be scalar, got shape {integrand.shape}.')
        mesh = find_mesh(integrand, self.domain)
        return Form([Integral(integrand, self, mesh)], arguments=integrand.arguments)

    def __eq__(self, other:object) -> bool:
        return isinstance(other, Measure) and (self.kind, self.tags, self.degree, self.domain) == \
            (other.kind, other.tags, other.degree, other.domain)

    def __hash__(self) -> int:
        return hash((self.kind, self.tags, self.degree, id(self.domain)))

    def __str__(self) -> str:
        name = "dx" if self.kind == CELL else "ds"
        options = []
        if self.tags is not None:
            options.append(repr(self.tags))
        if self.degree is not None:
            options.append(f'degree={self.degree}')
        return f'{name}({", ".join(options)})' if options else name


dx = Measure(CELL)
ds = Measure(EXTERIOR_FACET)


def find_mesh(expr:Expr, default=None):
    """ Return the one mesh referred to by the terminals of <expr>. """
    meshes = set()
    found = []
    for node in iter_nodes(expr):
        if isinstance(node, (SpatialCoordinate, FacetNormal)):
            mesh = node.mesh
        elif isinstance(node, (Argument, Coefficient)):
            mesh = node.space.mesh
            if not getattr(node.space, "usable_in_forms", True):
                raise FormError(f'Functions on {node.space} cannot appear in forms.')
        else:
            continue
        if id(mesh) not in meshes:
            meshes.add(id(mesh))
            found.append(mesh)
    if default is not None and id(default) not in meshes:
        meshes.add(id(default))
        found.append(default)
    if not found:
        raise FormError(f'Cannot tell which mesh to integrate {expr} over; pass dx(domain=mesh).')
    if len(found) > 1:
        raise FormError('An integrand may only refer to one mesh.')
    return found[0]


class Integral:
    """ One integrand over one measure on one mesh. """

    def __init__(self, integrand:Expr, measure:Measure, mesh) -> None:
        self.integrand = integrand
        self.measure = measure
        self.mesh = mesh

    def reconstruct(self, integrand:Expr) -> "Integral":
        return Integral(integrand, self.measure, self.mesh)

    def __str__(self) -> str:
        return f'{self.integrand} * {self.measure}'


def _sorted_arguments(arguments:Iterable[Argument]) -> Tuple[Argument, ...]:
    arguments = sorted(set(arguments), key=lambda a: a.number)
    numbers = [a.number for a in arguments]
    if numbers != list(range(len(numbers))):
        raise ArityError(f'Form arguments must be numbered from 0 without gaps, got {numbers}.')
    return tuple(arguments)


class Form:
    """ Sum of integrals sharing one argument tuple. The arguments are kept even when every
        integrand has folded to zero, so the assembled tensor still has the right rank and size. """

    def __init__(self, integrals:Sequence[Integral], arguments:Iterable[Argument]=None) -> None:
        integrals = list(integrals)
        if arguments is None:
            arguments = frozenset().union(*[i.integrand.arguments for i in integrals])
        self.arguments = _sorted_arguments(arguments)
        for integral in integrals:
            args = integral.integrand.arguments
            if not isinstance(integral.integrand, Zero) and args != frozenset(self.arguments):
                raise ArityError(f'Integral {integral} does not match the form arguments.')
        meshes = {id(i.mesh) for i in integrals}
        if len(meshes) > 1:
            raise FormError('All integrals of a form must be over the same mesh.')
        self.integrals = [i for i in integrals if not isinstance(i.integrand, Zero)]
        self._mesh = integrals[0].mesh if integrals else None

    @property
    def arity(self) -> int:
        return len(self.arguments)

    @property
    def mesh(self):
        return self._mesh

    def coefficients(self) -> List[Coefficient]:
        """ Every coefficient in the form, in order of first appearance. """
        found = {}
        for integral in self.integrals:
            for node in iter_nodes(integral.integrand):
                if isinstance(node, Coefficient):
                    found.setdefault(id(node), node)
        return list(found.values())

    def has_facet_integrals(self) -> bool:
        return any(i.measure.kind != CELL for i in self.integrals)

    def empty(self) -> bool:
        return not self.integrals

    def reconstruct(self, integrands:Sequence[Expr], arguments:Iterable[Argument]) -> "Form":
        """ Copy with new integrands for the same measures. """
        form = Form([i.reconstruct(e) for i, e in zip(self.integrals, integrands)], arguments)
        form._mesh = self._mesh
        return form

    def _combine(self, other:"Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        if self.integrals and other.integrals and self.mesh is not other.mesh:
            raise FormError('Cannot add forms over different meshes.')
        if self.arguments != other.arguments and not (self.empty() and other.empty()):
            if self.empty() and not self.arguments:
                return other
            if other.empty() and not other.arguments:
                return self
            raise ArityError('Cannot add forms with different arguments.')
        form = Form(self.integrals + other.integrals, self.arguments)
        form._mesh = self.mesh or other.mesh
        return form

    def __add__(self, other):
        return self._combine(other)

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        return NotImplemented

    def __sub__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self._combine(-other)

    def __mul__(self, scalar):
        if isinstance(scalar, Form):
            return NotImplemented
        scalar = as_expr(scalar)
        if scalar.shape or scalar.arguments:
            raise FormError('Forms can only be scaled by scalars without arguments.')
        return self.reconstruct([multiply(scalar, i.integrand) for i in self.integrals], self.arguments)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __str__(self) -> str:
        if not self.integrals:
            return "0"
        return " + ".join(map(str, self.integrals))

    def __repr__(self) -> str:
        return f'<Form (arity {self.arity}): {self}>'


class DirichletBC:
    """ Strong condition u = value on the facets carrying any of <tags>.
        The value may depend on the spatial coordinate but not on coefficients or arguments. """

    def __init__(self, space, value, tags:Union[int, Iterable[int]]) -> None:
        value = as_expr(value)
        if value.shape != space.value_shape:
            raise ShapeMismatchError(f'Boundary value shape {value.shape} does not match '
                                     f'the space value shape {space.value_shape}.')
        for node in iter_nodes(value):
            if isinstance(node, (Argument, Coefficient, FacetNormal)):
                raise FormError(f'Boundary values may only depend on the spatial coordinate, found {node}.')
            if isinstance(node, SpatialCoordinate) and node.mesh is not space.mesh:
                raise FormError('Boundary value refers to another mesh.')
        self.space = space
        self.value = value
        self.tags = _as_tags(tags)

    @property
    def depends_on_coordinates(self) -> bool:
        return any(isinstance(node, SpatialCoordinate) for node in iter_nodes(self.value))

    def __repr__(self) -> str:
        return f'<DirichletBC: {self.value} on tags {self.tags}>'
