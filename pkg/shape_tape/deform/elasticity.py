""" Linear elasticity on the reference mesh: the Lame parameter field and the extension of boundary
    tractions to a volume displacement. """

from typing import Iterable, NamedTuple, Union

from shape_tape import fem, tape
from shape_tape.fem import FEFunction, FunctionSpace, SingularMatrixError
from shape_tape.forms import Constant, DirichletBC, Expr, Identity, TestFunction, TrialFunction, Zero, dot, ds, \
    dx, grad, inner, sym, tr
from shape_tape.mesh import Mesh

OUTER_VALUE = 1.0       # Shear modulus on the outer boundary.
OBSTACLE_VALUE = 500.0  # Shear modulus on the obstacle, where cells must stay rigid.


class LameField(NamedTuple):
    """ Lame parameters of the deformation model. mu may be a function or a constant. """

    mu: Union[FEFunction, Expr]
    lmbda: float = 0.0


def strain(u:Expr) -> Expr:
    return sym(grad(u))


def stress(u:Expr, lame:LameField) -> Expr:
    eps = strain(u)
    sigma = 2.0 * lame.mu * eps
    if lame.lmbda:
        sigma = sigma + lame.lmbda * tr(eps) * Identity()
    return sigma


def solve_lame_field(mesh:Mesh, outer_tags:Iterable[int], obstacle_tags:Iterable[int],
                     outer_value=OUTER_VALUE, obstacle_value=OBSTACLE_VALUE) -> LameField:
    """ Harmonic shear modulus: the CG1 solution of the Laplace equation equal to <outer_value> on the outer
        tags and to <obstacle_value> on the obstacle tags. It is computed off the tape. """
    outer_tags = tuple(outer_tags)
    obstacle_tags = tuple(obstacle_tags)
    if not outer_tags or not obstacle_tags:
        raise ValueError('The Lame field needs both outer and obstacle tags.')
    V = FunctionSpace(mesh, 1)
    u = TrialFunction(V)
    v = TestFunction(V)
    mu = FEFunction(V, name="mu")
    bcs = [DirichletBC(V, outer_value, outer_tags), DirichletBC(V, obstacle_value, obstacle_tags)]
    with tape.no_recording():
        fem.solve_linear(inner(grad(u), grad(v)) * dx, Constant(0.0) * v * dx(domain=mesh), bcs, mu)
    return LameField(mu)


def elasticity_extend(mesh:Mesh, h:FEFunction, fixed_tags:Iterable[int], traction_tags:Iterable[int],
                      lame:LameField=None, name:str="s") -> FEFunction:
    """ Displacement s with  int sigma(s) : eps(t) dx = int h . t ds(traction)  for every test field t,
        and s = 0 on the fixed tags. <h> is a vector CG1 field on <mesh>; the solve is recorded. """
    fixed_tags = tuple(fixed_tags)
    if not fixed_tags:
        raise SingularMatrixError('Elasticity without fixed boundary parts admits rigid motions.')
    V = h.space
    if V.mesh is not mesh:
        raise ValueError(f'{h} does not live on {mesh}.')
    lame = lame or LameField(Constant(1.0))
    s = FEFunction(V, name=name)
    u = TrialFunction(V)
    t = TestFunction(V)
    a = inner(stress(u, lame), strain(t)) * dx
    L = dot(h, t) * ds(tuple(traction_tags), domain=mesh)
    tape.solve_linear(a, L, [DirichletBC(V, Zero((2,)), fixed_tags)], s)
    return s
