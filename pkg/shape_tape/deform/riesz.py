""" Riesz maps: inner products on control spaces, used to turn gradients (co-vectors) into directions. """

from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from shape_tape.fem import BoundaryFunctionSpace, FEFunction, Factorization, FunctionSpace, assemble, \
    coordinate_space, dirichlet_dofs
from shape_tape.forms import Constant, DirichletBC, TestFunction, TrialFunction, Zero, ds, dx, grad, inner

from .elasticity import LameField, stress, strain

RIESZ_KINDS = ("l2", "h1", "elasticity", "boundary-l2")


def eliminate(matrix:sparse.spmatrix, dofs:np.ndarray) -> sparse.csr_matrix:
    """ Zero the rows and columns of <dofs> and put ones on their diagonal. Symmetric matrices stay symmetric. """
    mask = np.zeros(matrix.shape[0])
    mask[dofs] = 1.0
    keep = sparse.diags(1.0 - mask)
    return (keep @ matrix @ keep + sparse.diags(mask)).tocsr()


def _operator(space:FunctionSpace, kind:str, lame:LameField) -> sparse.spmatrix:
    u = TrialFunction(space)
    v = TestFunction(space)
    if kind == "l2":
        return assemble(inner(u, v) * dx)
    if kind == "h1":
        return assemble((inner(u, v) + inner(grad(u), grad(v))) * dx)
    if lame is None:
        lame = LameField(Constant(1.0))
    return assemble(inner(stress(u, lame), strain(v)) * dx)


class RieszMap:
    """ Symmetric positive definite operator M on a control space with zero rows and columns on fixed dofs.

        kind "l2" is the mass matrix, "h1" mass plus stiffness, "elasticity" the elasticity operator
        (with a Lame field, or mu = 1), all over a space on the mesh. "boundary-l2" acts on a boundary space:
        the facet mass matrix of the design facets pulled back to boundary vertices; vertices off the design
        facets are fixed. """

    def __init__(self, space, kind:str="h1", fixed_tags:Iterable[int]=(), design_tags:Iterable[int]=None,
                 lame:LameField=None) -> None:
        if kind not in RIESZ_KINDS:
            raise ValueError(f'Unknown Riesz map {kind!r}; expected one of {RIESZ_KINDS}.')
        self.space = space
        self.kind = kind
        if kind == "boundary-l2":
            matrix, fixed = self._boundary_operator(space, design_tags)
        else:
            if isinstance(space, BoundaryFunctionSpace):
                raise ValueError(f'The {kind} map needs a space over the whole mesh.')
            matrix = _operator(space, kind, lame)
            fixed_tags = tuple(fixed_tags)
            if fixed_tags:
                fixed = dirichlet_dofs([DirichletBC(space, Zero(space.value_shape), fixed_tags)])
            else:
                fixed = np.zeros(0, dtype=np.int64)
        matrix = 0.5 * (matrix + matrix.T)
        self.fixed = fixed                            # Dofs held at zero.
        self.matrix = eliminate(matrix, fixed)        # The operator after elimination.
        self._factor = Factorization(self.matrix)

    @staticmethod
    def _boundary_operator(space:BoundaryFunctionSpace, design_tags:Iterable[int]):
        if not isinstance(space, BoundaryFunctionSpace):
            raise ValueError('The boundary-l2 map needs a boundary function space.')
        if not design_tags:
            raise ValueError('The boundary-l2 map needs design tags.')
        boundary = space.mesh
        parent = boundary.parent
        full = coordinate_space(parent)
        mass = assemble(inner(TrialFunction(full), TestFunction(full)) * ds(tuple(design_tags)))
        scatter = boundary.scatter_matrix()
        matrix = (scatter.T @ mass @ scatter).tocsr()
        design = set(parent.marked_vertices(design_tags).tolist())
        off = np.array([i for i, v in enumerate(boundary.vertex_map.tolist()) if v not in design], dtype=np.int64)
        return matrix, np.concatenate([off, off + boundary.num_vertices])

    def inner(self, a:np.ndarray, b:np.ndarray) -> float:
        return float(np.dot(a, self.matrix @ b))

    def norm(self, a:np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(a, a), 0.0)))

    def representation(self, gradient:np.ndarray, name:str="riesz") -> FEFunction:
        """ The function r with M r = gradient on free dofs and r = 0 on fixed dofs. """
        rhs = np.array(gradient, dtype=float)
        if rhs.shape != (self.space.dim,):
            raise ValueError(f'Gradient has shape {rhs.shape}, the space has {self.space.dim} dofs.')
        rhs[self.fixed] = 0.0
        return FEFunction(self.space, self._factor.solve(rhs), name)

    def __repr__(self) -> str:
        return f'<RieszMap {self.kind} on {self.space}, {len(self.fixed)} fixed dofs>'


def riesz_representation(riesz:RieszMap, gradient:np.ndarray) -> FEFunction:
    return riesz.representation(gradient)


def riesz_maps(spaces:Sequence, kind:str, **options) -> list:
    """ One map of <kind> per control space. Maps on the same space are shared. """
    built = {}
    maps = []
    for space in spaces:
        if id(space) not in built:
            built[id(space)] = RieszMap(space, kind, **options)
        maps.append(built[id(space)])
    return maps
