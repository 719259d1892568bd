""" Finite element spaces on triangle meshes.

    A space is a list of scalar Lagrange components. Dofs are numbered in blocks, component by component.
    Within a CG1 component the dof of vertex v is v; a CG2 component appends one dof per mesh edge after
    the vertex dofs. A vector CG1 space therefore has the layout of Mesh.coordinates. """

from typing import List, Sequence, Tuple

import numpy as np

from shape_tape.mesh import BoundaryMesh, Mesh

from .element import ELEMENTS


def _scalar_dim(mesh:Mesh, degree:int) -> int:
    return mesh.num_vertices + (mesh.num_edges if degree == 2 else 0)


def _scalar_cell_dofs(mesh:Mesh, degree:int) -> np.ndarray:
    if degree == 1:
        return mesh.cells
    return np.hstack([mesh.cells, mesh.num_vertices + mesh.cell_edges])


def _scalar_dof_coordinates(mesh:Mesh, degree:int) -> np.ndarray:
    vertices = mesh.vertices
    if degree == 1:
        return vertices.copy()
    return np.vstack([vertices, vertices[mesh.edges].mean(axis=1)])


class FunctionSpace:
    """ Scalar CG space of the given degree. Subclasses stack several scalar components. """

    usable_in_forms = True

    def __init__(self, mesh:Mesh, degree:int=1) -> None:
        self._init_components(mesh, [degree], ())

    def _init_components(self, mesh:Mesh, degrees:Sequence[int], value_shape:Tuple[int, ...]) -> None:
        self.mesh = mesh                          # Mesh the space lives on.
        self.components = list(degrees)           # Degree of each scalar component.
        self.value_shape = value_shape            # Shape of a function value at a point.
        sizes = [_scalar_dim(mesh, d) for d in degrees]
        self.component_offsets = np.cumsum([0] + sizes[:-1]).tolist()  # First global dof of each component.
        self.dim = sum(sizes)                     # Total number of dofs.
        local_components = []
        local_basis = []
        for c, d in enumerate(degrees):
            n = ELEMENTS[d].num_dofs
            local_components += [c] * n
            local_basis += range(n)
        self.local_components = np.array(local_components)  # Component of each local dof.
        self.local_basis = np.array(local_basis)            # Element basis index of each local dof.
        self._cell_dofs = None

    @property
    def degree(self) -> int:
        return max(self.components)

    @property
    def subspaces(self) -> list:
        """ Standalone component spaces of a mixed space. Empty unless the space is mixed. """
        return []

    @property
    def cell_dofs(self) -> np.ndarray:
        """ Global dofs of each cell, shape (nc, n_local), ordered component by component. """
        if self._cell_dofs is None:
            blocks = [offset + _scalar_cell_dofs(self.mesh, d)
                      for d, offset in zip(self.components, self.component_offsets)]
            self._cell_dofs = np.hstack(blocks)
            self._cell_dofs.setflags(write=False)
        return self._cell_dofs

    def component_dofs(self, c:int) -> np.ndarray:
        start = self.component_offsets[c]
        return np.arange(start, start + _scalar_dim(self.mesh, self.components[c]))

    def component_dof_coordinates(self, c:int) -> np.ndarray:
        return _scalar_dof_coordinates(self.mesh, self.components[c])

    def dof_coordinates(self) -> np.ndarray:
        """ Current position of every dof, shape (dim, 2). """
        return np.vstack([self.component_dof_coordinates(c) for c in range(len(self.components))])

    def dof_components(self) -> np.ndarray:
        """ Value component of every dof. """
        sizes = [_scalar_dim(self.mesh, d) for d in self.components]
        return np.repeat(np.arange(len(sizes)), sizes)

    def boundary_component_dofs(self, c:int, facets:np.ndarray) -> np.ndarray:
        """ Sorted global dofs of component <c> lying on the given mesh edges. """
        mesh = self.mesh
        scalar = np.unique(mesh.edges[facets])
        if self.components[c] == 2:
            scalar = np.concatenate([scalar, mesh.num_vertices + np.sort(facets)])
        return self.component_offsets[c] + scalar

    def sub(self, i:int) -> "SubSpace":
        """ View of one value component (or of the velocity or pressure block of a mixed space). """
        if not self.value_shape:
            raise ValueError('A scalar space has no subspaces.')
        return SubSpace(self, [i], ())

    def __repr__(self) -> str:
        return f'<{type(self).__name__}: CG{self.degree}, {self.dim} dofs>'


class VectorFunctionSpace(FunctionSpace):
    """ Two-component CG space. """

    def __init__(self, mesh:Mesh, degree:int=1) -> None:
        self._init_components(mesh, [degree, degree], (2,))


class TaylorHoodSpace(FunctionSpace):
    """ Mixed velocity-pressure space: CG2 vector velocity followed by CG1 pressure.
        A function value is (u_x, u_y, p). """

    def __init__(self, mesh:Mesh) -> None:
        self._init_components(mesh, [2, 2, 1], (3,))
        self._subspaces = [VectorFunctionSpace(mesh, 2), FunctionSpace(mesh, 1)]

    @property
    def subspaces(self) -> list:
        return self._subspaces

    def block_dofs(self, i:int) -> np.ndarray:
        """ Global dofs of the velocity (0) or pressure (1) block. """
        components = [[0, 1], [2]][i]
        return np.concatenate([self.component_dofs(c) for c in components])

    def sub(self, i:int) -> "SubSpace":
        if i == 0:
            return SubSpace(self, [0, 1], (2,))
        if i == 1:
            return SubSpace(self, [2], ())
        raise ValueError(f'A velocity-pressure space has subspaces 0 and 1, not {i}.')


class SubSpace:
    """ Some components of a parent space. Only used to constrain dofs; functions and forms need full spaces. """

    usable_in_forms = False

    def __init__(self, parent:FunctionSpace, component_indices:List[int], value_shape:Tuple[int, ...]) -> None:
        if any(not 0 <= c < len(parent.components) for c in component_indices):
            raise ValueError(f'{parent} has no component {component_indices}.')
        self.parent = parent
        self.component_indices = list(component_indices)
        self.value_shape = value_shape

    @property
    def mesh(self) -> Mesh:
        return self.parent.mesh

    def __repr__(self) -> str:
        return f'<SubSpace {self.component_indices} of {self.parent}>'


class BoundaryFunctionSpace:
    """ Vector CG1 space on the vertices of a boundary mesh, in component-major layout.
        Its functions can be controls and can be transferred to the parent mesh, but cannot appear in forms. """

    usable_in_forms = False
    components = [1, 1]
    value_shape = (2,)
    degree = 1

    def __init__(self, mesh:BoundaryMesh) -> None:
        self.mesh = mesh
        self.dim = 2 * mesh.num_vertices

    @property
    def subspaces(self) -> list:
        return []

    def dof_coordinates(self) -> np.ndarray:
        vertices = self.mesh.vertices
        return np.vstack([vertices, vertices])

    def dof_components(self) -> np.ndarray:
        return np.repeat([0, 1], self.mesh.num_vertices)

    def __repr__(self) -> str:
        return f'<BoundaryFunctionSpace: {self.dim} dofs>'


def coordinate_space(mesh:Mesh) -> VectorFunctionSpace:
    """ The vector CG1 space whose dofs are the coordinates of <mesh>. One instance per mesh. """
    if mesh.coordinate_space is None:
        mesh.coordinate_space = VectorFunctionSpace(mesh, 1)
    return mesh.coordinate_space
