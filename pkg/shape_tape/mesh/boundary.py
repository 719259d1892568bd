from typing import Iterable

import numpy as np
from scipy import sparse

from .mesh import Mesh, MeshError


class BoundaryMesh:
    """ The vertices of a parent mesh that lie on marked facets, numbered in increasing parent order. """

    def __init__(self, parent:Mesh, boundary_vertices:Iterable[int]) -> None:
        vertex_map = np.array(sorted(set(int(v) for v in boundary_vertices)), dtype=np.int64)
        self.parent = parent            # Mesh the boundary was extracted from.
        self.vertex_map = vertex_map    # Boundary-local index -> parent vertex index (injective).

    @property
    def boundary_vertices(self) -> list:
        return self.vertex_map.tolist()

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_map)

    @property
    def vertices(self) -> np.ndarray:
        """ Current coordinates of the boundary vertices, following the parent. """
        return self.parent.vertices[self.vertex_map]

    def scatter_matrix(self) -> sparse.csr_matrix:
        """ Sparse map from boundary vector CG1 dofs to parent vector CG1 dofs.
            Both sides use the component-major layout; the gather is the transpose. """
        nv = self.parent.num_vertices
        nb = self.num_vertices
        rows = np.concatenate([self.vertex_map, self.vertex_map + nv])
        cols = np.arange(2 * nb)
        data = np.ones(2 * nb)
        return sparse.csr_matrix((data, (rows, cols)), shape=(2 * nv, 2 * nb))

    def __repr__(self) -> str:
        return f'<BoundaryMesh: {self.num_vertices} of {self.parent.num_vertices} vertices>'


def extract_boundary(mesh:Mesh, tags:Iterable[int]=None) -> BoundaryMesh:
    """ Collect every vertex incident to a marked facet (optionally only facets with one of <tags>). """
    vertices = mesh.marked_vertices(tags)
    if not vertices.size:
        raise MeshError('Mesh has no marked boundary facets to extract.')
    return BoundaryMesh(mesh, vertices)
