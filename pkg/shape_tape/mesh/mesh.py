from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from shape_tape.util.log import log

Facet = Tuple[int, int]  # Boundary edge as a sorted pair of vertex indices.

DEGENERATE_AREA_RATIO = 1e-14  # Cells with signed area below this fraction of the mean cell area are degenerate.
_EQUILATERAL_SINE = np.sqrt(3.0) / 2.0


class MeshError(ValueError):
    """ Raised when mesh data violates the structural invariants of a triangle mesh. """


class DegenerateMeshError(MeshError):
    """ Raised when a cell has collapsed or inverted. """

    def __init__(self, message:str, cell:int) -> None:
        super().__init__(message)
        self.cell = cell  # Index of the first offending cell.


def signed_areas(vertices:np.ndarray, cells:np.ndarray) -> np.ndarray:
    """ Return the signed area of each cell. Counter-clockwise cells are positive. """
    p0, p1, p2 = (vertices[cells[:, i]] for i in range(3))
    e1 = p1 - p0
    e2 = p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def scaled_jacobians(vertices:np.ndarray, cells:np.ndarray) -> np.ndarray:
    """ Return the scaled Jacobian of each cell: the smallest corner sine, normalized so that
        an equilateral triangle has quality 1. Inverted cells come out negative. """
    p = [vertices[cells[:, i]] for i in range(3)]
    double_area = 2.0 * signed_areas(vertices, cells)
    quality = np.full(len(cells), np.inf)
    for i in range(3):
        a = p[(i + 1) % 3] - p[i]
        b = p[(i + 2) % 3] - p[i]
        lengths = np.hypot(a[:, 0], a[:, 1]) * np.hypot(b[:, 0], b[:, 1])
        with np.errstate(divide='ignore', invalid='ignore'):
            corner = np.where(lengths > 0.0, double_area / lengths, 0.0)
        quality = np.minimum(quality, corner)
    return quality / _EQUILATERAL_SINE


class Mesh:
    """ Simplicial 2-D mesh. Connectivity and markers are fixed; only the coordinates ever change.

        Local edge i of a cell is the edge opposite its local vertex i. Coordinates are also
        exposed as a flat vector in the layout of a vector CG1 function: all x values, then all y values. """

    def __init__(self, vertices:Iterable, cells:Iterable, facet_markers:Mapping[Facet, int]=None,
                 *, fix_orientation=True) -> None:
        vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        cells = np.array(cells, dtype=np.int64).reshape(-1, 3)
        nv = len(vertices)
        if cells.size and (cells.min() < 0 or cells.max() >= nv):
            raise MeshError(f'Cell vertex index out of range for {nv} vertices.')
        areas = signed_areas(vertices, cells)
        flipped = np.flatnonzero(areas < 0.0)
        if flipped.size and fix_orientation:
            log.warning("Mesh orientation repaired: %d clockwise cell(s) reordered (first: %d).",
                        flipped.size, flipped[0])
            cells[flipped] = cells[flipped][:, [0, 2, 1]]
            areas[flipped] = -areas[flipped]
        mean_area = np.abs(areas).mean() if areas.size else 0.0
        bad = np.flatnonzero(areas <= DEGENERATE_AREA_RATIO * mean_area)
        if bad.size:
            raise DegenerateMeshError(f'Cell {bad[0]} has non-positive area {areas[bad[0]]:.3e}.', int(bad[0]))
        vertices.setflags(write=False)
        cells.setflags(write=False)
        self._vertices = vertices  # Vertex coordinates, shape (nv, 2). Replaced (never mutated) on moves.
        self._cells = cells        # Triangle connectivity, shape (nc, 3), counter-clockwise.
        self._state = 0            # Counter bumped on every coordinate change; keys geometry caches.
        self.block_variable = None  # Tape variable holding the current coordinates, if any.
        self.coordinate_space = None  # Vector CG1 space over the coordinates, attached by the fem package.
        self._build_topology()
        self._facet_markers = self._check_markers(facet_markers or {})

    def _build_topology(self) -> None:
        """ Number the edges once. Local edge i joins local vertices (i+1)%3 and (i+2)%3. """
        cells = self._cells
        local = np.stack([cells[:, [1, 2]], cells[:, [2, 0]], cells[:, [0, 1]]], axis=1)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        self._edges = edges                                # Sorted vertex pairs, shape (ne, 2).
        self._cell_edges = inverse.reshape(-1, 3)          # Global edge index of each local edge.
        boundary = np.flatnonzero(counts == 1)
        # Only boundary edges are looked up by slot, and each of those appears once in the flattened list.
        slots = np.full(len(edges), -1, dtype=np.int64)
        slots[inverse] = np.arange(len(inverse))
        self._boundary_edges = boundary                    # Indices of edges owned by one cell.
        self._edge_slot = slots                            # Flattened (cell*3 + local) slot of each boundary edge.
        self._edge_index = {tuple(e): i for i, e in enumerate(edges.tolist())}

    def _check_markers(self, facet_markers:Mapping[Facet, int]) -> Dict[Facet, int]:
        boundary = set(self._boundary_edges.tolist())
        markers = {}
        for (a, b), tag in facet_markers.items():
            facet = (min(a, b), max(a, b))
            index = self._edge_index.get(facet)
            if index is None:
                raise MeshError(f'Marked facet {facet} is not an edge of the mesh.')
            if index not in boundary:
                raise MeshError(f'Marked facet {facet} (tag {tag}) is not on the boundary.')
            markers[facet] = int(tag)
        return dict(sorted(markers.items()))

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def cells(self) -> np.ndarray:
        return self._cells

    @property
    def facet_markers(self) -> Dict[Facet, int]:
        return dict(self._facet_markers)

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def cell_edges(self) -> np.ndarray:
        return self._cell_edges

    @property
    def boundary_edges(self) -> np.ndarray:
        return self._boundary_edges

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_cells(self) -> int:
        return len(self._cells)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def state(self) -> int:
        """ Version counter of the coordinates. Any cached geometry keyed on an older state is stale. """
        return self._state

    def tags(self) -> list:
        return sorted(set(self._facet_markers.values()))

    def facets(self, tags:Iterable[int]=None) -> np.ndarray:
        """ Return the sorted edge indices of marked facets, optionally restricted to <tags>. """
        wanted = None if tags is None else set(tags)
        found = [self._edge_index[f] for f, t in self._facet_markers.items() if wanted is None or t in wanted]
        return np.array(sorted(found), dtype=np.int64)

    def facet_cells(self, edge_ids:np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """ Return the owning cell and the local edge number of each boundary edge. """
        slots = self._edge_slot[edge_ids]
        return slots // 3, slots % 3

    def marked_vertices(self, tags:Iterable[int]=None) -> np.ndarray:
        """ Return the sorted vertices lying on marked facets (restricted to <tags> if given). """
        ids = self.facets(tags)
        return np.unique(self._edges[ids]) if ids.size else np.zeros(0, dtype=np.int64)

    def cell_areas(self, vertices:np.ndarray=None) -> np.ndarray:
        return signed_areas(self._vertices if vertices is None else vertices, self._cells)

    def quality(self, vertices:np.ndarray=None) -> np.ndarray:
        return scaled_jacobians(self._vertices if vertices is None else vertices, self._cells)

    @property
    def coordinates(self) -> np.ndarray:
        """ Flat coordinate vector in vector CG1 dof layout (a copy). """
        return self._vertices.T.reshape(-1).copy()

    def _vertices_from(self, coordinates:np.ndarray) -> np.ndarray:
        coordinates = np.asarray(coordinates, dtype=float)
        if coordinates.shape != (2 * self.num_vertices,):
            raise MeshError(f'Expected {2 * self.num_vertices} coordinate values, got {coordinates.shape}.')
        return coordinates.reshape(2, -1).T.copy()

    def _write(self, coordinates:np.ndarray) -> None:
        vertices = self._vertices_from(coordinates)
        vertices.setflags(write=False)
        self._vertices = vertices
        self._state += 1

    def set_coordinates(self, coordinates:np.ndarray) -> None:
        """ Overwrite every vertex position without any validity check.
            The new coordinates are a fresh value that no tape has seen. """
        self._write(coordinates)
        self.block_variable = None

    def tape_value(self) -> np.ndarray:
        return self.coordinates

    def restore_tape_value(self, coordinates:np.ndarray) -> None:
        """ Put back a saved coordinate vector while keeping the current tape variable. """
        self._write(coordinates)

    def check_coordinates(self, coordinates:np.ndarray) -> None:
        """ Raise DegenerateMeshError if <coordinates> would collapse or invert any cell. """
        vertices = self._vertices_from(coordinates)
        threshold = DEGENERATE_AREA_RATIO * np.abs(self.cell_areas()).mean()
        areas = self.cell_areas(vertices)
        bad = np.flatnonzero(areas <= threshold)
        if bad.size:
            c = int(bad[0])
            raise DegenerateMeshError(f'Cell {c} would have non-positive area {areas[c]:.3e} after the move.', c)

    def displace(self, displacement:np.ndarray) -> None:
        """ Add a flat displacement vector to the coordinates. The mesh is unchanged if any cell would invert. """
        new_coordinates = self.coordinates + np.asarray(displacement, dtype=float)
        self.check_coordinates(new_coordinates)
        self.set_coordinates(new_coordinates)

    def copy(self) -> "Mesh":
        return Mesh(self._vertices, self._cells, self._facet_markers)

    def __repr__(self) -> str:
        return f'<Mesh: {self.num_vertices} vertices, {self.num_cells} cells, tags {self.tags()}>'
