""" Mesh generators for the built-in cases. Curved domains are triangulated from sampled boundary
    rings plus a hexagonal interior lattice with scipy's Delaunay, then cells outside the domain are cut. """

from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.spatial import Delaunay

from .mesh import Mesh, MeshError, signed_areas

# Tags of the tube geometry.
TUBE_OUTER = 1
TUBE_HOLE = 2

# Tags of the channel geometry.
CHANNEL_INFLOW = 1
CHANNEL_OUTFLOW = 2
CHANNEL_WALLS = 3
CHANNEL_OBSTACLE = 4

Points = np.ndarray
Classifier = Callable[[Points], np.ndarray]


def circle_points(center:Sequence[float], radius:float, size:float) -> Points:
    """ Evenly spaced points on a circle with spacing close to <size>. """
    n = max(8, int(np.ceil(2.0 * np.pi * radius / size)))
    angles = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])


def segment_points(start:Sequence[float], end:Sequence[float], size:float) -> Points:
    """ Evenly spaced points from <start> (included) to <end> (excluded). """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    n = max(1, int(np.ceil(np.linalg.norm(end - start) / size)))
    t = np.arange(n) / n
    return start + t[:, None] * (end - start)


def hex_lattice(lower:Sequence[float], upper:Sequence[float], size:float) -> Points:
    """ Points of an equilateral lattice with spacing <size> covering the box [lower, upper]. """
    dy = size * np.sqrt(3.0) / 2.0
    ys = np.arange(lower[1], upper[1] + dy, dy)
    rows = []
    for j, y in enumerate(ys):
        xs = np.arange(lower[0] + (j % 2) * size / 2.0, upper[0] + size, size)
        rows.append(np.column_stack([xs, np.full(len(xs), y)]))
    return np.vstack(rows)


def triangulate(points:Points, inside:Classifier) -> Tuple[Points, np.ndarray]:
    """ Delaunay-triangulate <points> and keep counter-clockwise cells whose centroid is <inside>.
        Unused points are dropped and the rest renumbered. """
    simplices = Delaunay(points).simplices.astype(np.int64)
    areas = signed_areas(points, simplices)
    flip = areas < 0.0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    areas = np.abs(areas)
    centroids = points[simplices].mean(axis=1)
    keep = (areas > 1e-10 * areas.max()) & inside(centroids)
    cells = simplices[keep]
    used = np.unique(cells)
    renumber = np.full(len(points), -1, dtype=np.int64)
    renumber[used] = np.arange(len(used))
    return points[used], renumber[cells]


def mark_boundary(vertices:Points, cells:np.ndarray, classify:Classifier) -> Mesh:
    """ Tag every boundary edge by its midpoint. A zero tag means the classifier missed the edge. """
    bare = Mesh(vertices, cells)
    edges = bare.edges[bare.boundary_edges]
    midpoints = vertices[edges].mean(axis=1)
    tags = classify(midpoints)
    missed = np.flatnonzero(tags == 0)
    if missed.size:
        x, y = midpoints[missed[0]]
        raise MeshError(f'Boundary edge at ({x:.4f}, {y:.4f}) does not belong to any tagged boundary.')
    markers = {(int(a), int(b)): int(t) for (a, b), t in zip(edges, tags)}
    return Mesh(vertices, cells, markers)


def annulus_mesh(outer_radius=1.0, hole_radius=0.2, hole_center=(0.5, 0.0), size=0.06) -> Mesh:
    """ Disk around the origin with an off-center circular hole. Outer circle tag 1, hole tag 2. """
    center = np.asarray(hole_center, dtype=float)
    if np.linalg.norm(center) + hole_radius >= outer_radius:
        raise MeshError('The hole must lie strictly inside the outer circle.')
    margin = 0.6 * size
    lattice = hex_lattice((-outer_radius, -outer_radius), (outer_radius, outer_radius), size)
    r_outer = np.linalg.norm(lattice, axis=1)
    r_hole = np.linalg.norm(lattice - center, axis=1)
    lattice = lattice[(r_outer < outer_radius - margin) & (r_hole > hole_radius + margin)]
    points = np.vstack([circle_points((0.0, 0.0), outer_radius, size),
                        circle_points(center, hole_radius, size),
                        lattice])

    def inside(p:Points) -> np.ndarray:
        return (np.linalg.norm(p, axis=1) < outer_radius) & (np.linalg.norm(p - center, axis=1) > hole_radius)

    def classify(p:Points) -> np.ndarray:
        tags = np.zeros(len(p), dtype=np.int64)
        tags[np.abs(np.linalg.norm(p, axis=1) - outer_radius) < 0.5 * size] = TUBE_OUTER
        tags[np.abs(np.linalg.norm(p - center, axis=1) - hole_radius) < 0.5 * size] = TUBE_HOLE
        return tags

    vertices, cells = triangulate(points, inside)
    return mark_boundary(vertices, cells, classify)


def channel_mesh(size=0.033, obstacle_center=(0.5, 0.5), obstacle_radius=0.13) -> Mesh:
    """ Unit square channel around a circular obstacle.
        Tags: inflow (left) 1, outflow (right) 2, walls (top and bottom) 3, obstacle 4. """
    center = np.asarray(obstacle_center, dtype=float)
    if np.any(center - obstacle_radius <= 0.0) or np.any(center + obstacle_radius >= 1.0):
        raise MeshError('The obstacle must lie strictly inside the unit square.')
    corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    perimeter = np.vstack([segment_points(corners[i], corners[(i + 1) % 4], size) for i in range(4)])
    margin = 0.6 * size
    lattice = hex_lattice((0.0, 0.0), (1.0, 1.0), size)
    in_box = np.all((lattice > margin) & (lattice < 1.0 - margin), axis=1)
    off_obstacle = np.linalg.norm(lattice - center, axis=1) > obstacle_radius + margin
    points = np.vstack([perimeter, circle_points(center, obstacle_radius, size), lattice[in_box & off_obstacle]])

    def inside(p:Points) -> np.ndarray:
        return np.linalg.norm(p - center, axis=1) > obstacle_radius

    def classify(p:Points) -> np.ndarray:
        tol = 1e-9
        tags = np.zeros(len(p), dtype=np.int64)
        tags[np.abs(p[:, 1]) < tol] = CHANNEL_WALLS
        tags[np.abs(p[:, 1] - 1.0) < tol] = CHANNEL_WALLS
        tags[np.abs(p[:, 0]) < tol] = CHANNEL_INFLOW
        tags[np.abs(p[:, 0] - 1.0) < tol] = CHANNEL_OUTFLOW
        near = np.abs(np.linalg.norm(p - center, axis=1) - obstacle_radius) < 0.5 * size
        tags[near] = CHANNEL_OBSTACLE
        return tags

    vertices, cells = triangulate(points, inside)
    return mark_boundary(vertices, cells, classify)


def unit_square_mesh(n:int) -> Mesh:
    """ Structured n x n square grid, each square cut along its rising diagonal.
        Tags: bottom 1, right 2, top 3, left 4. """
    ticks = np.linspace(0.0, 1.0, n + 1)
    x, y = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([x.ravel(), y.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            v0 = j * (n + 1) + i
            v1, v2, v3 = v0 + 1, v0 + n + 2, v0 + n + 1
            cells += [(v0, v1, v2), (v0, v2, v3)]
    markers = {}
    for i in range(n):
        markers[(i, i + 1)] = 1
        markers[(i * (n + 1) + n, (i + 1) * (n + 1) + n)] = 2
        markers[(n * (n + 1) + i, n * (n + 1) + i + 1)] = 3
        markers[(i * (n + 1), (i + 1) * (n + 1))] = 4
    return Mesh(vertices, cells, markers)
