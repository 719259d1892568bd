""" Test package for shape-tape. __init__.py builds the tiny meshes shared by the test modules. """

from shape_tape.mesh import Mesh, unit_square_mesh

# Unit right triangle with every edge marked: bottom 1, hypotenuse 2, left 3.
TRIANGLE_VERTICES = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
TRIANGLE_MARKERS = {(0, 1): 1, (1, 2): 2, (0, 2): 3}


def unit_triangle(markers=TRIANGLE_MARKERS) -> Mesh:
    return Mesh(TRIANGLE_VERTICES, [(0, 1, 2)], markers)


def two_cell_square(markers=None) -> Mesh:
    """ Unit square cut along its rising diagonal. Only the bottom edge is marked unless <markers> is given. """
    vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    cells = [(0, 1, 2), (0, 2, 3)]
    return Mesh(vertices, cells, {(0, 1): 1} if markers is None else markers)


def square_mesh(n=4) -> Mesh:
    """ Structured square, tags bottom 1, right 2, top 3, left 4. """
    return unit_square_mesh(n)
