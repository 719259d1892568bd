""" Tests for meshes: construction checks, moves, boundary extraction and file formats. """

import numpy as np
import pytest

from shape_tape.fem import BoundaryFunctionSpace, FEFunction, FunctionSpace, VectorFunctionSpace, coordinate_space
from shape_tape.mesh import CHANNEL_OBSTACLE, DegenerateMeshError, Mesh, MeshError, MeshParseError, annulus_mesh, \
    channel_mesh, extract_boundary, load_mesh, save_mesh, write_vtk
from shape_tape.mesh.gmsh import GmshReader
from shape_tape.tape import move_mesh, transfer_from_boundary

from . import square_mesh, two_cell_square, unit_triangle

TRIANGLE_MSH = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
2
1 1 2 5 5 1 2
2 2 2 1 1 1 2 3
$EndElements
"""


def test_single_triangle_file() -> None:
    """ The smallest valid file gives one cell of area 1/2 with its tagged line as a facet marker. """
    mesh = GmshReader().parse(TRIANGLE_MSH)
    assert mesh.num_cells == 1
    assert mesh.cell_areas().sum() == pytest.approx(0.5, abs=1e-15)
    assert mesh.facet_markers == {(0, 1): 5}


def test_orientation_repair(messages) -> None:
    """ Clockwise cells are reordered with a warning instead of being rejected. """
    mesh = Mesh([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)], [(0, 1, 2)])
    assert mesh.cell_areas()[0] == pytest.approx(0.5)
    assert any("orientation" in m for m in messages)


@pytest.mark.parametrize("text", [
    TRIANGLE_MSH.replace("$EndNodes\n", ""),
    TRIANGLE_MSH.replace("$Nodes\n3", "$Nodes\n4"),
    TRIANGLE_MSH.replace("2 2 2 1 1 1 2 3", "2 4 2 1 1 1 2 3"),
    TRIANGLE_MSH.replace("2.2 0 8", "4.1 0 8"),
    TRIANGLE_MSH.replace("2 1 0 0", "2 one 0 0"),
])
def test_malformed_files(text) -> None:
    with pytest.raises(MeshParseError):
        GmshReader().parse(text)


def test_dangling_marker() -> None:
    """ A tagged line across the interior of the mesh is not a boundary facet. """
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 1 2 7 7 1 3
2 2 2 1 1 1 2 3
3 2 2 1 1 1 3 4
$EndElements
"""
    with pytest.raises(MeshError, match="not on the boundary"):
        GmshReader().parse(text)


def test_out_of_range_cells() -> None:
    with pytest.raises(MeshError):
        Mesh([(0.0, 0.0), (1.0, 0.0)], [(0, 1, 2)])


def test_gmsh_round_trip(tmp_path) -> None:
    """ Writing and reading back keeps the connectivity and markers exactly. """
    mesh = square_mesh(3)
    path = str(tmp_path / "square.msh")
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    assert np.array_equal(loaded.cells, mesh.cells)
    assert loaded.facet_markers == mesh.facet_markers
    assert np.allclose(loaded.vertices, mesh.vertices, rtol=0.0, atol=1e-12)


def test_unknown_format() -> None:
    with pytest.raises(ValueError):
        load_mesh("mesh.vtk", format="vtk")


def _displacement(mesh:Mesh, dofs) -> FEFunction:
    return FEFunction(coordinate_space(mesh), dofs)


def test_translation(tape) -> None:
    """ A rigid shift moves every vertex by the same amount. """
    mesh = unit_triangle()
    move_mesh(mesh, _displacement(mesh, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]))
    assert np.array_equal(mesh.vertices, [[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
    assert len(tape) == 1


def test_inverse_move(tape) -> None:
    """ Moving by theta and then by -theta gives back the original coordinates. """
    mesh = square_mesh(4)
    original = mesh.vertices.copy()
    theta = 0.02 * np.random.default_rng(1).standard_normal(2 * mesh.num_vertices)
    move_mesh(mesh, _displacement(mesh, theta))
    move_mesh(mesh, _displacement(mesh, -theta))
    assert np.allclose(mesh.vertices, original, rtol=0.0, atol=1e-14)


def test_collapse_detected(tape) -> None:
    """ Pulling every vertex to the origin flattens every cell. The mesh is left alone. """
    mesh = unit_triangle()
    with pytest.raises(DegenerateMeshError) as info:
        move_mesh(mesh, _displacement(mesh, -mesh.coordinates))
    assert info.value.cell == 0
    assert mesh.cell_areas()[0] == pytest.approx(0.5)


def test_quality() -> None:
    """ Scaled Jacobians are 1 for equilateral cells and the smallest corner sine over sin(60 degrees) otherwise. """
    equilateral = Mesh([(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3.0) / 2.0)], [(0, 1, 2)])
    assert equilateral.quality()[0] == pytest.approx(1.0)
    right = unit_triangle().quality()[0]
    assert right == pytest.approx(np.sin(np.pi / 4) / np.sin(np.pi / 3))


def test_boundary_of_triangle() -> None:
    assert extract_boundary(unit_triangle()).boundary_vertices == [0, 1, 2]


def test_boundary_of_bottom_edge() -> None:
    assert extract_boundary(two_cell_square()).boundary_vertices == [0, 1]


def test_boundary_needs_markers() -> None:
    with pytest.raises(MeshError):
        extract_boundary(two_cell_square(markers={}))


def test_channel_boundary_count() -> None:
    """ The boundary of the channel is the outer boundary plus the obstacle, which do not touch. """
    mesh = channel_mesh(0.1)
    outer = mesh.marked_vertices([1, 2, 3])
    obstacle = mesh.marked_vertices([CHANNEL_OBSTACLE])
    assert extract_boundary(mesh).num_vertices == len(outer) + len(obstacle)


def test_transfer_constant(tape) -> None:
    mesh = unit_triangle()
    h = FEFunction(BoundaryFunctionSpace(extract_boundary(mesh)), np.ones(6))
    assert np.array_equal(transfer_from_boundary(h).dofs, np.ones(6))


def test_transfer_zero_off_boundary(tape) -> None:
    """ Only the marked bottom edge receives values; the other vertices get zero. """
    mesh = two_cell_square()
    h = FEFunction(BoundaryFunctionSpace(extract_boundary(mesh)), [1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(transfer_from_boundary(h).dofs, [1.0, 2.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0])


def test_gather_after_scatter() -> None:
    scatter = extract_boundary(square_mesh(3)).scatter_matrix()
    product = (scatter.T @ scatter).toarray()
    assert np.array_equal(product, np.eye(product.shape[0]))


def test_vtk_scalar(tmp_path) -> None:
    mesh = unit_triangle()
    path = tmp_path / "scalar.vtk"
    write_vtk(mesh, {"f": FEFunction(FunctionSpace(mesh, 1), [0.0, 1.0, 2.0])}, str(path))
    lines = path.read_text().splitlines()
    assert "POINTS 3 double" in lines
    assert "CELLS 1 4" in lines
    assert "3 0 1 2" in lines
    assert lines[lines.index("SCALARS f double 1") + 2:] == ["0.0", "1.0", "2.0"]


def test_vtk_vector(tmp_path) -> None:
    """ Vectors are padded with a zero z component. """
    mesh = unit_triangle()
    path = tmp_path / "vector.vtk"
    v = FEFunction(VectorFunctionSpace(mesh, 1), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    write_vtk(mesh, {"v": v}, str(path))
    lines = path.read_text().splitlines()
    start = lines.index("VECTORS v double") + 1
    assert lines[start:] == ["1.0 4.0 0.0", "2.0 5.0 0.0", "3.0 6.0 0.0"]


def test_vtk_quadratic(tmp_path) -> None:
    """ CG2 fields are written at the vertices only. """
    mesh = unit_triangle()
    path = tmp_path / "quadratic.vtk"
    write_vtk(mesh, {"q": FEFunction(FunctionSpace(mesh, 2), np.arange(6.0))}, str(path))
    lines = path.read_text().splitlines()
    assert lines[lines.index("SCALARS q double 1") + 2:] == ["0.0", "1.0", "2.0"]


def test_annulus_mesh() -> None:
    """ The tube mesh has an outer and a hole tag, and its area is close to that of the exact domain. """
    mesh = annulus_mesh(size=0.15)
    assert mesh.tags() == [1, 2]
    assert np.all(mesh.cell_areas() > 0.0)
    exact = np.pi * (1.0 - 0.2 ** 2)
    assert mesh.cell_areas().sum() == pytest.approx(exact, rel=0.05)


def test_channel_mesh() -> None:
    mesh = channel_mesh(0.1)
    assert mesh.tags() == [1, 2, 3, 4]
    assert mesh.cell_areas().sum() == pytest.approx(1.0 - np.pi * 0.13 ** 2, rel=0.01)
