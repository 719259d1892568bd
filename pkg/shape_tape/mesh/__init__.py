""" Package for triangle meshes: topology, coordinates, boundary extraction, generators and file formats. """

from .boundary import BoundaryMesh, extract_boundary
from .generate import CHANNEL_INFLOW, CHANNEL_OBSTACLE, CHANNEL_OUTFLOW, CHANNEL_WALLS, TUBE_HOLE, TUBE_OUTER, \
    annulus_mesh, channel_mesh, unit_square_mesh
from .gmsh import MeshParseError, load_mesh, save_mesh
from .mesh import DegenerateMeshError, Mesh, MeshError
from .vtk import write_vtk
