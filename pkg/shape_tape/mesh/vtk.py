from typing import Mapping

import numpy as np

from shape_tape.resource.io import TextFileIO

from .mesh import Mesh, MeshError

VTK_TRIANGLE = 5


def _vtk_name(name:str) -> str:
    return "_".join(name.split()) or "field"


def _point_data_lines(name:str, values:np.ndarray) -> list:
    name = _vtk_name(name)
    if values.ndim == 1:
        lines = [f'SCALARS {name} double 1', 'LOOKUP_TABLE default']
        lines += [repr(float(v)) for v in values]
    elif values.shape[1] == 2:
        lines = [f'VECTORS {name} double']
        lines += [f'{x!r} {y!r} 0.0' for x, y in values.tolist()]
    else:
        raise MeshError(f'Field {name} has unsupported vertex value shape {values.shape[1:]}.')
    return lines


def _expand_fields(fields:Mapping) -> list:
    """ Mixed functions are written one component space at a time. """
    out = []
    for name, f in fields.items():
        subspaces = f.space.subspaces
        if subspaces:
            out += [(f'{name}_{i}', f.sub(i)) for i in range(len(subspaces))]
        else:
            out.append((name, f))
    return out


def format_vtk(mesh:Mesh, fields:Mapping=None, title="shape_tape output") -> str:
    """ Format a legacy ASCII unstructured grid. Fields are sampled at the vertices;
        CG2 midside dofs are not written. """
    lines = ['# vtk DataFile Version 3.0', title, 'ASCII', 'DATASET UNSTRUCTURED_GRID',
             f'POINTS {mesh.num_vertices} double']
    lines += [f'{x!r} {y!r} 0.0' for x, y in mesh.vertices.tolist()]
    nc = mesh.num_cells
    lines.append(f'CELLS {nc} {4 * nc}')
    lines += [f'3 {a} {b} {c}' for a, b, c in mesh.cells.tolist()]
    lines.append(f'CELL_TYPES {nc}')
    lines += [str(VTK_TRIANGLE)] * nc
    expanded = _expand_fields(fields or {})
    if expanded:
        lines.append(f'POINT_DATA {mesh.num_vertices}')
        for name, f in expanded:
            if f.space.mesh is not mesh:
                raise MeshError(f'Field {name} does not live on the mesh being written.')
            lines += _point_data_lines(name, f.vertex_values())
    return '\n'.join(lines) + '\n'


def write_vtk(mesh:Mesh, fields:Mapping, path:str) -> None:
    TextFileIO().write(path, format_vtk(mesh, fields))
