""" Reader and writer for the Gmsh 2.2 ASCII mesh format (2-D triangles and tagged boundary lines). """

from typing import Dict, List, Tuple

import numpy as np

from shape_tape.resource.io import TextFileIO
from shape_tape.util.log import log

from .mesh import Mesh, MeshError

GMSH_LINE = 1
GMSH_TRIANGLE = 2
GMSH_POINT = 15


class MeshParseError(MeshError):
    """ Raised when a mesh file is malformed or uses features the reader does not support. """


class GmshSections:
    """ Splits the text of a .msh file into named sections of stripped lines with their line numbers. """

    def __init__(self, text:str, filename="<string>") -> None:
        self._filename = filename  # Name shown in error messages.
        self._sections = {}        # Lists of (line number, line) keyed by section name without the '$'.
        self._split(text)

    def error(self, lineno:int, message:str) -> MeshParseError:
        return MeshParseError(f'{self._filename}:{lineno}: {message}')

    def _split(self, text:str) -> None:
        current = None
        body = []
        start = 0
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if current is None:
                if not line:
                    continue
                if not line.startswith('$') or line.startswith('$End'):
                    raise self.error(lineno, f'expected a section header, got {line[:40]!r}')
                current = line[1:]
                body = []
                start = lineno
            elif line == '$End' + current:
                self._sections[current] = body
                current = None
            elif line.startswith('$'):
                raise self.error(lineno, f'section ${current} opened at line {start} is not closed')
            elif line:
                body.append((lineno, line))
        if current is not None:
            raise self.error(start, f'section ${current} is not closed')

    def get(self, name:str) -> List[Tuple[int, str]]:
        if name not in self._sections:
            raise MeshParseError(f'{self._filename}: missing ${name} section')
        return self._sections[name]

    def counted(self, name:str) -> List[Tuple[int, List[str]]]:
        """ Return the records of a section whose first line is the record count. """
        lines = self.get(name)
        if not lines:
            raise MeshParseError(f'{self._filename}: empty ${name} section')
        lineno, head = lines[0]
        try:
            count = int(head)
        except ValueError:
            raise self.error(lineno, f'bad record count {head!r}') from None
        records = lines[1:]
        if len(records) != count:
            raise self.error(lineno, f'${name} declares {count} records but has {len(records)}')
        return [(n, line.split()) for n, line in records]


class GmshReader:
    """ Builds a Mesh from Gmsh 2.2 ASCII text. Lines become facet markers tagged by their physical tag. """

    def __init__(self, io:TextFileIO=None) -> None:
        self._io = io or TextFileIO()

    @staticmethod
    def _check_format(sections:GmshSections) -> None:
        lineno, line = sections.get('MeshFormat')[0]
        fields = line.split()
        if len(fields) != 3 or not fields[0].startswith('2.'):
            raise sections.error(lineno, f'unsupported mesh format {line!r} (need 2.2 ASCII)')
        if fields[1] != '0':
            raise sections.error(lineno, 'binary mesh files are not supported')

    @staticmethod
    def _nodes(sections:GmshSections) -> Tuple[Dict[int, int], np.ndarray]:
        index = {}
        coords = []
        for lineno, fields in sections.counted('Nodes'):
            if len(fields) != 4:
                raise sections.error(lineno, 'node records need an id and three coordinates')
            try:
                node_id = int(fields[0])
                coords.append((float(fields[1]), float(fields[2])))
            except ValueError:
                raise sections.error(lineno, 'bad node record') from None
            if node_id in index:
                raise sections.error(lineno, f'duplicate node id {node_id}')
            index[node_id] = len(index)
        return index, np.array(coords, dtype=float).reshape(-1, 2)

    @staticmethod
    def _elements(sections:GmshSections, index:Dict[int, int]) -> Tuple[list, list]:
        triangles = []
        lines = []
        for lineno, fields in sections.counted('Elements'):
            try:
                values = list(map(int, fields))
            except ValueError:
                raise sections.error(lineno, 'bad element record') from None
            if len(values) < 3:
                raise sections.error(lineno, 'truncated element record')
            _, etype, ntags = values[:3]
            tags = values[3:3 + ntags]
            nodes = values[3 + ntags:]
            if etype == GMSH_POINT:
                continue
            expected = {GMSH_LINE: 2, GMSH_TRIANGLE: 3}.get(etype)
            if expected is None:
                raise sections.error(lineno, f'unsupported element type {etype}')
            if len(nodes) != expected:
                raise sections.error(lineno, f'element type {etype} needs {expected} nodes')
            try:
                local = [index[n] for n in nodes]
            except KeyError as e:
                raise sections.error(lineno, f'element refers to unknown node {e.args[0]}') from None
            if etype == GMSH_TRIANGLE:
                triangles.append(local)
            elif not tags:
                raise sections.error(lineno, 'boundary line without a physical tag')
            else:
                lines.append((local, tags[0]))
        return triangles, lines

    def parse(self, text:str, filename="<string>") -> Mesh:
        sections = GmshSections(text, filename)
        self._check_format(sections)
        index, coords = self._nodes(sections)
        triangles, lines = self._elements(sections, index)
        if not triangles:
            raise MeshParseError(f'{filename}: no triangles found')
        cells = np.array(triangles, dtype=np.int64)
        # Geometry-only nodes (arc centers and the like) belong to no cell; drop and renumber.
        used = np.unique(cells)
        if len(used) < len(coords):
            log.debug("Dropping %d unused node(s) from %s.", len(coords) - len(used), filename)
        renumber = np.full(len(coords), -1, dtype=np.int64)
        renumber[used] = np.arange(len(used))
        markers = {}
        for (a, b), tag in lines:
            a, b = renumber[a], renumber[b]
            if a < 0 or b < 0:
                raise MeshError(f'{filename}: boundary line ({a}, {b}) is not attached to any cell')
            markers[(int(min(a, b)), int(max(a, b)))] = tag
        return Mesh(coords[used], renumber[cells], markers)

    def load(self, filename:str) -> Mesh:
        return self.parse(self._io.read(filename), filename)


class GmshWriter:
    """ Writes meshes in the format read by GmshReader. Coordinates are written with full precision. """

    def __init__(self, io:TextFileIO=None) -> None:
        self._io = io or TextFileIO()

    @staticmethod
    def format(mesh:Mesh) -> str:
        out = ['$MeshFormat', '2.2 0 8', '$EndMeshFormat', '$Nodes', str(mesh.num_vertices)]
        out += [f'{i + 1} {x!r} {y!r} 0' for i, (x, y) in enumerate(mesh.vertices.tolist())]
        out += ['$EndNodes', '$Elements']
        markers = mesh.facet_markers
        out.append(str(len(markers) + mesh.num_cells))
        n = 0
        for (a, b), tag in markers.items():
            n += 1
            out.append(f'{n} {GMSH_LINE} 2 {tag} {tag} {a + 1} {b + 1}')
        for a, b, c in mesh.cells.tolist():
            n += 1
            out.append(f'{n} {GMSH_TRIANGLE} 2 1 1 {a + 1} {b + 1} {c + 1}')
        out.append('$EndElements')
        return '\n'.join(out) + '\n'

    def save(self, filename:str, mesh:Mesh) -> None:
        self._io.write(filename, self.format(mesh))


def load_mesh(path:str, format="gmsh22") -> Mesh:
    """ Load a mesh file. Only Gmsh 2.2 ASCII is understood. """
    if format != "gmsh22":
        raise ValueError(f'Unsupported mesh format {format!r}.')
    return GmshReader().load(path)


def save_mesh(mesh:Mesh, path:str) -> None:
    GmshWriter().save(path, mesh)
