""" Main module for inspecting mesh files. """

import sys
from typing import Sequence

from shape_tape.mesh import load_mesh, Mesh
from shape_tape.options import ShapeOptions
from shape_tape.toolkit import run_main, ShapeTape
from shape_tape.util.cmdline import UsageError


def describe(mesh:Mesh) -> dict:
    """ Sizes, marker tags with their facet counts, total area and the range of cell quality. """
    quality = mesh.quality()
    return {"vertices": mesh.num_vertices,
            "cells": mesh.num_cells,
            "edges": mesh.num_edges,
            "tags": {int(tag): len(mesh.facets([tag])) for tag in mesh.tags()},
            "area": float(mesh.cell_areas().sum()),
            "quality": [float(quality.min()), float(quality.max())]}


def main(argv:Sequence[str]=None) -> int:
    """ Load a Gmsh 2.2 file and write its description as JSON. """
    opts = ShapeOptions("Describe a Gmsh 2.2 ASCII mesh file.", positional="PATH")

    def run(app:ShapeTape) -> int:
        if len(opts.positional) != 1:
            raise UsageError('Exactly one mesh file is required.')
        path, = opts.positional
        d = describe(load_mesh(path))
        d["path"] = path
        app.write_output(d)
        return 0

    return run_main(opts, argv, run)


if __name__ == '__main__':
    sys.exit(main())
