#!/usr/bin/env python3

""" Master console script and primary entry point for the shape-tape program. """

import sys
from typing import Sequence

from shape_tape.util.entrypoints import EntryPoint, EntryPointSelector

ENTRY_POINTS = {
    "taylor":    EntryPoint("shape_tape.main_taylor",    "main", "Taylor test the derivatives of a case."),
    "run":       EntryPoint("shape_tape.main_run",       "main", "Evaluate a case or cross-check its gradient."),
    "optimize":  EntryPoint("shape_tape.main_optimize",  "main", "Optimize the obstacle of the Pironneau case."),
    "mesh-info": EntryPoint("shape_tape.main_mesh_info", "main", "Describe a Gmsh mesh file.")
}


def main(argv:Sequence[str]=None) -> int:
    loader = EntryPointSelector(ENTRY_POINTS)
    return loader.main(argv or sys.argv)


if __name__ == '__main__':
    sys.exit(main())
