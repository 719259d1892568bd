""" Main module for single evaluations and derivative cross-checks. """

import sys
from typing import Sequence

from shape_tape.options import ShapeOptions
from shape_tape.toolkit import run_main, ShapeTape

RUN_MODES = ("value", "gradient", "consistency", "finite-difference", "symmetry")


def main(argv:Sequence[str]=None) -> int:
    """ Record one case and evaluate it in one of RUN_MODES. """
    opts = ShapeOptions("Evaluate a case, its gradient, or cross-check its derivatives.")
    opts.add("mode", "value", "What to compute.", RUN_MODES)

    def run(app:ShapeTape) -> int:
        return app.finish(app.run_case(opts.mode))

    return run_main(opts, argv, run)


if __name__ == '__main__':
    sys.exit(main())
