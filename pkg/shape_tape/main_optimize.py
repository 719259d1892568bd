""" Main module for shape optimization of the obstacle case. """

import sys
from typing import Sequence

from shape_tape.options import ShapeOptions
from shape_tape.toolkit import run_main, ShapeTape
from shape_tape.util.cmdline import UsageError


def main(argv:Sequence[str]=None) -> int:
    """ Minimize the Pironneau functional with the built-in descent and report the trace. """
    opts = ShapeOptions("Optimize the obstacle shape of the Pironneau case.")
    opts.case = "pironneau"
    opts.add("max-iters", 100, "Descent iteration limit.")
    opts.add("quality-floor", 0.1, "Smallest scaled Jacobian a step may leave in any cell.")

    def run(app:ShapeTape) -> int:
        if opts.case != "pironneau":
            raise UsageError('Only the pironneau case can be optimized.')
        if opts.max_iters < 0 or not 0.0 <= opts.quality_floor < 1.0:
            raise UsageError('Need --max-iters >= 0 and 0 <= --quality-floor < 1.')
        config = app.pironneau_config(max_iter=opts.max_iters, quality_floor=opts.quality_floor)
        return app.finish(app.run_case("optimize", config))

    return run_main(opts, argv, run)


if __name__ == '__main__':
    sys.exit(main())
