""" Main module for Taylor tests from the command line. """

import sys
from typing import Sequence

from shape_tape.options import ShapeOptions
from shape_tape.toolkit import run_main, ShapeTape
from shape_tape.util.cmdline import UsageError


def main(argv:Sequence[str]=None) -> int:
    """ Record one case, run a Taylor test in random smooth directions and report the residual rates.
        The exit code is 1 if any rate falls outside its band. """
    opts = ShapeOptions("Taylor test of the gradient and Hessian of a recorded case.")
    opts.add("h0", 0.0, "First perturbation size (0 = case default).")
    opts.add("halvings", 3, "Number of times the perturbation is halved.")
    opts.add("first-order", False, "Check the gradient residual only and skip the Hessian.")
    opts.add("tolerance-scale", 1.0, "Factor applied to the width of every rate tolerance band.")

    def run(app:ShapeTape) -> int:
        if opts.halvings < 1:
            raise UsageError('Option --halvings must be at least 1.')
        if opts.h0 < 0.0 or opts.tolerance_scale <= 0.0:
            raise UsageError('Options --h0 and --tolerance-scale must be positive.')
        mode = "taylor" if opts.first_order else "hessian-taylor"
        report = app.run_case(mode, h0=opts.h0 or None, halvings=opts.halvings, scale=opts.tolerance_scale)
        return app.finish(report)

    return run_main(opts, argv, run)


if __name__ == '__main__':
    sys.exit(main())
