import sys
from typing import Callable, Sequence

from shape_tape.cases import CaseReport, MeshTanglingError, PironneauConfig, TubeConfig, run_pironneau_case, \
    run_tube_case
from shape_tape.fem import ConvergenceError, SingularMatrixError
from shape_tape.mesh import MeshError
from shape_tape.options import ShapeOptions
from shape_tape.resource import JSONDictionaryIO
from shape_tape.util.cmdline import UsageError
from shape_tape.util.entrypoints import USAGE_EXIT_CODE
from shape_tape.util.exception import ErrorSummary, HandlerChain, TracebackLogger
from shape_tape.util.log import log, Logger, open_logger, StreamLogger

FAILURE_EXIT_CODE = 1  # Exit code for failed verifications and errors during a run.


class ShapeTape:
    """ Container/factory for the common components of a command-line run. """

    def __init__(self, opts:ShapeOptions=None, argv:Sequence[str]=None, *, parse_args=True) -> None:
        """ Start with the parsed options and create the rest on demand. """
        if opts is None:
            opts = ShapeOptions()
        if parse_args:
            opts.parse(argv)
            opts.check()
        self._opts = opts

    class Component:
        """ Property-like descriptor to create a component if it does not exist, then save it over the attribute. """

        def __init__(self, func) -> None:
            self._func = func

        def __get__(self, instance, owner=None) -> object:
            value = self._func(instance)
            setattr(instance, self._func.__name__, value)
            return value

    @Component
    def logger(self) -> StreamLogger:
        """ Open a logger on standard error and the log file (if any), and route library messages into it. """
        logger = open_logger(self._opts.log, to_stderr=True)
        log.setHandler(logger.log)
        log.setLevel(Logger.DEBUG if self._opts.verbose else Logger.INFO)
        return logger

    @Component
    def exception_handler(self) -> HandlerChain:
        """ Expected failures get one line in the log. Anything else gets a full traceback. """
        expected = [MeshTanglingError, MeshError, ConvergenceError, SingularMatrixError]
        return HandlerChain([ErrorSummary(self.logger.log, expected), TracebackLogger(self.logger.log)])

    @Component
    def report_io(self) -> JSONDictionaryIO:
        return JSONDictionaryIO()

    def tube_config(self) -> TubeConfig:
        opts = self._opts
        config = TubeConfig(k=opts.k, omega=opts.omega, T=opts.T, dt=opts.dt, variant=opts.variant,
                            seed=opts.seed, out_dir=opts.out_dir)
        if opts.mesh_size:
            config.mesh_size = opts.mesh_size
        return config

    def pironneau_config(self, **settings) -> PironneauConfig:
        """ <settings> holds options added by a single entry mode, such as the optimizer limits. """
        opts = self._opts
        config = PironneauConfig(alpha=opts.alpha, beta=opts.beta, pipeline=opts.pipeline, riesz=opts.riesz,
                                 seed=opts.seed, out_dir=opts.out_dir, **settings)
        if opts.mesh_size:
            config.mesh_size = opts.mesh_size
        return config

    def run_case(self, mode:str, config=None, **options) -> CaseReport:
        """ Record the chosen case and run one verification mode on it. <config> replaces the one built
            from the options. """
        case = self._opts.case
        self.logger.log(f'Running {case} case in {mode} mode...')
        if case == "tube":
            return run_tube_case(config or self.tube_config(), mode, **options)
        return run_pironneau_case(config or self.pironneau_config(), mode, **options)

    def write_output(self, d:dict) -> None:
        """ Write a report dict as JSON to the --out file, or to standard output if there is none. """
        if self._opts.out:
            self.report_io.save_json_dict(self._opts.out, d)
            self.logger.log(f'Report saved to {self._opts.out}.')
        else:
            sys.stdout.write(self.report_io.dumps(d))

    def finish(self, report:CaseReport) -> int:
        """ Write the report and turn its verification outcome into an exit code. """
        self.write_output(report.to_dict(timings=not self._opts.no_timings))
        for message in report.failures:
            self.logger.log("FAILED: " + message)
        return 0 if report.passed else FAILURE_EXIT_CODE


def _usage_error(opts:ShapeOptions, argv:Sequence[str], error:UsageError) -> int:
    script = argv[0] if argv else ""
    sys.stderr.write(f'{error}\n\n{opts.usage(script)}')
    return USAGE_EXIT_CODE


def run_main(opts:ShapeOptions, argv:Sequence[str], func:Callable[[ShapeTape], int]) -> int:
    """ Parse <argv> into <opts> and call <func> with the toolkit. Usage errors exit with code 2 after the
        help text. Errors during the run are logged and exit with code 1. """
    try:
        app = ShapeTape(opts, argv)
    except UsageError as e:
        return _usage_error(opts, argv, e)
    try:
        return func(app)
    except UsageError as e:
        return _usage_error(opts, argv, e)
    except Exception:
        app.exception_handler(*sys.exc_info())
        return FAILURE_EXIT_CODE
