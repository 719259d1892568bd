""" Benchmark setups. Each returns a no-arg callable that runs one operation on a case of modest size.
    Integer arguments from the command line scale the problem. """


# Setup helpers. Some benchmarks count import time, so all imports are local.

def _tube(steps:int, size:float):
    from shape_tape.cases import TubeCase, TubeConfig
    dt = TubeConfig.dt
    return TubeCase(TubeConfig(T=steps * dt, dt=dt, mesh_size=size))


def _channel(pipeline:str):
    from shape_tape.cases import PironneauCase, PironneauConfig
    return PironneauCase(PironneauConfig(pipeline=pipeline))


def _repeat(n:int, func):
    def run() -> None:
        for _ in range(n):
            func()
    return run


# Main benchmark functions.

def tube_record(steps=10):
    """ Mesh generation, the recorded forward run and the first evaluation. """
    def run() -> None:
        _tube(steps, 0.1)
    return run


def tube_replay(steps=10, n=3):
    case = _tube(steps, 0.1)
    return _repeat(n, case.rf.evaluate)


def tube_adjoint(steps=10, n=3):
    case = _tube(steps, 0.1)
    return _repeat(n, case.rf.adjoint_gradient)


def tube_tlm(steps=10, n=3):
    case = _tube(steps, 0.1)
    directions = case.test_directions()
    return _repeat(n, lambda: case.rf.tlm_action(directions))


def tube_hessian(steps=5, n=1):
    case = _tube(steps, 0.1)
    directions = case.test_directions()
    return _repeat(n, lambda: case.rf.hessian_action(directions))


def pironneau_record():
    def run() -> None:
        _channel("through-deformation")
    return run


def pironneau_adjoint(n=3):
    case = _channel("through-deformation")
    return _repeat(n, case.rf.adjoint_gradient)


def pironneau_hessian(n=1):
    case = _channel("riesz-descent")
    directions = case.test_directions()
    return _repeat(n, lambda: case.rf.hessian_action(directions))


def assemble_stiffness(n=64, count=10):
    """ Plain stiffness assembly on an n x n square, without a tape. """
    from shape_tape.fem import FunctionSpace, assemble
    from shape_tape.forms import TestFunction, TrialFunction, dx, grad, inner
    from shape_tape.mesh import unit_square_mesh
    V = FunctionSpace(unit_square_mesh(n), 1)
    u, v = TrialFunction(V), TestFunction(V)
    form = inner(grad(u), grad(v)) * dx
    return _repeat(count, lambda: assemble(form))


# Full-size runs, too slow for the unit suite. Failures are printed rather than raised.

def _print_failures(report) -> None:
    for message in report.failures:
        print("FAILED:", message)


def tube_taylor(steps=50):
    """ Hessian Taylor table of the tube case at the default mesh size and dt. """
    from shape_tape.cases import TubeConfig, run_tube_case
    config = TubeConfig(T=steps * TubeConfig.dt)
    def run() -> None:
        report = run_tube_case(config, "hessian-taylor")
        print(report.results["taylor_text"])
        _print_failures(report)
    return run


def pironneau_optimize(max_iter=100):
    from shape_tape.cases import PironneauConfig, run_pironneau_case
    config = PironneauConfig(max_iter=max_iter)
    def run() -> None:
        report = run_pironneau_case(config, "optimize")
        results = report.results
        print(f'J {results["J_initial"]:.6g} -> {results["J_final"]:.6g} after {results["iterations"]} iterations')
        _print_failures(report)
    return run


def tube_gradient_ratio(steps=50):
    """ Adjoint to forward time ratio of the tube case at the default mesh size and dt. """
    from shape_tape.cases import TubeConfig, run_tube_case
    config = TubeConfig(T=steps * TubeConfig.dt)
    def run() -> None:
        report = run_tube_case(config, "gradient")
        print(f'adjoint/forward {report.timings.ratio("adjoint"):.2f}')
        _print_failures(report)
    return run
