""" Steepest descent on a reduced functional in a Riesz inner product, with Armijo backtracking and a guard
    against steps that would tangle or flatten mesh cells. """

from types import SimpleNamespace
from typing import Callable, List, NamedTuple, Sequence, Union

import numpy as np

from shape_tape.mesh import DegenerateMeshError
from shape_tape.resource import CSVTableIO
from shape_tape.tape import ReducedFunctional
from shape_tape.util.log import log

from .riesz import RieszMap

CONVERGED = "converged"
MAX_ITER = "max_iter"
NO_ADMISSIBLE_STEP = "no_admissible_step"


class DescentSettings(SimpleNamespace):
    """ Parameters of optimize_descent. """

    max_iter: int = 100                  # Iteration limit.
    armijo: float = 1e-4                 # Sufficient decrease constant.
    backtrack: float = 0.5               # Step reduction factor after a rejected trial.
    min_step: float = 1e-12              # Give up when the step falls below this.
    gradient_tol: float = 1e-8           # Stop when the Riesz norm of the gradient falls below this.
    quality_floor: float = 0.1           # Trial steps with a worse cell than this are rejected.
    initial_displacement: float = 0.02   # Largest nodal change made by the first trial step.


class DescentRow(NamedTuple):
    iteration: int
    J: float
    grad_norm: float
    step: float
    min_quality: float


class DescentTrace:
    """ One row per accepted iterate, plus the reason the descent stopped. """

    HEADER = ["iter", "J", "grad_norm", "step", "min_quality"]

    def __init__(self) -> None:
        self.rows = []       # DescentRow for each iterate.
        self.status = None   # CONVERGED, MAX_ITER or NO_ADMISSIBLE_STEP once finished.

    def add(self, *values) -> None:
        row = DescentRow(*values)
        self.rows.append(row)
        log.info("Descent iteration %d: J = %.10g, |g| = %.3e, step = %.3e, quality = %.3f", *row)

    @property
    def initial_value(self) -> float:
        return self.rows[0].J

    @property
    def final_value(self) -> float:
        return self.rows[-1].J

    def extend(self, later:"DescentTrace") -> None:
        """ Append the iterates of a descent that started where this one stopped. Its first row repeats our last. """
        offset = len(self.rows) - 1
        for row in later.rows[1:]:
            self.rows.append(row._replace(iteration=row.iteration + offset))
        self.status = later.status

    def values(self) -> List[float]:
        return [row.J for row in self.rows]

    def to_dict(self) -> dict:
        return {"status": self.status, "rows": [row._asdict() for row in self.rows]}

    def save_csv(self, filename:str, io:CSVTableIO=None) -> None:
        (io or CSVTableIO()).save_csv(filename, self.HEADER, self.rows)


Callback = Callable[[int, ReducedFunctional], None]


def _as_maps(riesz:Union[RieszMap, Sequence[RieszMap]], count:int) -> List[RieszMap]:
    maps = [riesz] * count if isinstance(riesz, RieszMap) else list(riesz)
    if len(maps) != count:
        raise ValueError(f'{len(maps)} Riesz maps for {count} controls.')
    return maps


def _trial(rf:ReducedFunctional, values:list):
    """ J and worst cell quality at <values>, or None if the replay tangles the mesh. """
    try:
        J = rf.evaluate(values)
    except DegenerateMeshError as e:
        log.warning("Descent step rejected: %s", e)
        return None
    return J, rf.min_mesh_quality()


def optimize_descent(rf:ReducedFunctional, riesz:Union[RieszMap, Sequence[RieszMap]],
                     settings:DescentSettings=None, callback:Callback=None) -> DescentTrace:
    """ Minimize <rf> from its current control values. The direction is minus the Riesz representation of the
        gradient. The first trial step moves no node further than settings.initial_displacement; later trial
        steps are Barzilai-Borwein steps in the Riesz inner product. Each trial is halved until it keeps
        every cell above the quality floor and satisfies the Armijo condition. The controls are left at the
        last accepted iterate. """
    settings = settings or DescentSettings()
    maps = _as_maps(riesz, len(rf.controls))
    x = [np.asarray(v, dtype=float) for v in rf.control_values()]
    J = rf.evaluate(x)
    quality = rf.min_mesh_quality()
    trace = DescentTrace()
    step = 0.0
    previous = None
    for iteration in range(settings.max_iter + 1):
        g = rf.adjoint_gradient()
        r = [m.representation(gi).dofs for m, gi in zip(maps, g)]
        grad_norm2 = sum(float(np.dot(gi, ri)) for gi, ri in zip(g, r))
        grad_norm = float(np.sqrt(max(grad_norm2, 0.0)))
        trace.add(iteration, J, grad_norm, step, quality)
        if callback is not None:
            callback(iteration, rf)
        if grad_norm <= settings.gradient_tol:
            trace.status = CONVERGED
            break
        if iteration == settings.max_iter:
            trace.status = MAX_ITER
            break
        alpha = _initial_step(settings, r, maps, x, g, previous, step)
        accepted = None
        while alpha >= settings.min_step:
            candidate = [xi - alpha * ri for xi, ri in zip(x, r)]
            result = _trial(rf, candidate)
            if result is not None and result[1] < settings.quality_floor:
                log.warning("Descent step %.3e rejected: cell quality %.3f is below %.3f.",
                            alpha, result[1], settings.quality_floor)
                result = None
            if result is not None and result[0] <= J - settings.armijo * alpha * grad_norm2:
                accepted = candidate, result
                break
            alpha *= settings.backtrack
        if accepted is None:
            trace.status = NO_ADMISSIBLE_STEP
            rf.evaluate(x)
            break
        previous = (x, g)
        x, (J, quality) = accepted
        step = alpha
    return trace


def _initial_step(settings:DescentSettings, r:list, maps:list, x:list, g:list, previous, step:float) -> float:
    largest = max(float(np.abs(ri).max()) if ri.size else 0.0 for ri in r)
    if previous is None:
        return settings.initial_displacement / largest if largest > 0.0 else 1.0
    x_old, g_old = previous
    s = [a - b for a, b in zip(x, x_old)]
    y = [a - b for a, b in zip(g, g_old)]
    sy = sum(float(np.dot(si, yi)) for si, yi in zip(s, y))
    ss = sum(m.inner(si, si) for m, si in zip(maps, s))
    if sy <= 0.0 or ss <= 0.0:
        return step
    return ss / sy
