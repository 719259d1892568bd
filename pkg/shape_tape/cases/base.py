""" Verification modes shared by every case: each case records one forward run on its own tape,
    and the modes below interrogate the reduced functional built over that recording. """

import time
from typing import List, Sequence

import numpy as np

from shape_tape.tape import ReducedFunctional, Tape, set_working_tape, taylor_test
from shape_tape.util.log import log

from .report import CaseReport, norms, taylor_results

CONSISTENCY_TOL = 1e-10      # Relative mismatch allowed between <gradient, d> and the tangent-linear action.
FINITE_DIFFERENCE_TOL = 1e-5  # Relative error allowed against central differences.
SYMMETRY_TOL = 1e-8          # Relative asymmetry allowed in <Hv, w>.


def pair(a:Sequence[np.ndarray], b:Sequence[np.ndarray]) -> float:
    return float(sum(np.dot(x, y) for x, y in zip(a, b)))


def smooth_field(points:np.ndarray, rng:np.random.Generator, degree=2) -> np.ndarray:
    """ Random polynomial of total <degree> in x and y sampled at <points>, scaled to a largest value of 1. """
    x, y = points[:, 0], points[:, 1]
    values = np.zeros(len(points))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            values += rng.standard_normal() * x ** i * y ** j
    largest = np.abs(values).max()
    return values / largest if largest > 0.0 else values


class RecordedCase:
    """ A forward run recorded on a private tape, with the reduced functional over its controls.
        Subclasses build the run in record() and return the functional. """

    case_id = ""
    default_h0 = 1e-2             # First Taylor step when none is given.
    taylor_second_order = True   # Whether the plain taylor mode includes the Hessian residual.
    adjoint_ratio_limit = None   # Largest accepted adjoint/forward time ratio. None for no check.

    def __init__(self, config) -> None:
        self.config = config
        self.tape = Tape()
        previous = set_working_tape(self.tape)
        start = time.perf_counter()
        try:
            self.functional = self.record()
        finally:
            set_working_tape(previous)
        self.record_seconds = time.perf_counter() - start
        self.value = float(self.functional)
        self.rf = ReducedFunctional(self.functional, self.controls(), self.tape)
        log.info("Recorded %s: %d blocks, J = %.12g", self.case_id, len(self.tape), self.value)

    def record(self):
        raise NotImplementedError

    def controls(self) -> list:
        raise NotImplementedError

    def random_directions(self, seed:int) -> List[np.ndarray]:
        """ One smooth direction per control, reproducible from <seed>. """
        raise NotImplementedError

    def test_directions(self) -> List[np.ndarray]:
        return self.random_directions(self.config.seed)

    def new_report(self, mode:str) -> CaseReport:
        raise NotImplementedError

    def _evaluated(self, report:CaseReport) -> float:
        with report.timings.measure("forward"):
            J = self.rf.evaluate()
        report.results["J"] = J
        return J

    def run_value(self, report:CaseReport) -> None:
        report.timings.seconds["record"] = self.record_seconds
        self._evaluated(report)

    def run_gradient(self, report:CaseReport) -> List[np.ndarray]:
        """ The first reverse sweep derives and caches the derivative forms and is timed as adjoint_setup.
            The ratio check uses the second sweep. """
        self._evaluated(report)
        with report.timings.measure("adjoint_setup"):
            self.rf.adjoint_gradient()
        with report.timings.measure("adjoint"):
            gradient = self.rf.adjoint_gradient()
        report.results["gradient_norms"] = norms(gradient)
        limit = self.adjoint_ratio_limit
        if limit is not None:
            ratio = report.timings.ratio("adjoint")
            if ratio > limit:
                report.fail(f'The adjoint sweep took {ratio:.2f} times the forward run; at most {limit:g} is accepted.')
        return gradient

    def run_taylor(self, report:CaseReport, h0:float=None, halvings=3, scale=1.0, second_order:bool=None) -> None:
        self._evaluated(report)
        h0 = h0 or self.default_h0
        if second_order is None:
            second_order = self.taylor_second_order
        directions = self.test_directions()
        hessian = None
        with report.timings.measure("adjoint"):
            gradient = self.rf.adjoint_gradient()
        if second_order:
            with report.timings.measure("hessian"):
                hessian = self.rf.hessian_action(directions)
        table = taylor_test(self.rf, directions, h0=h0, halvings=halvings, second_order=second_order,
                            gradient=gradient, hessian=hessian)
        log.info("Taylor test of %s:\n%s", self.case_id, table)
        taylor_results(report, table, scale)

    def run_hessian_taylor(self, report:CaseReport, **options) -> None:
        self.run_taylor(report, second_order=True, **options)

    def run_consistency(self, report:CaseReport, count=5) -> None:
        """ Compare <gradient, d> with the tangent-linear action for <count> seeded directions. """
        self._evaluated(report)
        gradient = self.rf.adjoint_gradient()
        rows = []
        for k in range(count):
            directions = self.random_directions(self.config.seed + k)
            adjoint = pair(gradient, directions)
            tlm = self.rf.tlm_action(directions)
            error = abs(adjoint - tlm) / max(1.0, abs(tlm))
            rows.append({"adjoint": adjoint, "tlm": tlm, "error": error})
            if error > CONSISTENCY_TOL:
                report.fail(f'Direction {k}: adjoint {adjoint!r} and tangent-linear {tlm!r} differ by {error:.2e}.')
        report.results["consistency"] = rows

    def run_finite_difference(self, report:CaseReport, step=1e-4, count=3) -> None:
        """ Compare <gradient, d> with central differences of step <step>. """
        J = self._evaluated(report)
        base = self.rf.control_values()
        gradient = self.rf.adjoint_gradient()
        rows = []
        for k in range(count):
            directions = self.random_directions(self.config.seed + k)
            plus = self.rf.evaluate([m + step * d for m, d in zip(base, directions)])
            minus = self.rf.evaluate([m - step * d for m, d in zip(base, directions)])
            fd = (plus - minus) / (2.0 * step)
            adjoint = pair(gradient, directions)
            error = abs(adjoint - fd) / max(abs(fd), 1e-30)
            rows.append({"adjoint": adjoint, "finite_difference": fd, "error": error})
            if error > FINITE_DIFFERENCE_TOL:
                report.fail(f'Direction {k}: gradient {adjoint!r} and central difference {fd!r} differ by {error:.2e}.')
        self.rf.evaluate(base)
        report.results["J"] = J
        report.results["finite_difference"] = rows

    def run_symmetry(self, report:CaseReport, count=3) -> None:
        """ Check <Hv, w> = <Hw, v> for <count> seeded pairs. """
        self._evaluated(report)
        rows = []
        for k in range(count):
            v = self.random_directions(self.config.seed + 2 * k)
            w = self.random_directions(self.config.seed + 2 * k + 1)
            with report.timings.measure("hessian"):
                hvw = pair(self.rf.hessian_action(v), w)
                hwv = pair(self.rf.hessian_action(w), v)
            error = abs(hvw - hwv) / max(abs(hvw), 1.0)
            rows.append({"Hv.w": hvw, "Hw.v": hwv, "error": error})
            if error > SYMMETRY_TOL:
                report.fail(f'Pair {k}: <Hv, w> = {hvw!r} but <Hw, v> = {hwv!r}.')
        report.results["symmetry"] = rows

    def run(self, mode:str, **options) -> CaseReport:
        """ Run one verification mode and return its report. """
        report = self.new_report(mode)
        method = getattr(self, "run_" + mode.replace("-", "_"), None)
        if method is None:
            raise ValueError(f'Unknown mode {mode!r} for the {self.case_id} case.')
        method(report, **options)
        return report

