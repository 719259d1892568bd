""" Taylor remainder tests of a reduced functional.

    For steps h = h0, h0/2, ... the residuals
        R0 = |J(m + h dm) - J(m)|
        R1 = |J(m + h dm) - J(m) - h <dJ, dm>|
        R2 = |J(m + h dm) - J(m) - h <dJ, dm> - h^2/2 <H dm, dm>|
    shrink like h, h^2 and h^3 when the derivatives are right. Each halving gives a rate log2(R(h)/R(h/2)). """

from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from shape_tape.util.log import log

from .functional import ReducedFunctional

UNDERFLOW = 1e-15  # Residuals below this are rounding noise; their rates are not meaningful.
RATE_BANDS = {"R0": (1.0, 0.15), "R1": (2.0, 0.15), "R2": (3.0, 0.25)}  # Expected rate and half-width.


def _pair(a:Sequence, b:Sequence) -> float:
    return float(sum(np.vdot(np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for x, y in zip(a, b)))


class TaylorTable:
    """ Residuals and convergence rates, one row per step size. The first row has no rates. """

    def __init__(self, steps:Sequence[float], residuals:Mapping[str, Sequence[float]]) -> None:
        self.steps = [float(h) for h in steps]
        self.residuals = {name: [float(r) for r in values] for name, values in residuals.items()}
        self.rates = {name: [None] + [self._rate(values[k - 1], values[k]) for k in range(1, len(values))]
                      for name, values in self.residuals.items()}

    @staticmethod
    def _rate(coarse:float, fine:float) -> float:
        if coarse < UNDERFLOW or fine < UNDERFLOW:
            return np.nan
        return float(np.log2(coarse / fine))

    @property
    def columns(self) -> List[str]:
        return list(self.residuals)

    def underflows(self) -> List[Tuple[int, str]]:
        return [(k, name) for name, rates in self.rates.items()
                for k, rate in enumerate(rates) if rate is not None and np.isnan(rate)]

    def to_dict(self) -> Dict[str, list]:
        """ Columns h, R0, rate0, ... with NaN rates as None. """
        table = {"h": list(self.steps)}
        for name in self.columns:
            table[name] = list(self.residuals[name])
            table["rate" + name[1:]] = [None if r is None or np.isnan(r) else r for r in self.rates[name]]
        return table

    def format_table(self) -> str:
        header = ["h"]
        for name in self.columns:
            header += [name, "rate"]
        lines = ["  ".join(f'{title:>10}' for title in header)]
        for k, h in enumerate(self.steps):
            cells = [f'{h:10.3e}']
            for name in self.columns:
                rate = self.rates[name][k]
                cells.append(f'{self.residuals[name][k]:10.3e}')
                cells.append(f'{"":>10}' if rate is None else f'{rate:10.2f}')
            lines.append("  ".join(cells))
        return "\n".join(lines)

    def failures(self, tolerances:Mapping[str, Tuple[float, float]]=None, scale=1.0) -> List[Tuple[int, str, float]]:
        """ (row, column, rate) for every rate outside its band. Bands are (expected, half-width); the
            half-widths are multiplied by <scale>. NaN rates are skipped. """
        tolerances = RATE_BANDS if tolerances is None else tolerances
        found = []
        for name in self.columns:
            expected, width = tolerances[name]
            for k, rate in enumerate(self.rates[name]):
                if rate is None or np.isnan(rate):
                    continue
                if abs(rate - expected) > width * scale:
                    found.append((k, name, rate))
        return found

    def __str__(self) -> str:
        return self.format_table()


def taylor_test(rf:ReducedFunctional, directions:Sequence, values:Sequence=None, h0=1e-2, halvings=3,
                second_order=True, gradient:Sequence=None, hessian:Sequence=None) -> TaylorTable:
    """ Run the remainder test of <rf> at <values> (the current control values by default) along <directions>.
        <gradient> and <hessian> may hold derivatives already computed at <values> along <directions>.
        The functional is evaluated at <values> again at the end. """
    if values is None:
        values = rf.control_values()
    values = [np.asarray(v, dtype=float) for v in values]
    directions = [np.asarray(d, dtype=float) for d in directions]
    if not any(np.any(d != 0.0) for d in directions):
        raise ValueError('Taylor tests need a nonzero direction.')
    j0 = rf.evaluate(values)
    if gradient is None:
        gradient = rf.adjoint_gradient()
    slope = _pair(gradient, directions)
    curvature = 0.0
    if second_order:
        if hessian is None:
            hessian = rf.hessian_action(directions)
        curvature = _pair(hessian, directions)
    steps = [h0 / 2 ** k for k in range(halvings + 1)]
    residuals = {"R0": [], "R1": []}
    if second_order:
        residuals["R2"] = []
    for h in steps:
        jh = rf.evaluate([v + h * d for v, d in zip(values, directions)])
        residuals["R0"].append(abs(jh - j0))
        residuals["R1"].append(abs(jh - j0 - h * slope))
        if second_order:
            residuals["R2"].append(abs(jh - j0 - h * slope - 0.5 * h * h * curvature))
        log.debug("Taylor step %.3e: J = %.12e", h, jh)
    rf.evaluate(values)
    table = TaylorTable(steps, residuals)
    for k, name in table.underflows():
        log.warning("Taylor rate of %s at row %d is NaN: residual below %.0e.", name, k, UNDERFLOW)
    return table
