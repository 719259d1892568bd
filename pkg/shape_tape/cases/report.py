""" Run reports: nested dictionaries that the command line writes as JSON. """

from contextlib import contextmanager
import time
from typing import Dict, Iterator, List

import numpy as np

from shape_tape.mesh import DegenerateMeshError

SCHEMA = 1  # Version of the report layout.


class MeshTanglingError(RuntimeError):
    """ Raised when the prescribed mesh motion collapses or inverts a cell. """

    def __init__(self, error:DegenerateMeshError, dt:float) -> None:
        super().__init__(f'{error} The mesh motion tangles the mesh with dt = {dt:g}; try a smaller time step.')
        self.cell = error.cell


def config_echo(config) -> dict:
    """ Every setting of a config namespace, class defaults included. """
    names = {}
    for cls in reversed(type(config).__mro__):
        names.update(getattr(cls, "__annotations__", {}))
    values = {name: getattr(config, name) for name in names}
    values.update(vars(config))
    return values


class Timings:
    """ Wall-clock seconds per named phase. Phases measured more than once are summed. """

    def __init__(self) -> None:
        self.seconds = {}  # Total seconds keyed by phase name.

    @contextmanager
    def measure(self, name:str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - start

    def ratio(self, name:str, base="forward") -> float:
        return self.seconds[name] / self.seconds[base]

    def to_dict(self) -> Dict[str, object]:
        d = {f'{name}_s': seconds for name, seconds in self.seconds.items()}
        ratios = {}
        if self.seconds.get("forward"):
            for name in ("adjoint", "hessian"):
                if name in self.seconds:
                    ratios[f'{name}/forward'] = self.ratio(name)
        d["ratios"] = ratios
        return d


class CaseReport:
    """ Everything one case run produced. <labels> name the variant or pipeline and the mode. """

    def __init__(self, case:str, config, **labels:str) -> None:
        self.case = case
        self.labels = labels
        self.config = config_echo(config)
        self.results = {}         # Numbers computed by the run.
        self.failures = []        # Human-readable verification failures; empty if everything passed.
        self.timings = Timings()
        self.artifacts = []       # Paths of files written during the run.

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message:str) -> None:
        self.failures.append(message)

    def add_artifact(self, path:str) -> None:
        self.artifacts.append(path)

    def to_dict(self, timings=True) -> dict:
        d = {"schema": SCHEMA,
             "case": self.case,
             **self.labels,
             "config": self.config,
             "results": self.results,
             "failures": list(self.failures),
             "artifacts": sorted(self.artifacts)}
        if timings:
            d["timings"] = self.timings.to_dict()
        return d


def taylor_results(report:CaseReport, table, scale=1.0) -> None:
    """ Store a Taylor table in <report> and flag every rate outside its band. """
    report.results["taylor_table"] = table.to_dict()
    report.results["taylor_text"] = table.format_table()
    for k, name, rate in table.failures(scale=scale):
        report.fail(f'{name} rate {rate:.3f} at row {k} is outside its tolerance band.')


def norms(vectors:List) -> List[float]:
    return [float(np.linalg.norm(vector)) for vector in vectors]
