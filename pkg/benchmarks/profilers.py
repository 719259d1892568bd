""" Profilers for the no-arg callables made by benchmarks.tests. """

from cProfile import Profile
from io import StringIO
import os
import pstats
import time


class AbstractProfiler:
    """ Runs a callable under some instrument and formats what it measured. """

    def run(self, func) -> None:
        raise NotImplementedError

    def format_best(self) -> str:
        """ Format the measurements of the quickest run. """
        raise NotImplementedError


class RawProfiler(AbstractProfiler):
    """ Wall-clock time only, over a few repeats. """

    def __init__(self, *, repeats=3) -> None:
        self._repeats = repeats  # Number of timed calls.
        self._times = []         # Seconds for each call.

    def run(self, func) -> None:
        for _ in range(self._repeats):
            start = time.perf_counter()
            func()
            self._times.append(time.perf_counter() - start)

    def format_best(self) -> str:
        best = min(self._times)
        worst = max(self._times)
        return f'Best of {len(self._times)} = {best:.3f}s (worst {worst:.3f}s)\n'


class DetailedProfiler(AbstractProfiler):
    """ Cumulative time per function under cProfile, limited to the most expensive entries.
        Solver calls into scipy show up as single lines. """

    def __init__(self, *, max_lines=40, path_levels=2) -> None:
        self._profile = None            # Profile of the single instrumented call.
        self._max_lines = max_lines     # Maximum number of functions listed.
        self._path_levels = path_levels  # Trailing directory levels kept in file paths.

    def run(self, func) -> None:
        pr = Profile()
        pr.enable()
        func()
        pr.disable()
        pr.create_stats()
        self._profile = pr

    def _short_path(self, path:str) -> str:
        parts = path.replace('\\', '/').split('/')
        return os.path.join(*parts[-self._path_levels - 1:]) if len(parts) > 1 else path

    def format_best(self) -> str:
        buf = StringIO()
        stats = pstats.Stats(self._profile, stream=buf).sort_stats('cumulative')
        stats.print_stats(self._max_lines)
        lines = []
        for line in buf.getvalue().splitlines()[4:]:
            if not line.strip():
                continue
            fields = line.split(maxsplit=5)
            if len(fields) < 6:
                lines.append(line)
                continue
            ncalls, _, _, cumtime, percall, path = fields
            lines.append(f'{ncalls:>12}   {cumtime:>8}   {percall:>8}   {self._short_path(path)}')
        return '\n'.join(lines) + '\n'
