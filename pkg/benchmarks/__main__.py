#!/usr/bin/env python3

""" Primary entry point for shape-tape benchmarks. Usage: python -m benchmarks <operation> [<int> ...] """

import subprocess
import sys

from benchmarks.profilers import DetailedProfiler, RawProfiler
from benchmarks import tests

PROFILERS = {cls.__name__: cls for cls in [RawProfiler, DetailedProfiler]}
SECTION_DELIM = '-' * 78


def _operations() -> list:
    return [name for name in dir(tests) if not name.startswith('_')]


def main(script:str, operation="tube_adjoint", *argv:str) -> int:
    """ The profiled call runs in a fresh subprocess per profiler so that mesh caches and imports
        from one do not speed up the other. """
    if operation not in _operations():
        print(f'Unknown operation {operation!r}. Available: {", ".join(_operations())}')
        return 2
    if argv and argv[0] in PROFILERS:
        pf_name, *args = argv
        func = getattr(tests, operation)(*map(int, args))
        profiler = PROFILERS[pf_name]()
        profiler.run(func)
        print(f'Benchmark for {operation} using {pf_name}:\n\n{profiler.format_best()}', end='')
        return 0
    print()
    for name in PROFILERS:
        cmd = (sys.executable, "-m", "benchmarks", operation, name, *argv)
        result = subprocess.run(cmd, capture_output=True, text=True)
        print(f'{SECTION_DELIM}\n')
        print(result.stderr if result.returncode else result.stdout)
    print(SECTION_DELIM)
    return 0


if __name__ == '__main__':
    sys.exit(main(*sys.argv))
