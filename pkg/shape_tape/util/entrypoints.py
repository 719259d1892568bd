""" Operation dispatch for the master console script. Operation modules are imported only when chosen,
    so a run of one operation never loads the dependencies of another. """

from importlib import import_module
from typing import Callable, List, Mapping, NamedTuple, Sequence

USAGE_EXIT_CODE = 2  # Exit code for command lines that cannot be understood.

MainFunction = Callable[[Sequence[str]], int]


class EntryPoint(NamedTuple):
    """ Where to find the main function of one operation, and a line of help about it. """

    module_name: str
    func_name: str = "main"
    description: str = "Unknown function."

    def load(self) -> MainFunction:
        return getattr(import_module(self.module_name), self.func_name)


class EntryPointSelector:
    """ Picks an operation by the first command-line argument. Any unique prefix of an operation name works. """

    def __init__(self, entry_points:Mapping[str, EntryPoint]) -> None:
        self._entry_points = entry_points  # Entry points keyed by operation name.

    def matches(self, mode:str) -> List[str]:
        """ The operation named exactly by <mode>, or else every operation it is a prefix of. """
        if not mode or mode.startswith('-'):
            return []
        if mode in self._entry_points:
            return [mode]
        return [name for name in self._entry_points if name.startswith(mode)]

    def format_info(self, error_msg:str) -> str:
        lines = [error_msg, '', 'Currently available operations:']
        lines += [f'{name} - {ep.description}' for name, ep in self._entry_points.items()]
        return '\n'.join(lines) + '\n'

    def _error(self, mode:str, found:List[str]) -> str:
        if found:
            return f'Operation "{mode}" has multiple matches ({", ".join(found)}). Use more characters.'
        if not mode or mode.startswith('-'):
            return 'An operation mode is required as the first command-line argument.'
        return f'No matches for operation "{mode}".'

    def main(self, argv:Sequence[str]) -> int:
        """ Run the chosen operation with the rest of <argv>. Its script name absorbs the operation name
            so that help text shows the full command. Without a unique match, print the operations
            and return the usage exit code. """
        script, *args = argv or [""]
        mode = args[0] if args else ""
        found = self.matches(mode)
        if len(found) != 1:
            print(self.format_info(self._error(mode, found)), end='')
            return USAGE_EXIT_CODE
        name, = found
        func = self._entry_points[name].load()
        return func([f'{script} {name}'.strip(), *args[1:]])
