""" Module for command-line flags. Every flag is --name, takes at most one value, and has a typed default. """

import os
import sys
from typing import Any, Dict, Iterable, Iterator, List, Sequence, Tuple


class UsageError(ValueError):
    """ Raised when the command line contains unknown options or unusable values. """


def _is_number(s:str) -> bool:
    """ Negative numbers are values, not option keys. """
    try:
        float(s)
    except ValueError:
        return False
    return True


class CmdlineOption:
    """ A flag whose value replaces the default of one attribute. Bool defaults make switches. """

    _TRUE_STRINGS = {"1", "true", "yes", "on"}
    _FALSE_STRINGS = {"0", "false", "no", "off"}

    def __init__(self, key:str, default:Any, desc="No description.", choices:Sequence[str]=()) -> None:
        self.key = key                   # Flag as typed, with the leading --.
        self.desc = desc                 # Help text.
        self._type = type(default) if default is not None else str
        self._choices = tuple(choices)   # Allowed values of a string option. Any value if empty.

    def _switch(self, args:Tuple[str, ...]) -> bool:
        if not args:
            return True
        if len(args) == 1 and args[0].lower() in self._TRUE_STRINGS:
            return True
        if len(args) == 1 and args[0].lower() in self._FALSE_STRINGS:
            return False
        raise UsageError(f'Option {self.key} is a switch; got {" ".join(args)!r}.')

    def convert(self, *args:str) -> Any:
        """ Turn the strings following the flag into a value of the default's type. """
        if self._type is bool:
            return self._switch(args)
        if len(args) != 1:
            raise UsageError(f'Option {self.key} takes exactly one value, got {len(args)}.')
        s, = args
        try:
            value = self._type(s)
        except ValueError:
            raise UsageError(f'Option {self.key} expects a value of type {self._type.__name__}, got {s!r}.') from None
        if self._choices and value not in self._choices:
            raise UsageError(f'Option {self.key} must be one of {", ".join(self._choices)}; got {value!r}.')
        return value

    def usage(self) -> str:
        if self._type is bool:
            return self.key
        if self._choices:
            return f'{self.key}={"|".join(self._choices)}'
        return f'{self.key}=<{self._type.__name__}>'


class CmdlineHelp:
    """ Usage line and one help line per option. -h or --help prints it and exits. """

    KEYS = ('-h', '--help')

    def __init__(self, options:Iterable[CmdlineOption], script_name:str, description:str,
                 *, positional="", col_width=20) -> None:
        self._options = list(options)     # Options in the order they were added.
        self._script_name = script_name   # Program name as run from the command line.
        self._description = description   # One line about what the program does.
        self._positional = positional     # Usage text of the positional arguments, if any.
        self._col_width = col_width       # Width of the flag column.

    def format_help(self) -> str:
        usage = ['usage:', self._script_name]
        if self._positional:
            usage.append(self._positional)
        usage += [f'[{opt.usage()}]' for opt in self._options]
        lines = [self._description, ' '.join(usage), '']
        entries = [(opt.key, opt.desc) for opt in self._options]
        entries.append((', '.join(self.KEYS), 'Show this help message and exit.'))
        for key, desc in entries:
            if len(key) < self._col_width:
                lines.append(key.ljust(self._col_width) + desc)
            else:
                lines += [key, ' ' * 4 + desc]
        return '\n'.join(lines) + '\n'

    def show(self) -> None:
        sys.stdout.write(self.format_help())
        sys.exit(0)


def split_groups(argv:Iterable[str]) -> Tuple[List[str], List[List[str]]]:
    """
    Split arguments into the positional ones and one group per flag. Values follow a flag after '='
    or as separate arguments up to the next flag. Positional arguments must come first:

     positional   flag + 1 arg   switch    flag + 1 arg
    |**********| [-------------] [-----] [--------------]
    mesh.msh     --out=info.json --verbose --mesh-size 0.05
    """
    positional = []
    groups = []
    current = positional
    for s in argv:
        if s.startswith('-') and not _is_number(s):
            key, *eq = s.split('=', 1)
            current = [key, *eq]
            groups.append(current)
        else:
            current.append(s)
    return positional, groups


class CmdlineOptions:
    """ Namespace of flag values. Each attribute holds its default until parse() replaces it. """

    def __init__(self, app_description="Command line application.", *, positional="") -> None:
        self._app_description = app_description  # Shown at the top of the help text.
        self._positional_usage = positional      # Usage text for positional arguments. Empty if none are allowed.
        self._options:Dict[str, CmdlineOption] = {}
        self.positional = []                     # Positional arguments after parsing.

    def __getattr__(self, name:str) -> Any:
        raise AttributeError(f'"{name}" is not the name of a valid command-line option.')

    def add(self, name:str, default:Any=None, desc="No description.", choices:Sequence[str]=()) -> None:
        """ Add --<name> and set its attribute (hyphens become underscores) to the default. """
        attr = name.replace("-", "_")
        self._options[attr] = CmdlineOption("--" + name, default, desc, choices)
        setattr(self, attr, default)

    def usage(self, script="") -> str:
        return CmdlineHelp(self._options.values(), script, self._app_description,
                           positional=self._positional_usage).format_help()

    def parse(self, argv:Sequence[str]=None) -> None:
        """ Parse <argv> (sys.argv by default) into the attributes. The first item is the script name. """
        script, *args = argv or sys.argv
        script = os.path.basename(script) if script else ""
        by_key = {opt.key: attr for attr, opt in self._options.items()}
        positional, groups = split_groups(args)
        values = {}
        for key, *group in groups:
            if key in CmdlineHelp.KEYS:
                CmdlineHelp(self._options.values(), script, self._app_description,
                            positional=self._positional_usage).show()
            attr = by_key.get(key)
            if attr is None:
                raise UsageError(f'Unknown option {key}.')
            values[attr] = self._options[attr].convert(*group)
        if positional and not self._positional_usage:
            raise UsageError(f'Unexpected argument {positional[0]!r}.')
        self.__dict__.update(values)
        self.positional = positional
