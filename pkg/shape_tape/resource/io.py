import json
import math
from typing import Iterable, Sequence

import numpy as np


class TextFileIO:

    def __init__(self, *, encoding='utf-8') -> None:
        self._encoding = encoding  # Character encoding. UTF-8 must be explicitly set on some platforms.

    def read(self, filename:str) -> str:
        """ Load a text file into a string. """
        with open(filename, 'r', encoding=self._encoding) as fp:
            return fp.read()

    def write(self, filename:str, s:str) -> None:
        """ Save a string into a text file. """
        with open(filename, 'w', encoding=self._encoding, newline='\n') as fp:
            fp.write(s)


def check_dict(d:object) -> None:
    if not isinstance(d, dict):
        raise TypeError('Expected a dictionary, got a ' + type(d).__name__)


def _json_safe(obj:object) -> object:
    """ JSON has no NaN or infinity; write them as null. Tuples and arrays become lists. """
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


class JSONDictionaryIO:
    """ Writes report dictionaries as JSON text. """

    def __init__(self, io:TextFileIO=None) -> None:
        self._io = io or TextFileIO()  # IO for text files.

    @staticmethod
    def dumps(d:dict) -> str:
        """ Sorted keys and fixed indentation make identical reports byte-identical. """
        check_dict(d)
        return json.dumps(_json_safe(d), sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False) + "\n"

    def save_json_dict(self, filename:str, d:dict) -> None:
        self._io.write(filename, self.dumps(d))


class CSVTableIO:
    """ Writes simple numeric tables with a header row. """

    def __init__(self, io:TextFileIO=None) -> None:
        self._io = io or TextFileIO()

    @staticmethod
    def _format(value:object) -> str:
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def save_csv(self, filename:str, header:Sequence[str], rows:Iterable[Sequence]) -> None:
        lines = [",".join(header)]
        lines += [",".join(map(self._format, row)) for row in rows]
        self._io.write(filename, "\n".join(lines) + "\n")
