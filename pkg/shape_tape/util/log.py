""" Logging for the library and the command line.

    Library modules log through the module-level <log>, a leveled front with one line callable as its
    handler. A command-line run points that handler at a StreamLogger, which timestamps lines and writes
    them to standard error and an optional log file. """

import sys
from threading import Lock
from time import strftime
from typing import Callable, TextIO

LineLogger = Callable[[str], None]  # Line-based string callable used for log messages.


class StreamLogger:
    """ Writes timestamped lines to pre-opened text streams. A line identical to the one before it is
        replaced by a short mark, which keeps long solver loops readable. """

    def __init__(self, *streams:TextIO, time_fmt="[%b %d %Y %H:%M:%S]: ", repeat_mark="*") -> None:
        self._streams = streams          # Writable text streams.
        self._time_fmt = time_fmt        # strftime format of the timestamp. None for no timestamps.
        self._repeat_mark = repeat_mark  # Replacement for repeated lines. None to write every line in full.
        self._last = ""                  # Last line written in full.
        self._lock = Lock()

    def log(self, message:str) -> None:
        if self._repeat_mark is not None:
            if message == self._last:
                message = self._repeat_mark
            else:
                self._last = message
        if self._time_fmt is not None:
            message = strftime(self._time_fmt) + message
        with self._lock:
            for stream in self._streams:
                try:
                    stream.write(message + '\n')
                    stream.flush()
                except OSError:
                    # One closed stream must not silence the others.
                    continue


def open_logger(*filenames:str, encoding='utf-8', to_stdout=False, to_stderr=False, **kwargs) -> StreamLogger:
    """ Open a logger that appends to the named files (empty names are skipped) and/or system streams.
        The files stay open until the program exits. """
    streams = [open(f, 'a', encoding=encoding) for f in filenames if f]
    if to_stdout:
        streams.append(sys.stdout)
    if to_stderr:
        streams.append(sys.stderr)
    return StreamLogger(*streams, **kwargs)


def _at_level(level:int) -> Callable[..., None]:
    def emit(self, msg:str, *args) -> None:
        if level >= self._level:
            self._handler((msg % args if args else str(msg)).strip())
    return emit


class Logger:
    """ Leveled front for library messages. Warnings and worse go to standard error until an
        application sets its own handler. """

    DEBUG = 0
    INFO = 1
    WARNING = 2

    def __init__(self) -> None:
        self._handler = self._print_stderr  # Line callable receiving formatted messages.
        self._level = self.WARNING          # Minimum level of messages that reach the handler.

    @staticmethod
    def _print_stderr(msg:str) -> None:
        print(msg, file=sys.stderr)

    def setHandler(self, hdlr:LineLogger) -> None:
        self._handler = hdlr

    def setLevel(self, level:int) -> None:
        self._level = level

    debug = _at_level(DEBUG)
    info = _at_level(INFO)
    warning = _at_level(WARNING)


log = Logger()
