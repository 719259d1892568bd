""" Handlers for exceptions that escape a command-line run. Each one has the signature of sys.excepthook
    and returns True if the exception needs no further reporting. """

from traceback import format_exception
from types import TracebackType
from typing import Callable, Iterable, Optional, Sequence, Type

LineLogger = Callable[[str], None]
ExceptionTypes = Sequence[Type[BaseException]]


class ExceptionHandler:

    def __call__(self, exc_type:Type[BaseException], exc:BaseException, tb:Optional[TracebackType]) -> bool:
        raise NotImplementedError


class ErrorSummary(ExceptionHandler):
    """ One log line for errors the user can act on, such as a tangled mesh or a stalled solver.
        Solver errors that carry a residual history also get their first and last residual. """

    def __init__(self, logger:LineLogger, exc_types:ExceptionTypes) -> None:
        self._logger = logger               # Line logger for the summary.
        self._exc_types = tuple(exc_types)  # Types that count as expected failures.

    @staticmethod
    def _history_note(exc:BaseException) -> str:
        history = getattr(exc, "history", None)
        if not history:
            return ""
        return f' (residual {history[0]:.3e} -> {history[-1]:.3e} over {len(history) - 1} iterations)'

    def __call__(self, exc_type, exc, tb) -> bool:
        if not issubclass(exc_type, self._exc_types):
            return False
        self._logger(f'{exc_type.__name__}: {exc}{self._history_note(exc)}')
        return True


class TracebackLogger(ExceptionHandler):
    """ Full traceback for anything unexpected. Never counts as handled. """

    def __init__(self, logger:LineLogger, *, max_frames=20) -> None:
        self._logger = logger          # Line logger for the traceback text.
        self._max_frames = max_frames  # Innermost frames are dropped beyond this many.

    def __call__(self, exc_type, exc, tb) -> bool:
        lines = format_exception(exc_type, exc, tb, limit=self._max_frames)
        self._logger("Unexpected error during the run:\n" + "".join(lines).rstrip())
        return False


class HandlerChain(ExceptionHandler):
    """ Tries each handler in order and stops at the first that handles the exception. """

    def __init__(self, handlers:Iterable[ExceptionHandler]=()) -> None:
        self._handlers = list(handlers)

    def add(self, handler:ExceptionHandler) -> None:
        self._handlers.append(handler)

    def __call__(self, exc_type, exc, tb) -> bool:
        return any(handler(exc_type, exc, tb) for handler in self._handlers)
