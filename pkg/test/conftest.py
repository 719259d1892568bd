import pytest

from shape_tape.tape import Tape, set_working_tape
from shape_tape.util.log import log


@pytest.fixture
def tape():
    """ A fresh working tape for one test. The previous tape comes back afterwards. """
    t = Tape()
    previous = set_working_tape(t)
    yield t
    set_working_tape(previous)


@pytest.fixture
def messages():
    """ Library log messages at warning level and above, collected in a list. """
    found = []
    log.setHandler(found.append)
    log.setLevel(log.WARNING)
    yield found
    log.setHandler(log._print_stderr)


@pytest.fixture(autouse=True)
def restore_log():
    """ Command-line runs point the library log at their own stream logger. """
    yield
    log.setHandler(log._print_stderr)
    log.setLevel(log.WARNING)
