""" The tape: an append-only list of blocks connected by versioned variables.

    Any object taking part in recording (FEFunction, Mesh, AdjFloat) has a <block_variable> attribute
    naming the tape variable that holds its current value, plus tape_value() and restore_tape_value().
    Writes made outside the tape drop the variable, so the next use starts a new root. """

from contextlib import contextmanager
from itertools import count
from typing import Iterable, List, Sequence, Set

import numpy as np

from shape_tape.util.log import log


class TapeError(RuntimeError):
    """ Raised when the tape is used inconsistently. """


class CheckpointError(TapeError):
    """ Raised when a sweep needs a value that was never saved. """


class ControlError(TapeError):
    """ Raised when a control is not a root variable or gets values of the wrong shape. """


class BoundaryDataError(TapeError):
    """ Raised when Dirichlet data that depends on the coordinates sits on a moving boundary. """


def accumulate(total, value):
    if value is None:
        return total
    if total is None:
        return value.copy() if isinstance(value, np.ndarray) else value
    return total + value


class BlockVariable:
    """ One version of the value of an object. Roots have no creator. """

    _ids = count()

    def __init__(self, obj, creator=None) -> None:
        self.obj = obj                # Live object whose value this is a version of.
        self.creator = creator        # Block that produced this version, or None for a root.
        self.checkpoint = None        # Saved value of this version.
        self.id = next(self._ids)     # Creation order.
        self.tlm_value = None         # Tangent of this version in the current direction.
        self.adj_value = None         # Adjoint (co-vector) of this version.
        self.hessian_value = None     # Second-order adjoint of this version.

    @property
    def is_root(self) -> bool:
        return self.creator is None

    def save(self) -> None:
        self.checkpoint = self.obj.tape_value()

    def saved_value(self):
        if self.checkpoint is None:
            raise CheckpointError(f'No checkpoint for {self}.')
        return self.checkpoint

    def restore(self) -> None:
        """ Put this version back into the live object. """
        self.obj.restore_tape_value(self.saved_value())

    def zero_like(self):
        value = self.saved_value()
        return np.zeros_like(value) if isinstance(value, np.ndarray) else 0.0

    def add_adjoint(self, value) -> None:
        self.adj_value = accumulate(self.adj_value, value)

    def add_hessian(self, value) -> None:
        self.hessian_value = accumulate(self.hessian_value, value)

    def reset_sweeps(self) -> None:
        self.tlm_value = self.adj_value = self.hessian_value = None

    def __repr__(self) -> str:
        kind = "root" if self.is_root else type(self.creator).__name__
        return f'<BlockVariable {self.id} ({kind}) of {self.obj!r}>'


def variable_of(obj) -> BlockVariable:
    """ The current tape variable of <obj>. An object without one becomes a root, saved as it is now. """
    if obj.block_variable is None:
        var = BlockVariable(obj)
        var.save()
        obj.block_variable = var
    return obj.block_variable


class Block:
    """ One recorded operation. Subclasses implement the value and the three derivative sweeps.
        <active> is the set of variables that depend on the controls; derivatives are only formed
        with respect to those. """

    def __init__(self) -> None:
        self.dependencies = []  # Input variables in a fixed order.
        self.outputs = []       # Output variables.

    def add_dependency(self, obj) -> BlockVariable:
        var = variable_of(obj)
        if var not in self.dependencies:
            self.dependencies.append(var)
        return var

    def add_output(self, obj) -> BlockVariable:
        var = BlockVariable(obj, self)
        obj.block_variable = var
        var.save()
        self.outputs.append(var)
        return var

    def active_dependencies(self, active:Set[BlockVariable]) -> List[BlockVariable]:
        return [dep for dep in self.dependencies if dep in active]

    def restore(self) -> None:
        for dep in self.dependencies:
            dep.restore()

    def publish(self) -> None:
        """ Save the freshly computed outputs and make them current on their objects. """
        for out in self.outputs:
            out.save()
            out.obj.block_variable = out

    def recompute(self) -> None:
        raise NotImplementedError

    def evaluate_tlm(self, active:Set[BlockVariable]) -> None:
        raise NotImplementedError

    def evaluate_adj(self, active:Set[BlockVariable]) -> None:
        raise NotImplementedError

    def evaluate_hessian(self, active:Set[BlockVariable]) -> None:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f'<{type(self).__name__}: {len(self.dependencies)} inputs>'


class LinearBlock(Block):
    """ Output = constant + sum of linear maps of the inputs. All derivative sweeps follow from the maps.
        Subclasses provide apply(i, x) and apply_transpose(i, y) for input i. """

    constant = 0.0

    def apply(self, i:int, x):
        raise NotImplementedError

    def apply_transpose(self, i:int, y):
        raise NotImplementedError

    def combine(self, values:Sequence):
        out = self.constant
        for i, x in enumerate(values):
            out = out + self.apply(i, x)
        return out

    def write(self, value) -> None:
        """ Store a computed output value into the live object. """
        self.outputs[0].obj.restore_tape_value(value)

    def value(self):
        return self.combine([dep.saved_value() for dep in self.dependencies])

    def recompute(self) -> None:
        value = self.value()
        self.write(value)
        out = self.outputs[0]
        out.checkpoint = value
        out.obj.block_variable = out

    def evaluate_tlm(self, active:Set[BlockVariable]) -> None:
        total = None
        for i, dep in enumerate(self.dependencies):
            if dep in active and dep.tlm_value is not None:
                total = accumulate(total, self.apply(i, dep.tlm_value))
        self.outputs[0].tlm_value = total

    def evaluate_adj(self, active:Set[BlockVariable]) -> None:
        adj = self.outputs[0].adj_value
        if adj is None:
            return
        for i, dep in enumerate(self.dependencies):
            if dep in active:
                dep.add_adjoint(self.apply_transpose(i, adj))

    def evaluate_hessian(self, active:Set[BlockVariable]) -> None:
        hess = self.outputs[0].hessian_value
        if hess is None:
            return
        for i, dep in enumerate(self.dependencies):
            if dep in active:
                dep.add_hessian(self.apply_transpose(i, hess))


class Tape:
    """ Ordered record of blocks. """

    def __init__(self) -> None:
        self.blocks = []        # Blocks in execution order.
        self.recording = True   # Blocks are only added while this is set.

    def add_block(self, block:Block) -> None:
        self.blocks.append(block)

    def clear(self) -> None:
        self.blocks.clear()

    def __len__(self) -> int:
        return len(self.blocks)

    def variables(self) -> List[BlockVariable]:
        """ Every variable read or written by a block, in order of creation. """
        found = {}
        for block in self.blocks:
            for var in block.dependencies + block.outputs:
                found[var.id] = var
        return [found[k] for k in sorted(found)]

    def active_variables(self, roots:Iterable[BlockVariable]) -> Set[BlockVariable]:
        """ Variables whose value depends on any of <roots>. """
        active = set(roots)
        for block in self.blocks:
            if any(dep in active for dep in block.dependencies):
                active.update(block.outputs)
        return active

    def ancestors(self, output:BlockVariable) -> Set[BlockVariable]:
        """ <output> and every variable its value was computed from. """
        needed = {output}
        for block in reversed(self.blocks):
            if any(out in needed for out in block.outputs):
                needed.update(block.dependencies)
        return needed

    def relevant_blocks(self, output:BlockVariable, active:Set[BlockVariable]) -> List[Block]:
        """ Blocks with an active input that lie on a path to <output>, in execution order. """
        needed = self.ancestors(output)
        return [block for block in self.blocks
                if any(out in needed for out in block.outputs) and any(dep in active for dep in block.dependencies)]

    def replay(self) -> None:
        for block in self.blocks:
            block.recompute()

    def reset_sweeps(self) -> None:
        for var in self.variables():
            var.reset_sweeps()


_working_tape = Tape()


def get_working_tape() -> Tape:
    return _working_tape


def set_working_tape(tape:Tape) -> Tape:
    """ Make <tape> the one new blocks are recorded on and return the previous one. """
    global _working_tape
    previous, _working_tape = _working_tape, tape
    return previous


def is_recording() -> bool:
    return _working_tape.recording


def stop_recording() -> None:
    _working_tape.recording = False


def resume_recording() -> None:
    _working_tape.recording = True


@contextmanager
def no_recording():
    """ Run a section without recording. Outputs written inside become roots when used later. """
    tape = _working_tape
    was_recording = tape.recording
    tape.recording = False
    try:
        yield
    finally:
        tape.recording = was_recording


def record(block:Block) -> None:
    log.debug("Recorded %r", block)
    _working_tape.add_block(block)
