from typing import Iterable, List, Sequence

import numpy as np

from shape_tape.mesh import Mesh
from shape_tape.util.log import log

from .tape import BlockVariable, ControlError, Tape, get_working_tape, variable_of


class Control:
    """ A root variable whose value the reduced functional may change. """

    def __init__(self, obj) -> None:
        var = variable_of(obj)
        if not var.is_root:
            raise ControlError(f'{obj!r} was produced by {var.creator!r}; only root values can be controls.')
        self.obj = obj
        self.variable = var

    def value(self):
        value = self.variable.saved_value()
        return value.copy() if isinstance(value, np.ndarray) else value

    def check(self, value, what="value") -> np.ndarray:
        current = np.asarray(self.variable.saved_value())
        value = np.asarray(value, dtype=float)
        if value.shape != current.shape:
            raise ControlError(f'Control {what} for {self.obj!r} has shape {value.shape}, expected {current.shape}.')
        return value

    def update(self, value) -> None:
        """ Overwrite the root checkpoint (and the live object) with a new value. """
        value = self.check(value).copy()
        if not value.shape:
            value = float(value)
        self.variable.checkpoint = value
        self.obj.restore_tape_value(value)

    def __repr__(self) -> str:
        return f'<Control of {self.obj!r}>'


class ReducedFunctional:
    """ The recorded output as a function of the controls alone.

        Derivatives are taken at the values of the last evaluation (or of the recording). Only blocks with
        an input depending on the controls and an output leading to the functional are swept. """

    def __init__(self, functional, controls:Iterable, tape:Tape=None) -> None:
        self.tape = tape or get_working_tape()
        self.controls = [c if isinstance(c, Control) else Control(c) for c in controls]
        if not self.controls:
            raise ControlError('A reduced functional needs at least one control.')
        self.functional = functional
        self.output = getattr(functional, "block_variable", None)  # Output variable, or None if never recorded.
        self._constant = float(functional)
        roots = [c.variable for c in self.controls]
        self._active = self.tape.active_variables(roots)
        if self.output is None:
            log.warning("The functional was computed while recording was stopped; its derivatives are zero.")
            self._blocks = []
            return
        self._blocks = self.tape.relevant_blocks(self.output, self._active)
        ancestors = self.tape.ancestors(self.output)
        for control in self.controls:
            if control.variable not in ancestors:
                log.warning("%r cannot reach the functional; its gradient is zero.", control)

    def __call__(self, values:Sequence=None) -> float:
        return self.evaluate(values)

    def control_values(self) -> list:
        return [c.value() for c in self.controls]

    def _set_controls(self, values:Sequence) -> None:
        if len(values) != len(self.controls):
            raise ControlError(f'Expected {len(self.controls)} control values, got {len(values)}.')
        checked = [c.check(v) for c, v in zip(self.controls, values)]
        for control, value in zip(self.controls, checked):
            control.update(value)

    def evaluate(self, values:Sequence=None) -> float:
        """ Replay every block with the given control values (the current ones if None) and return the output. """
        if values is not None:
            self._set_controls(values)
        if self.output is None:
            return self._constant
        self.tape.replay()
        return float(self.output.saved_value())

    def _zeros(self) -> list:
        return [np.zeros_like(np.asarray(c.variable.saved_value(), dtype=float)) for c in self.controls]

    def _seed_directions(self, directions:Sequence) -> None:
        if len(directions) != len(self.controls):
            raise ControlError(f'Expected {len(self.controls)} directions, got {len(directions)}.')
        for control, direction in zip(self.controls, directions):
            control.variable.tlm_value = control.check(direction, "direction").copy()

    def _collect(self, attribute:str) -> list:
        values = self._zeros()
        for i, control in enumerate(self.controls):
            value = getattr(control.variable, attribute)
            if value is not None:
                values[i] = values[i] + value
        return values

    def _check_checkpoints(self) -> None:
        for block in self._blocks:
            for var in block.dependencies + block.outputs:
                var.saved_value()

    def adjoint_gradient(self) -> List[np.ndarray]:
        """ Derivative of the functional with respect to each control, as a co-vector over its dofs. """
        if self.output is None:
            log.warning("Gradient requested for a functional computed while recording was stopped.")
            return self._zeros()
        self._check_checkpoints()
        self.tape.reset_sweeps()
        self.output.adj_value = 1.0
        for block in reversed(self._blocks):
            block.evaluate_adj(self._active)
        return self._collect("adj_value")

    def tlm_action(self, directions:Sequence) -> float:
        """ Directional derivative of the functional along one direction per control. """
        if self.output is None:
            return 0.0
        self._check_checkpoints()
        self.tape.reset_sweeps()
        self._seed_directions(directions)
        for block in self._blocks:
            block.evaluate_tlm(self._active)
        return float(self.output.tlm_value or 0.0)

    def hessian_action(self, directions:Sequence) -> List[np.ndarray]:
        """ Second derivative of the functional applied to one direction per control: a tangent sweep,
            then one reverse sweep computing first- and second-order adjoints block by block. """
        if self.output is None:
            return self._zeros()
        self._check_checkpoints()
        self.tape.reset_sweeps()
        self._seed_directions(directions)
        for block in self._blocks:
            block.evaluate_tlm(self._active)
        self.output.adj_value = 1.0
        for block in reversed(self._blocks):
            block.evaluate_adj(self._active)
            block.evaluate_hessian(self._active)
        return self._collect("hessian_value")

    def mesh_variables(self) -> List[BlockVariable]:
        return [var for var in self.tape.variables() if isinstance(var.obj, Mesh)]

    def min_mesh_quality(self) -> float:
        """ Worst scaled Jacobian over every mesh version on the tape. """
        worst = np.inf
        for var in self.mesh_variables():
            vertices = var.saved_value().reshape(2, -1).T
            worst = min(worst, float(var.obj.quality(vertices).min()))
        return worst
