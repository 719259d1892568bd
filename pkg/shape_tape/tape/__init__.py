""" Package for the operation tape: recording of overloaded operations, replay, tangent-linear, adjoint
    and second-order adjoint sweeps, reduced functionals and Taylor tests. """

from .functional import Control, ReducedFunctional
from .overloads import AdjFloat, assemble, assign, move_mesh, solve_linear, solve_newton, transfer_from_boundary, \
    weighted_sum
from .tape import Block, BlockVariable, BoundaryDataError, CheckpointError, ControlError, Tape, TapeError, \
    get_working_tape, is_recording, no_recording, resume_recording, set_working_tape, stop_recording
from .taylor import RATE_BANDS, TaylorTable, taylor_test
