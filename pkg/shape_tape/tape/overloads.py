""" Recording versions of the operations a shape optimization problem is built from.

    Each one computes exactly what its plain counterpart computes. While the working tape is recording,
    it also appends a block and gives its output a fresh tape variable. """

from typing import Sequence, Union

import numpy as np
from scipy import sparse

from shape_tape import fem
from shape_tape.fem import BoundaryFunctionSpace, FEFunction, coordinate_space
from shape_tape.forms import DirichletBC, Form, action
from shape_tape.mesh import Mesh

from .blocks import AssembleBlock, AssignBlock, FloatOperationBlock, MeshMoveBlock, ScatterBlock, SolveBlock, \
    SumBlock
from .tape import TapeError, is_recording, record


class AdjFloat(float):
    """ A float that can carry a tape variable. Arithmetic between tape-carrying scalars is recorded. """

    def __new__(cls, value=0.0):
        return super().__new__(cls, value)

    def __init__(self, value=0.0) -> None:
        super().__init__()
        self.block_variable = None

    def tape_value(self) -> float:
        return float(self)

    def restore_tape_value(self, value:float) -> None:
        """ Scalars are immutable; their replayed values live in the tape variables only. """

    def __add__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        if isinstance(other, AdjFloat):
            return weighted_sum([self, other], [1.0, 1.0])
        return _linear([(1.0, self)], other)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        if isinstance(other, AdjFloat):
            return weighted_sum([self, other], [1.0, -1.0])
        return _linear([(1.0, self)], -other)

    def __rsub__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        return _linear([(-1.0, self)], other)

    def __neg__(self):
        return _linear([(-1.0, self)])

    def __mul__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        if isinstance(other, AdjFloat):
            return _operation("mul", self, other)
        return _linear([(other, self)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        if isinstance(other, AdjFloat):
            return _operation("div", self, other)
        return _linear([(1.0 / other, self)])

    def __rtruediv__(self, other):
        if not isinstance(other, (int, float)):
            return NotImplemented
        return _operation("div", float(other), self)

    def __pow__(self, exponent):
        if isinstance(exponent, AdjFloat):
            raise TapeError('Only constant exponents are supported.')
        if not isinstance(exponent, (int, float)):
            return NotImplemented
        return _operation("pow", self, exponent)

    def __rpow__(self, base):
        raise TapeError('Only constant exponents are supported.')

    def __repr__(self) -> str:
        return f'AdjFloat({float(self)!r})'


def _linear(terms, constant=0.0) -> AdjFloat:
    if not is_recording():
        return AdjFloat(constant + sum(w * float(x) for w, x in terms))
    block = SumBlock(terms, constant)
    result = AdjFloat(block.value())
    block.add_output(result)
    record(block)
    return result


def _operation(operation:str, x, y) -> AdjFloat:
    if not is_recording():
        return AdjFloat(FloatOperationBlock.compute(operation, float(x), float(y)))
    block = FloatOperationBlock(operation, x, y)
    result = AdjFloat(block.value())
    block.add_output(result)
    record(block)
    return result


def weighted_sum(values:Sequence[float], weights:Sequence[float]) -> AdjFloat:
    """ sum(w_i * j_i) as one recorded block. Plain numbers among <values> enter as constants. """
    if len(values) != len(weights):
        raise ValueError(f'{len(values)} values but {len(weights)} weights.')
    terms = []
    constant = 0.0
    for value, weight in zip(values, weights):
        if isinstance(value, AdjFloat):
            terms.append((weight, value))
        else:
            constant += weight * float(value)
    return _linear(terms, constant)


def assemble(form:Form, degree:int=None) -> Union[AdjFloat, np.ndarray, sparse.csr_matrix]:
    """ Assemble <form>. Functionals come back as AdjFloat and are recorded; vectors and matrices are not. """
    if form.arity:
        return fem.assemble(form, degree)
    if not is_recording():
        return AdjFloat(fem.assemble(form, degree))
    block = AssembleBlock(form, degree)
    result = AdjFloat(block.value())
    block.add_output(result)
    record(block)
    return result


def _record_solve(block:SolveBlock, u:FEFunction) -> None:
    block.solve()
    block.add_output(u)
    record(block)


def solve_linear(a:Form, L:Form, bcs:Sequence[DirichletBC], u:FEFunction) -> None:
    """ Solve a(u, v) = L(v) into <u>. """
    if not is_recording():
        fem.solve_linear(a, L, bcs, u)
        return
    if any(c is u for c in a.coefficients() + L.coefficients()):
        raise TapeError(f'{u} cannot be both the unknown and a coefficient of a linear solve.')
    residual = action(a, u) - L
    _record_solve(SolveBlock(u, bcs, residual, jacobian=a, rhs=L), u)


def solve_newton(F:Form, u:FEFunction, bcs:Sequence[DirichletBC]=(), tol=1e-10, max_iter=25) -> None:
    """ Solve F(u; v) = 0 by Newton's method starting from the current value of <u>. """
    if not is_recording():
        fem.solve_newton(F, u, bcs, tol, max_iter)
        return
    block = SolveBlock(u, bcs, F, newton_options={"tol": tol, "max_iter": max_iter})
    _record_solve(block, u)


def _record_linear(block, target:FEFunction) -> None:
    target.restore_tape_value(block.value())
    block.add_output(target)
    record(block)


def move_mesh(mesh:Mesh, theta:FEFunction) -> None:
    """ Add the vector CG1 field <theta> to the coordinates of <mesh>.
        Raises DegenerateMeshError and leaves the mesh alone if a cell would collapse or invert. """
    if not is_recording():
        if theta.space.dim != 2 * mesh.num_vertices or theta.space.mesh is not mesh:
            raise TapeError(f'{theta} is not a vector CG1 field over {mesh}.')
        mesh.displace(theta.dofs)
        return
    block = MeshMoveBlock(mesh, theta)
    block.write(block.value())
    block.add_output(mesh)
    record(block)


def assign(target:FEFunction, *terms) -> None:
    """ target = sum of w_i * f_i, dof by dof. Each term is a function or a (weight, function) pair. """
    pairs = [term if isinstance(term, tuple) else (1.0, term) for term in terms]
    if not pairs:
        raise ValueError('assign() needs at least one term.')
    for _, f in pairs:
        if f.space.dim != target.space.dim:
            raise ValueError(f'Cannot assign {f} to {target}: {f.space.dim} != {target.space.dim} dofs.')
    if not is_recording():
        target.dofs = sum(w * f.dofs for w, f in pairs)
        return
    _record_linear(AssignBlock(pairs), target)


def transfer_from_boundary(h:FEFunction, space=None) -> FEFunction:
    """ Vector CG1 function on the parent mesh equal to <h> at boundary vertices and zero elsewhere. """
    if not isinstance(h.space, BoundaryFunctionSpace):
        raise TapeError(f'{h} does not live on a boundary mesh.')
    parent = h.space.mesh.parent
    if space is None:
        space = coordinate_space(parent)
    if space.mesh is not parent:
        raise TapeError(f'{space} is not on the parent mesh of {h}.')
    if space.value_shape != h.space.value_shape or space.dim != 2 * parent.num_vertices:
        raise TapeError(f'{space} is not a vector CG1 space.')
    result = FEFunction(space, name=f'{h.name}_extended')
    if not is_recording():
        result.dofs = h.space.mesh.scatter_matrix() @ h.dofs
        return result
    _record_linear(ScatterBlock(h), result)
    return result
