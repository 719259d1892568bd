""" Recorded operations. Linear ones (mesh moves, sums, assignments, boundary scatters) get every
    derivative from their maps; Assemble and Solve differentiate their forms symbolically. """

from typing import Dict, List, Sequence, Set

import numpy as np

from shape_tape.fem import FEFunction, Factorization, apply_dirichlet, assemble, assemble_many, coordinate_space, \
    dirichlet_dofs, solve_newton
from shape_tape.fem.bcs import constrain_rows
from shape_tape.forms import Argument, DirichletBC, Form, gateaux_derivative, replace, shape_derivative
from shape_tape.mesh import Mesh
from shape_tape.util.log import log

from .tape import Block, BlockVariable, BoundaryDataError, LinearBlock, TapeError, accumulate

BOUNDARY_MOTION_TOL = 1e-10  # Tangent size on a boundary, relative to the largest tangent, that counts as motion.


def variable_space(var:BlockVariable):
    """ Space whose dof vectors hold the values of <var>. For a mesh, the coordinate space. """
    obj = var.obj
    return coordinate_space(obj) if isinstance(obj, Mesh) else obj.space


def derivative_wrt(form:Form, var:BlockVariable, direction=None) -> Form:
    """ Derivative of <form> with respect to the object behind <var>: the shape derivative for a mesh,
        the Gateaux derivative for a function. Without a direction, a new argument is added. """
    obj = var.obj
    if isinstance(obj, Mesh):
        if direction is None:
            direction = Argument(coordinate_space(obj), form.arity)
        return shape_derivative(form, direction)
    return gateaux_derivative(form, obj, direction)


def form_dependencies(form:Form) -> list:
    """ Objects whose values <form> depends on: its mesh and its coefficients. """
    if form.mesh is None:
        return []
    return [form.mesh, *form.coefficients()]


class MeshMoveBlock(LinearBlock):
    """ New coordinates = old coordinates + theta. Both maps are the identity. """

    def __init__(self, mesh:Mesh, theta:FEFunction) -> None:
        super().__init__()
        if theta.space.dim != 2 * mesh.num_vertices or theta.space.value_shape != (2,):
            raise TapeError(f'{theta} is not a vector CG1 field over {mesh}.')
        if theta.space.mesh is not mesh:
            raise TapeError(f'{theta} lives on another mesh.')
        self.mesh = mesh
        self.add_dependency(mesh)
        self.add_dependency(theta)

    def apply(self, i:int, x):
        return x

    def apply_transpose(self, i:int, y):
        return y

    def write(self, value:np.ndarray) -> None:
        self.mesh.check_coordinates(value)
        self.mesh.restore_tape_value(value)


class SumBlock(LinearBlock):
    """ Weighted sum of scalars plus a constant. Repeated terms are merged. """

    def __init__(self, terms:Sequence, constant=0.0) -> None:
        super().__init__()
        self.constant = float(constant)
        self.weights = []
        for weight, value in terms:
            var = self.add_dependency(value)
            index = self.dependencies.index(var)
            if index < len(self.weights):
                self.weights[index] += float(weight)
            else:
                self.weights.append(float(weight))

    def apply(self, i:int, x):
        return self.weights[i] * x

    def apply_transpose(self, i:int, y):
        return self.weights[i] * y


class AssignBlock(SumBlock):
    """ Dof-wise linear combination of functions on spaces of one size. """


class ScatterBlock(LinearBlock):
    """ Boundary field -> parent vector CG1 field, zero away from the boundary. The adjoint is the gather. """

    def __init__(self, h:FEFunction) -> None:
        super().__init__()
        self.matrix = h.space.mesh.scatter_matrix()
        self.add_dependency(h)

    def apply(self, i:int, x):
        return self.matrix @ x

    def apply_transpose(self, i:int, y):
        return self.matrix.T @ y


class FloatOperationBlock(Block):
    """ Product or quotient of two scalars, or a scalar to a constant power.
        Operands that are plain numbers are constants. """

    OPERATIONS = ("mul", "div", "pow")

    def __init__(self, operation:str, x, y) -> None:
        super().__init__()
        if operation not in self.OPERATIONS:
            raise TapeError(f'Unknown scalar operation {operation!r}.')
        self.operation = operation
        self.operands = []  # Tape variable or float for each operand.
        for operand in (x, y):
            if getattr(operand, "block_variable", False) is not False:
                self.operands.append(self.add_dependency(operand))
            else:
                self.operands.append(float(operand))
        if operation == "pow" and isinstance(self.operands[1], BlockVariable):
            raise TapeError('Only constant exponents are supported.')

    def _values(self) -> List[float]:
        return [op.saved_value() if isinstance(op, BlockVariable) else op for op in self.operands]

    @staticmethod
    def compute(operation:str, x:float, y:float) -> float:
        if operation == "mul":
            return x * y
        if operation == "div":
            return x / y
        return x ** y

    def value(self) -> float:
        return self.compute(self.operation, *self._values())

    def _first(self, x:float, y:float):
        if self.operation == "mul":
            return y, x
        if self.operation == "div":
            return 1.0 / y, -x / y ** 2
        return y * x ** (y - 1.0), 0.0

    def _second(self, x:float, y:float):
        """ (d2z/dx2, d2z/dxdy, d2z/dy2) """
        if self.operation == "mul":
            return 0.0, 1.0, 0.0
        if self.operation == "div":
            return 0.0, -1.0 / y ** 2, 2.0 * x / y ** 3
        return y * (y - 1.0) * x ** (y - 2.0), 0.0, 0.0

    def _tangents(self, active:Set[BlockVariable]) -> List[float]:
        tangents = []
        for op in self.operands:
            if isinstance(op, BlockVariable) and op in active and op.tlm_value is not None:
                tangents.append(op.tlm_value)
            else:
                tangents.append(0.0)
        return tangents

    def recompute(self) -> None:
        out = self.outputs[0]
        out.checkpoint = self.value()
        out.obj.block_variable = out

    def evaluate_tlm(self, active:Set[BlockVariable]) -> None:
        dx, dy = self._tangents(active)
        zx, zy = self._first(*self._values())
        self.outputs[0].tlm_value = zx * dx + zy * dy

    def evaluate_adj(self, active:Set[BlockVariable]) -> None:
        adj = self.outputs[0].adj_value
        if adj is None:
            return
        for op, partial in zip(self.operands, self._first(*self._values())):
            if isinstance(op, BlockVariable) and op in active:
                op.add_adjoint(partial * adj)

    def evaluate_hessian(self, active:Set[BlockVariable]) -> None:
        out = self.outputs[0]
        adj = out.adj_value or 0.0
        hess = out.hessian_value or 0.0
        x, y = self._values()
        dx, dy = self._tangents(active)
        zxx, zxy, zyy = self._second(x, y)
        second = (zxx * dx + zxy * dy, zxy * dx + zyy * dy)
        for op, partial, curvature in zip(self.operands, self._first(x, y), second):
            if isinstance(op, BlockVariable) and op in active:
                op.add_hessian(partial * hess + adj * curvature)


class FormBlock(Block):
    """ Base for blocks driven by a form. Derivative forms are built once, with placeholder functions
        for directions and adjoint solutions whose dofs are refreshed on every sweep. """

    def __init__(self) -> None:
        super().__init__()
        self._forms = {}         # Cached derivative forms.
        self._placeholders = {}  # Direction function per dependency index.

    def placeholder(self, key, space) -> FEFunction:
        if key not in self._placeholders:
            self._placeholders[key] = FEFunction(space, name=f'd{key}')
        return self._placeholders[key]

    def cached_form(self, key, build) -> Form:
        if key not in self._forms:
            self._forms[key] = build()
        return self._forms[key]

    def direction_key(self, active:Set[BlockVariable]) -> tuple:
        return tuple(i for i, dep in enumerate(self.dependencies) if dep in active)

    def directions(self, active:Set[BlockVariable]) -> Dict[int, FEFunction]:
        """ Placeholders holding the tangent of each active dependency (zero where none was propagated). """
        found = {}
        for i, dep in enumerate(self.dependencies):
            if dep in active:
                p = self.placeholder(i, variable_space(dep))
                p.restore_tape_value(dep.zero_like() if dep.tlm_value is None else dep.tlm_value)
                found[i] = p
        return found

    def tangent_form(self, form:Form, key:str, active:Set[BlockVariable]) -> Form:
        """ Derivative of <form> in the tangent direction of every active dependency. """
        directions = self.directions(active)

        def build() -> Form:
            total = None
            for i, p in directions.items():
                term = derivative_wrt(form, self.dependencies[i], p)
                total = term if total is None else total + term
            return total
        return self.cached_form((key, self.direction_key(active)), build)

    def gradients(self, form:Form, key, active:Set[BlockVariable]) -> Dict[int, np.ndarray]:
        """ Assembled derivative of <form> with respect to every active dependency, keyed by its index.
            The derivatives are integrated together in one pass. """
        indices = [i for i, dep in enumerate(self.dependencies) if dep in active]
        forms = [self.cached_form((key, i), lambda dep=self.dependencies[i]: derivative_wrt(form, dep))
                 for i in indices]
        return dict(zip(indices, assemble_many(forms)))


class AssembleBlock(FormBlock):
    """ Scalar output = integral of a functional. """

    def __init__(self, form:Form, degree:int=None) -> None:
        super().__init__()
        if form.arity:
            raise TapeError(f'Only functionals can be recorded as scalars, got arity {form.arity}.')
        self.form = form
        self.degree = degree
        for obj in form_dependencies(form):
            self.add_dependency(obj)

    def value(self) -> float:
        return assemble(self.form, self.degree)

    def recompute(self) -> None:
        self.restore()
        out = self.outputs[0]
        out.checkpoint = self.value()
        out.obj.block_variable = out

    def evaluate_tlm(self, active:Set[BlockVariable]) -> None:
        self.restore()
        self.outputs[0].tlm_value = assemble(self.tangent_form(self.form, "tlm", active), self.degree)

    def evaluate_adj(self, active:Set[BlockVariable]) -> None:
        adj = self.outputs[0].adj_value
        if adj is None:
            return
        self.restore()
        for i, gradient in self.gradients(self.form, "grad", active).items():
            self.dependencies[i].add_adjoint(adj * gradient)

    def evaluate_hessian(self, active:Set[BlockVariable]) -> None:
        out = self.outputs[0]
        if out.adj_value is None and out.hessian_value is None:
            return
        self.restore()
        first = {}
        if out.hessian_value is not None:
            first = self.gradients(self.form, "grad", active)
        second = {}
        if out.adj_value is not None:
            tangent = self.tangent_form(self.form, "tlm", active)
            second = self.gradients(tangent, ("second", self.direction_key(active)), active)
        for i, dep in enumerate(self.dependencies):
            if dep not in active:
                continue
            value = None
            if i in first:
                value = out.hessian_value * first[i]
            if i in second:
                value = accumulate(value, out.adj_value * second[i])
            dep.add_hessian(value)


class SolveBlock(FormBlock):
    """ Output u solves F(u; v) = 0 for all test functions v, with strong Dirichlet conditions.

        Linear solves are given as (a, L) and use F = a(u, v) - L(v); nonlinear ones run Newton's
        method from the current value of u. Derivative systems use the Jacobian at the solution with
        constrained rows replaced by identity rows and zero right-hand sides. Boundary values that
        move with the mesh are not differentiated. """

    def __init__(self, u:FEFunction, bcs:Sequence[DirichletBC], residual:Form, jacobian:Form=None,
                 rhs:Form=None, newton_options:dict=None) -> None:
        super().__init__()
        if residual.arity != 1:
            raise TapeError(f'A solve needs a residual of arity 1, got {residual.arity}.')
        self.u = u
        self.bcs = list(bcs)
        self.residual = residual
        self.linear = rhs is not None            # Linear solves keep (jacobian, rhs) = (a, L).
        self.jacobian = jacobian if jacobian is not None else gateaux_derivative(residual, u)
        self.rhs = rhs
        self.newton_options = newton_options or {}
        for obj in form_dependencies(residual):
            if obj is not u:
                self.add_dependency(obj)
        self.test = residual.arguments[0]
        self.adjoint = FEFunction(self.test.space, name="adjoint")
        self.adjoint_tangent = FEFunction(self.test.space, name="adjoint_tangent")
        self._bc_dofs = None
        self._moving_data = [bc for bc in self.bcs if bc.depends_on_coordinates]
        self._warned = False
        self._matrix = None
        self._factor = None
        self._adjoint_values = None

    @property
    def bc_dofs(self) -> np.ndarray:
        if self._bc_dofs is None:
            self._bc_dofs = dirichlet_dofs(self.bcs)
        return self._bc_dofs

    def solve(self) -> None:
        """ Compute the output into the live function from the current dependency values. """
        self._matrix = self._factor = None
        if self.linear:
            self._matrix = assemble(self.jacobian)
            matrix, rhs = apply_dirichlet(self._matrix, assemble(self.rhs), self.bcs)
            self._factor = Factorization(matrix)
            solution = self._factor.solve(rhs)
            solution[self.bc_dofs] = rhs[self.bc_dofs]
            self.u.restore_tape_value(solution)
        else:
            solve_newton(self.residual, self.u, self.bcs, jacobian=self.jacobian, **self.newton_options)

    def recompute(self) -> None:
        self.restore()
        self.solve()
        self.publish()

    def restore_state(self) -> None:
        self.restore()
        self.outputs[0].restore()

    def factor(self) -> Factorization:
        """ Factors of the Jacobian at the solution with identity rows on constrained dofs. """
        if self._factor is None:
            if self._matrix is None:
                self._matrix = assemble(self.jacobian)
            self._factor = Factorization(constrain_rows(self._matrix, self.bc_dofs))
        return self._factor

    def _homogenize(self, values:np.ndarray) -> np.ndarray:
        values = np.array(values, dtype=float)
        values[self.bc_dofs] = 0.0
        return values

    def _solve_adjoint(self, rhs:np.ndarray) -> np.ndarray:
        """ Solve with the transposed Jacobian on unconstrained dofs; constrained entries are zero. """
        return self._homogenize(self.factor().solve(self._homogenize(rhs), transpose=True))

    def _check_boundary_data(self, dep:BlockVariable) -> None:
        if not isinstance(dep.obj, Mesh) or dep.tlm_value is None:
            return
        mesh = dep.obj
        nv = mesh.num_vertices
        tolerance = BOUNDARY_MOTION_TOL * float(np.abs(dep.tlm_value).max())
        for bc in self._moving_data:
            vertices = mesh.marked_vertices(bc.tags)
            moved = np.abs(np.concatenate([dep.tlm_value[vertices], dep.tlm_value[nv + vertices]]))
            if moved.size and moved.max() > tolerance:
                raise BoundaryDataError(f'{bc} depends on the coordinates of a moving boundary.')

    def _warn_boundary_data(self, active:Set[BlockVariable]) -> None:
        if self._warned or not self._moving_data:
            return
        if any(isinstance(dep.obj, Mesh) for dep in self.active_dependencies(active)):
            log.warning("Dirichlet data %s depends on the coordinates; its shape sensitivity is dropped.",
                        self._moving_data)
            self._warned = True

    def adjoint_residual(self, key:str, function:FEFunction) -> Form:
        return self.cached_form(key, lambda: replace(self.residual, {self.test: function}))

    def evaluate_tlm(self, active:Set[BlockVariable]) -> None:
        deps = [dep for dep in self.active_dependencies(active) if dep.tlm_value is not None]
        out = self.outputs[0]
        if not deps:
            out.tlm_value = None
            return
        for dep in deps:
            self._check_boundary_data(dep)
        self.restore_state()
        rhs = -assemble(self.tangent_form(self.residual, "tlm", active))
        out.tlm_value = self._homogenize(self.factor().solve(self._homogenize(rhs)))

    def evaluate_adj(self, active:Set[BlockVariable]) -> None:
        adj = self.outputs[0].adj_value
        self._adjoint_values = None
        if adj is None or not self.active_dependencies(active):
            return
        self._warn_boundary_data(active)
        self.restore_state()
        self._adjoint_values = self._solve_adjoint(adj)
        self.adjoint.restore_tape_value(self._adjoint_values)
        form = self.adjoint_residual("adjoint", self.adjoint)
        for i, gradient in self.gradients(form, "adjoint_grad", active).items():
            self.dependencies[i].add_adjoint(-gradient)

    def evaluate_hessian(self, active:Set[BlockVariable]) -> None:
        out = self.outputs[0]
        if self._adjoint_values is None and out.hessian_value is None:
            return
        if not self.active_dependencies(active):
            return
        self.restore_state()
        rhs = out.zero_like() if out.hessian_value is None else np.array(out.hessian_value)
        tangent = None
        if self._adjoint_values is not None:
            self.adjoint.restore_tape_value(self._adjoint_values)
            weighted = self.adjoint_residual("adjoint", self.adjoint)
            tangent = self._adjoint_tangent_form(weighted, active)
            rhs = rhs - assemble(self.cached_form(("second_u", self.direction_key(active)),
                                                  lambda: gateaux_derivative(tangent, self.u)))
        self.adjoint_tangent.restore_tape_value(self._solve_adjoint(rhs))
        form = self.adjoint_residual("adjoint_tangent", self.adjoint_tangent)
        second = {}
        if tangent is not None:
            second = self.gradients(tangent, ("second", self.direction_key(active)), active)
        for i, gradient in self.gradients(form, "adjoint_tangent_grad", active).items():
            self.dependencies[i].add_hessian(-gradient - second[i] if i in second else -gradient)

    def _adjoint_tangent_form(self, weighted:Form, active:Set[BlockVariable]) -> Form:
        """ Tangent of the adjoint-weighted residual: through u along its tangent and through each
            active dependency along its own. """
        out = self.outputs[0]
        u_dot = self.placeholder("u", self.u.space)
        u_dot.restore_tape_value(out.zero_like() if out.tlm_value is None else out.tlm_value)
        through_deps = self.tangent_form(weighted, "adjoint_tlm", active)

        def build() -> Form:
            return gateaux_derivative(weighted, self.u, u_dot) + through_deps
        return self.cached_form(("adjoint_tangent", self.direction_key(active)), build)
