""" Direct sparse solvers for assembled systems, and the linear and Newton solves of forms. """

from typing import List, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from shape_tape.forms import DirichletBC, Form, gateaux_derivative
from shape_tape.util.log import log

from .assembly import assemble
from .bcs import HOMOGENIZED, apply_dirichlet, dirichlet_dofs, dirichlet_dofs_and_values
from .function import FEFunction

RESIDUAL_TOLERANCE = 1e-10  # Accepted residual norm of a direct solve, relative to the norm of the right-hand side.


class SingularMatrixError(ArithmeticError):
    """ Raised when a system matrix cannot be factored or the solution does not satisfy the system. """


class ConvergenceError(ArithmeticError):
    """ Raised when Newton's method does not reach the tolerance. """

    def __init__(self, message:str, history:List[float]) -> None:
        super().__init__(message)
        self.history = history  # Residual norm before each iteration.


class Factorization:
    """ Sparse LU factors of a square matrix with partial pivoting. Solves are checked against the matrix. """

    def __init__(self, matrix:sparse.spmatrix) -> None:
        matrix = sparse.csc_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise SingularMatrixError(f'System matrix is not square: {matrix.shape}.')
        try:
            self._lu = splu(matrix)
        except RuntimeError as e:
            raise SingularMatrixError(f'System matrix is singular: {e}') from e
        self._matrix = matrix

    def solve(self, rhs:np.ndarray, transpose=False) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = self._lu.solve(rhs, trans='T' if transpose else 'N')
        matrix = self._matrix.T if transpose else self._matrix
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError('Solve produced non-finite values.')
        residual = np.linalg.norm(matrix @ x - rhs)
        bound = RESIDUAL_TOLERANCE * np.linalg.norm(rhs)
        if residual > bound:
            raise SingularMatrixError(f'Solve residual {residual:.3e} exceeds {bound:.3e}; '
                                      'the matrix is nearly singular.')
        return x


def solve_system(matrix:sparse.spmatrix, rhs:np.ndarray) -> np.ndarray:
    return Factorization(matrix).solve(rhs)


def _snapped(x:np.ndarray, rhs:np.ndarray, bcs:Sequence[DirichletBC]) -> np.ndarray:
    """ <x> with constrained dofs set exactly to their right-hand side values, free of solver round-off. """
    dofs = dirichlet_dofs(bcs)
    x[dofs] = rhs[dofs]
    return x


def solve_linear(a:Form, L:Form, bcs:Sequence[DirichletBC], u:FEFunction) -> None:
    """ Solve a(u, v) = L(v) for all test functions v, with u fixed by <bcs> on constrained dofs. """
    matrix, rhs = apply_dirichlet(assemble(a), assemble(L), bcs)
    u.dofs = _snapped(solve_system(matrix, rhs), rhs, bcs)


def solve_newton(F:Form, u:FEFunction, bcs:Sequence[DirichletBC]=(), tol=1e-10, max_iter=25,
                 jacobian:Form=None) -> int:
    """ Drive the residual F(u; v) to zero by Newton's method starting from the current dofs of <u>.
        Constrained dofs are set to their boundary values first and corrections there are zero.
        Return the number of iterations taken. """
    if jacobian is None:
        jacobian = gateaux_derivative(F, u)
    dofs = u.dofs.copy()
    for bc in bcs:
        bc_dofs, values = dirichlet_dofs_and_values(bc)
        dofs[bc_dofs] = values
    u.dofs = dofs
    history = []
    for iteration in range(max_iter + 1):
        _, residual = apply_dirichlet(None, assemble(F), bcs, HOMOGENIZED)
        norm = float(np.linalg.norm(residual))
        history.append(norm)
        log.debug("Newton iteration %d: residual %.3e", iteration, norm)
        if norm <= tol:
            return iteration
        if iteration == max_iter:
            break
        matrix, rhs = apply_dirichlet(assemble(jacobian), -residual, bcs, HOMOGENIZED)
        u.dofs = u.dofs + _snapped(solve_system(matrix, rhs), rhs, bcs)
    raise ConvergenceError(f'Newton did not reach {tol:.1e} in {max_iter} iterations '
                           f'(last residual {history[-1]:.3e}).', history)
