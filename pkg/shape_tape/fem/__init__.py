""" Package for the finite element engine: quadrature, Lagrange elements, spaces and functions,
    assembly of forms, strong Dirichlet conditions and direct solvers. """

from .assembly import assemble, assemble_many
from .bcs import BoundaryConditionError, apply_dirichlet, dirichlet_dofs, dirichlet_dofs_and_values
from .function import FEFunction
from .interpolate import evaluate_at_points, interpolate
from .quadrature import QuadratureDegreeError
from .solve import ConvergenceError, Factorization, SingularMatrixError, solve_linear, solve_newton, solve_system
from .space import BoundaryFunctionSpace, FunctionSpace, SubSpace, TaylorHoodSpace, VectorFunctionSpace, \
    coordinate_space
