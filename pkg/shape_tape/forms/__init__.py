""" Package for the symbolic form language: expressions, forms and measures, Dirichlet conditions,
    and the transforms that differentiate, adjoin and substitute into forms. """

from .calculus import div, grad, nabla_grad
from .degree import estimate_quadrature_degree
from .expr import Argument, ArityError, Coefficient, Constant, Expr, FacetNormal, FormError, Identity, \
    ShapeMismatchError, SpatialCoordinate, TestFunction, TrialFunction, Zero, as_expr, as_matrix, as_vector, \
    components, cos, det, dot, inner, sin, split, sqrt, sym, tr, transpose
from .form import DirichletBC, Form, Measure, UnsupportedMeasureError, ds, dx
from .transforms import action, adjoint_form, gateaux_derivative, replace, shape_derivative, system
