""" Package for deforming meshes: Riesz maps that turn gradients into directions, the Lame field and
    elasticity extension of boundary data, and a descent optimizer with a mesh quality guard. """

from .descent import CONVERGED, MAX_ITER, NO_ADMISSIBLE_STEP, DescentSettings, DescentTrace, optimize_descent
from .elasticity import OBSTACLE_VALUE, OUTER_VALUE, LameField, elasticity_extend, solve_lame_field, strain, stress
from .riesz import RIESZ_KINDS, RieszMap, eliminate, riesz_maps, riesz_representation
