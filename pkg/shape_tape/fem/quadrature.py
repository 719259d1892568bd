""" Gauss rules on the reference triangle (0,0), (1,0), (0,1) and on the unit interval.

    Triangle rules are conical products: Gauss-Jacobi points in the collapsed direction times
    Gauss-Legendre points along the collapsed rays. A rule with n points per direction integrates
    polynomials of total degree 2n-1 exactly. Every supported degree is tabulated at import. """

from typing import Dict, NamedTuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 8


class QuadratureDegreeError(ValueError):
    """ Raised when no tabulated rule is exact for the requested degree. """


class QuadratureRule(NamedTuple):
    points: np.ndarray   # Reference coordinates, shape (Q, dim).
    weights: np.ndarray  # Weights summing to the reference measure, shape (Q,).


def _num_points(degree:int) -> int:
    return max(1, int(np.ceil((degree + 1) / 2)))


def _triangle_rule(degree:int) -> QuadratureRule:
    n = _num_points(degree)
    s, ws = roots_jacobi(n, 1.0, 0.0)
    t, wt = roots_legendre(n)
    s = 0.5 * (1.0 + s)
    t = 0.5 * (1.0 + t)
    x = np.repeat(s, n)
    y = np.tile(t, n) * (1.0 - x)
    weights = np.outer(0.25 * ws, 0.5 * wt).ravel()
    return QuadratureRule(np.column_stack([x, y]), weights)


def _interval_rule(degree:int) -> QuadratureRule:
    t, w = roots_legendre(_num_points(degree))
    return QuadratureRule(0.5 * (1.0 + t)[:, None], 0.5 * w)


def _tabulate(make) -> Dict[int, QuadratureRule]:
    rules = {}
    for degree in range(MAX_DEGREE + 1):
        rule = make(degree)
        rule.points.setflags(write=False)
        rule.weights.setflags(write=False)
        rules[degree] = rule
    return rules


_TRIANGLE_RULES = _tabulate(_triangle_rule)
_INTERVAL_RULES = _tabulate(_interval_rule)


def _check_degree(degree:int) -> int:
    degree = int(degree)
    if degree < 0 or degree > MAX_DEGREE:
        raise QuadratureDegreeError(f'No quadrature rule for degree {degree}; '
                                    f'rules exist for degrees 0 to {MAX_DEGREE}.')
    return degree


def triangle_rule(degree:int) -> QuadratureRule:
    return _TRIANGLE_RULES[_check_degree(degree)]


def interval_rule(degree:int) -> QuadratureRule:
    """ Points are parameters in [0, 1] along an edge; the weights sum to 1. """
    return _INTERVAL_RULES[_check_degree(degree)]
