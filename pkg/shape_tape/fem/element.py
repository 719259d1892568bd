""" Continuous Lagrange basis functions on the reference triangle.

    Reference vertex i is (0,0), (1,0), (0,1) for i = 0, 1, 2. Local edge i is the edge opposite
    vertex i and joins vertices (i+1)%3 and (i+2)%3, matching the mesh edge numbering. """

from typing import Tuple

import numpy as np

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# Gradients of the barycentric coordinates with respect to the reference coordinates.
_BARYCENTRIC_GRADS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_EDGES = [((i + 1) % 3, (i + 2) % 3) for i in range(3)]


def barycentric(points:np.ndarray) -> np.ndarray:
    """ Barycentric coordinates of reference points, shape (..., 3). """
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    return np.stack([1.0 - x - y, x, y], axis=-1)


class LagrangeElement:
    """ CG1 or CG2 scalar element. CG2 numbers the three vertex functions first, then the three
        edge functions in local edge order. """

    def __init__(self, degree:int) -> None:
        if degree not in (1, 2):
            raise ValueError(f'Only degree 1 and 2 Lagrange elements are supported, got {degree}.')
        self.degree = degree

    @property
    def num_dofs(self) -> int:
        return 3 if self.degree == 1 else 6

    def tabulate(self, points:np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """ Values (..., n) and reference gradients (..., n, 2) of every basis function at <points>. """
        lam = barycentric(points)
        dlam = _BARYCENTRIC_GRADS
        if self.degree == 1:
            grads = np.broadcast_to(dlam, lam.shape + (2,)).copy()
            return lam, grads
        values = [lam[..., i] * (2.0 * lam[..., i] - 1.0) for i in range(3)]
        grads = [(4.0 * lam[..., i] - 1.0)[..., None] * dlam[i] for i in range(3)]
        for j, k in _EDGES:
            values.append(4.0 * lam[..., j] * lam[..., k])
            grads.append(4.0 * (lam[..., j][..., None] * dlam[k] + lam[..., k][..., None] * dlam[j]))
        return np.stack(values, axis=-1), np.stack(grads, axis=-2)

    def __repr__(self) -> str:
        return f'<CG{self.degree}>'


ELEMENTS = {1: LagrangeElement(1), 2: LagrangeElement(2)}
