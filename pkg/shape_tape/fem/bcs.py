""" Strong Dirichlet conditions by row replacement.

    The rows of constrained dofs are replaced by identity rows and the matching right-hand side
    entries by the boundary values (forward mode) or by zero (homogenized mode, used for Newton
    corrections and tangent/adjoint systems). When several conditions constrain one dof, the last one wins. """

from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy import sparse

from shape_tape.forms import DirichletBC

from .interpolate import evaluate_at_points
from .space import SubSpace

FORWARD = "forward"
HOMOGENIZED = "homogenized"


class BoundaryConditionError(ValueError):
    """ Raised when a boundary condition cannot be applied to its space. """


def _layout(bc:DirichletBC) -> Tuple[object, list]:
    """ Full space of the condition and the space component behind each value component. """
    space = bc.space
    if isinstance(space, SubSpace):
        return space.parent, space.component_indices
    return space, list(range(len(space.components)))


def dirichlet_dofs_and_values(bc:DirichletBC) -> Tuple[np.ndarray, np.ndarray]:
    """ Global dofs constrained by <bc> and the value each one takes at its current position. """
    space, components = _layout(bc)
    facets = space.mesh.facets(bc.tags)
    if not facets.size:
        raise BoundaryConditionError(f'No boundary facets carry the tags {bc.tags}.')
    all_dofs = []
    all_values = []
    coordinates = space.dof_coordinates()
    for j, c in enumerate(components):
        dofs = space.boundary_component_dofs(c, facets)
        values = evaluate_at_points(bc.value, coordinates[dofs])
        all_dofs.append(dofs)
        all_values.append(values[:, j] if bc.value.shape else values)
    return np.concatenate(all_dofs), np.concatenate(all_values)


def dirichlet_dofs(bcs:Iterable[DirichletBC]) -> np.ndarray:
    """ Sorted union of the dofs constrained by any of <bcs>. """
    found = [dirichlet_dofs_and_values(bc)[0] for bc in bcs]
    return np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)


def constrain_rows(matrix:sparse.spmatrix, dofs:np.ndarray) -> sparse.csr_matrix:
    """ Copy of <matrix> with the rows of <dofs> replaced by identity rows. """
    n = matrix.shape[0]
    mask = np.zeros(n)
    mask[dofs] = 1.0
    keep = sparse.diags(1.0 - mask)
    return (keep @ matrix + sparse.diags(mask)).tocsr()


def apply_dirichlet(matrix, rhs:np.ndarray, bcs:Sequence[DirichletBC], mode=FORWARD):
    """ Return the constrained (matrix, rhs). Either may be None to skip it. """
    if mode not in (FORWARD, HOMOGENIZED):
        raise BoundaryConditionError(f'Unknown Dirichlet mode {mode!r}.')
    rhs = None if rhs is None else np.array(rhs, dtype=float)
    constrained = []
    for bc in bcs:
        dofs, values = dirichlet_dofs_and_values(bc)
        constrained.append(dofs)
        if rhs is not None:
            rhs[dofs] = values if mode == FORWARD else 0.0
    if matrix is not None and constrained:
        matrix = constrain_rows(matrix, np.concatenate(constrained))
    return matrix, rhs
