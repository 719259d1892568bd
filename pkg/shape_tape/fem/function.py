import numpy as np

from shape_tape.forms import Coefficient

from .space import FunctionSpace


class FEFunction(Coefficient):
    """ Discrete function: a space and one value per dof.

        Writing new dofs through the public setters makes a value the tape has never seen,
        so the tape variable is dropped. The tape itself uses tape_value/restore_tape_value. """

    __slots__ = ("_dofs", "block_variable")

    def __init__(self, space, dofs=None, name:str=None) -> None:
        super().__init__(space, name)
        self.block_variable = None  # Tape variable holding the current dofs, if any.
        self._dofs = None
        self._write(np.zeros(space.dim) if dofs is None else dofs)

    def _write(self, dofs) -> None:
        dofs = np.array(dofs, dtype=float)
        if dofs.ndim == 0:
            dofs = np.full(self.space.dim, float(dofs))
        if dofs.shape != (self.space.dim,):
            raise ValueError(f'{self} needs {self.space.dim} dof values, got shape {dofs.shape}.')
        dofs.setflags(write=False)
        self._dofs = dofs

    @property
    def dofs(self) -> np.ndarray:
        """ Read-only dof vector. """
        return self._dofs

    @dofs.setter
    def dofs(self, dofs) -> None:
        self._write(dofs)
        self.block_variable = None

    def assign(self, other) -> None:
        """ Copy the dofs of another function on a space of the same size, or set every dof to a number. """
        self.dofs = other.dofs if isinstance(other, FEFunction) else other

    def copy(self, name:str=None) -> "FEFunction":
        return FEFunction(self.space, self._dofs, name)

    def tape_value(self) -> np.ndarray:
        return self._dofs.copy()

    def restore_tape_value(self, dofs:np.ndarray) -> None:
        self._write(dofs)

    def sub(self, i:int) -> "FEFunction":
        """ Copy of the velocity (0) or pressure (1) part of a mixed function. """
        subspaces = self.space.subspaces
        if not subspaces:
            raise ValueError(f'{self.space} is not a mixed space.')
        dofs = self.space.block_dofs(i)
        return FEFunction(subspaces[i], self._dofs[dofs], f'{self.name}_{i}')

    def vertex_values(self) -> np.ndarray:
        """ Values at the mesh vertices: shape (nv,) for scalars, (nv, 2) for vectors.
            CG2 dofs beyond the vertex dofs are midside values and are left out. """
        space = self.space
        if not isinstance(space, FunctionSpace) or space.subspaces:
            raise ValueError(f'Cannot take vertex values of a function on {space}.')
        nv = space.mesh.num_vertices
        columns = [self._dofs[space.component_dofs(c)[:nv]] for c in range(len(space.components))]
        if not space.value_shape:
            return columns[0]
        return np.column_stack(columns)

    def __repr__(self) -> str:
        return f'<FEFunction {self.name} on {self.space}>'
