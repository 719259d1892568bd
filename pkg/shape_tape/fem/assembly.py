""" Quadrature assembly of forms.

    Integrands are evaluated bottom-up as numpy arrays over a chunk of cells (or boundary facets)
    at once. Every evaluated array has four leading axes, (test basis, trial basis, entity, point),
    followed by the value shape of the node. Axes of length one broadcast. """

from functools import singledispatchmethod
from typing import List, Sequence, Union

import numpy as np
from scipy import sparse

from shape_tape.forms import Form, FormError
from shape_tape.forms.degree import estimate_quadrature_degree
from shape_tape.forms.expr import Argument, Coefficient, Constant, Cos, Det, Division, Dot, Expr, FacetNormal, \
    Grad, Identity, Indexed, Inner, ListTensor, Power, Product, Sin, SpatialCoordinate, Sqrt, Sum, Trace, \
    Transpose, Zero, iter_nodes
from shape_tape.forms.form import CELL

from .element import ELEMENTS, REFERENCE_VERTICES
from .quadrature import interval_rule, triangle_rule

CHUNK_SIZE = 512
LEAD = 4  # Number of leading axes on evaluated arrays.

Tensor = Union[float, np.ndarray, sparse.csr_matrix]


def _jacobians(points:np.ndarray) -> np.ndarray:
    """ Affine map Jacobians with columns p1 - p0 and p2 - p0, shape (E, 2, 2). """
    return np.stack([points[:, 1] - points[:, 0], points[:, 2] - points[:, 0]], axis=-1)


class Batch:
    """ Geometry, quadrature and basis tabulations for a chunk of cells or boundary facets.

        <ref_points> is either (Q, 2), shared by every entity, or (3, Q, 2) with one set per local edge,
        in which case <local_edges> picks the set of each entity. """

    def __init__(self, mesh, cells:np.ndarray, ref_points:np.ndarray, local_edges:np.ndarray=None) -> None:
        self.mesh = mesh
        self.cells = cells
        self._ref_points = ref_points
        self._local_edges = local_edges
        corners = mesh.vertices[mesh.cells[cells]]
        jac = _jacobians(corners)
        self.det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        self.inv = np.linalg.inv(jac)
        if local_edges is None:
            self.X = corners[:, 0, None, :] + np.einsum('eij,qj->eqi', jac, ref_points)
        else:
            self.X = corners[:, 0, None, :] + np.einsum('eij,eqj->eqi', jac, ref_points[local_edges])
        self.num_entities, self.num_points = self.X.shape[:2]
        self.weights = None   # Physical quadrature weights, shape (E, Q).
        self.normals = None   # Outward unit normals of facet batches, shape (E, 2).
        self._tabulated = {}
        self._bases = {}

    def tabulate(self, degree:int):
        """ Scalar basis values (E, Q, n) and physical gradients (E, Q, n, 2) for one element degree. """
        if degree not in self._tabulated:
            values, grads = ELEMENTS[degree].tabulate(self._ref_points)
            if self._local_edges is not None:
                values = values[self._local_edges]
                grads = grads[self._local_edges]
            shape = (self.num_entities, self.num_points)
            values = np.broadcast_to(values, shape + values.shape[-1:])
            grads = np.broadcast_to(grads, shape + grads.shape[-2:])
            grads = np.einsum('eji,eqkj->eqki', self.inv, grads)
            self._tabulated[degree] = values, grads
        return self._tabulated[degree]

    def basis(self, space):
        """ Values (n_local, E, Q, *value_shape) and gradients (..., 2) of every local basis function. """
        key = id(space)
        if key not in self._bases:
            value_shape = space.value_shape
            n_local = len(space.local_basis)
            lead = (n_local, self.num_entities, self.num_points)
            values = np.zeros(lead + value_shape)
            grads = np.zeros(lead + value_shape + (2,))
            start = 0
            for c, degree in enumerate(space.components):
                phi, dphi = self.tabulate(degree)
                block = slice(start, start + phi.shape[-1])
                phi = np.moveaxis(phi, -1, 0)
                dphi = np.moveaxis(dphi, -2, 0)
                if value_shape:
                    values[block, :, :, c] = phi
                    grads[block, :, :, c] = dphi
                else:
                    values[block] = phi
                    grads[block] = dphi
                start = block.stop
            self._bases[key] = space, values, grads
        return self._bases[key][1:]

    def cell_dofs(self, space) -> np.ndarray:
        return space.cell_dofs[self.cells]


def cell_batches(mesh, degree:int, chunk_size=CHUNK_SIZE):
    rule = triangle_rule(degree)
    for start in range(0, mesh.num_cells, chunk_size):
        cells = np.arange(start, min(start + chunk_size, mesh.num_cells))
        batch = Batch(mesh, cells, rule.points)
        batch.weights = rule.weights[None, :] * np.abs(batch.det)[:, None]
        yield batch


def _edge_reference_points(t:np.ndarray) -> np.ndarray:
    """ Reference points along each local edge, shape (3, Q, 2). Edge l runs from vertex l+1 to vertex l+2. """
    out = []
    for edge in range(3):
        a = REFERENCE_VERTICES[(edge + 1) % 3]
        b = REFERENCE_VERTICES[(edge + 2) % 3]
        out.append(a + t[:, None] * (b - a))
    return np.stack(out)


def facet_batches(mesh, tags, degree:int, chunk_size=CHUNK_SIZE):
    rule = interval_rule(degree)
    ref_points = _edge_reference_points(rule.points[:, 0])
    facets = mesh.facets(tags)
    for start in range(0, len(facets), chunk_size):
        cells, local = mesh.facet_cells(facets[start:start + chunk_size])
        batch = Batch(mesh, cells, ref_points, local)
        corners = mesh.vertices[mesh.cells[cells]]
        rows = np.arange(len(cells))
        d = corners[rows, (local + 2) % 3] - corners[rows, (local + 1) % 3]
        length = np.hypot(d[:, 0], d[:, 1])
        batch.weights = rule.weights[None, :] * length[:, None]
        # Cells are counter-clockwise, so the outward normal is the edge direction turned clockwise.
        batch.normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
        yield batch


def _expand(a:np.ndarray, rank:int) -> np.ndarray:
    """ Append <rank> unit axes so that a scalar array broadcasts against a tensor one. """
    return a.reshape(a.shape + (1,) * rank)


_DOT_SUBSCRIPTS = {(1, 1): '...i,...i->...', (2, 1): '...ij,...j->...i',
                   (1, 2): '...i,...ij->...j', (2, 2): '...ij,...jk->...ik'}


class IntegrandEvaluator:
    """ Evaluates expression nodes over one batch. Values are kept, so integrands evaluated by the same
        evaluator share their common subexpressions. """

    def __init__(self, batch:Batch) -> None:
        self.batch = batch
        self._values = {}  # Evaluated array per node.

    def __call__(self, e:Expr) -> np.ndarray:
        values = self._values
        for node in iter_nodes(e):
            if node not in values:
                values[node] = self.evaluate(node, *[values[op] for op in node.operands])
        return values[e]

    @singledispatchmethod
    def evaluate(self, node:Expr, *ops:np.ndarray) -> np.ndarray:
        raise FormError(f'Cannot evaluate {type(node).__name__} nodes.')

    @evaluate.register(Constant)
    def _(self, node:Expr) -> np.ndarray:
        return np.reshape(node.value, (1,) * LEAD + node.shape)

    @evaluate.register(Zero)
    def _(self, node:Expr) -> np.ndarray:
        return np.zeros((1,) * LEAD + node.shape)

    @evaluate.register(Identity)
    def _(self, node:Expr) -> np.ndarray:
        return np.reshape(np.eye(node.shape[0]), (1,) * LEAD + node.shape)

    @evaluate.register(SpatialCoordinate)
    def _(self, node:Expr) -> np.ndarray:
        return self.batch.X[None, None]

    @evaluate.register(FacetNormal)
    def _(self, node:Expr) -> np.ndarray:
        if self.batch.normals is None:
            raise FormError('The facet normal is only defined in facet integrals.')
        return self.batch.normals[None, None, :, None, :]

    def _argument(self, node:Argument, gradient:bool) -> np.ndarray:
        values, grads = self.batch.basis(node.space)
        basis = grads if gradient else values
        return basis[:, None] if node.number == 0 else basis[None]

    def _coefficient(self, node:Coefficient, gradient:bool) -> np.ndarray:
        values, grads = self.batch.basis(node.space)
        basis = grads if gradient else values
        local = node.dofs[self.batch.cell_dofs(node.space)]
        return np.einsum('ek,keq...->eq...', local, basis)[None, None]

    @evaluate.register(Argument)
    def _(self, node:Expr) -> np.ndarray:
        return self._argument(node, False)

    @evaluate.register(Coefficient)
    def _(self, node:Expr) -> np.ndarray:
        return self._coefficient(node, False)

    @evaluate.register(Grad)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        function = node.operands[0]
        if isinstance(function, Argument):
            return self._argument(function, True)
        return self._coefficient(function, True)

    @evaluate.register(Sum)
    def _(self, node:Expr, a:np.ndarray, b:np.ndarray) -> np.ndarray:
        return a + b

    @evaluate.register(Product)
    def _(self, node:Expr, a:np.ndarray, b:np.ndarray) -> np.ndarray:
        return _expand(a, len(node.shape)) * b

    @evaluate.register(Division)
    def _(self, node:Expr, a:np.ndarray, b:np.ndarray) -> np.ndarray:
        return a / _expand(b, len(node.shape))

    @evaluate.register(Power)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.power(a, node.exponent)

    @evaluate.register(Sin)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.sin(a)

    @evaluate.register(Cos)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.cos(a)

    @evaluate.register(Sqrt)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.sqrt(a)

    @evaluate.register(Inner)
    def _(self, node:Expr, a:np.ndarray, b:np.ndarray) -> np.ndarray:
        rank = node.operands[0].rank
        return np.sum(a * b, axis=tuple(range(-rank, 0)))

    @evaluate.register(Dot)
    def _(self, node:Expr, a:np.ndarray, b:np.ndarray) -> np.ndarray:
        ranks = node.operands[0].rank, node.operands[1].rank
        return np.einsum(_DOT_SUBSCRIPTS[ranks], a, b)

    @evaluate.register(Transpose)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.swapaxes(a, -1, -2)

    @evaluate.register(Trace)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.trace(a, axis1=-2, axis2=-1)

    @evaluate.register(Det)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]

    @evaluate.register(Indexed)
    def _(self, node:Expr, a:np.ndarray) -> np.ndarray:
        return np.take(a, node.index, axis=LEAD)

    @evaluate.register(ListTensor)
    def _(self, node:Expr, *items:np.ndarray) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*items), axis=LEAD)


def _batches(integral, degree:int):
    measure = integral.measure
    if measure.kind == CELL:
        return cell_batches(integral.mesh, degree)
    return facet_batches(integral.mesh, measure.tags, degree)


def _empty(form:Form) -> Tensor:
    dims = [a.space.dim for a in form.arguments]
    if not dims:
        return 0.0
    if len(dims) == 1:
        return np.zeros(dims[0])
    return sparse.csr_matrix(tuple(dims))


def _integral_degree(integral, degree:int=None) -> int:
    if degree is not None:
        return degree
    if integral.measure.degree is not None:
        return integral.measure.degree
    return estimate_quadrature_degree(integral.integrand)


def assemble_many(forms:Sequence[Form], degree:int=None) -> List[Tensor]:
    """ Integrate several forms in one pass. Integrals over the same mesh, measure and quadrature
        degree share their batches, and subexpressions common to several integrands are evaluated once. """
    totals = [_empty(form) for form in forms]
    triplets = [([], [], []) for _ in forms]
    groups = {}
    for k, form in enumerate(forms):
        for integral in form.integrals:
            q = _integral_degree(integral, degree)
            key = (id(integral.mesh), integral.measure.kind, integral.measure.tags, q)
            groups.setdefault(key, (integral, q, []))[2].append((k, integral.integrand))
    for integral, q, members in groups.values():
        for batch in _batches(integral, q):
            evaluator = IntegrandEvaluator(batch)
            for k, integrand in members:
                spaces = [a.space for a in forms[k].arguments]
                arity = len(spaces)
                sizes = tuple(len(s.local_basis) for s in spaces) + (1,) * (2 - arity)
                values = np.broadcast_to(evaluator(integrand), sizes + (batch.num_entities, batch.num_points))
                local = np.einsum('treq,eq->tre', values, batch.weights)
                if arity == 0:
                    totals[k] += float(local.sum())
                elif arity == 1:
                    dofs = batch.cell_dofs(spaces[0])
                    totals[k] += np.bincount(dofs.ravel(), local[:, 0, :].T.ravel(), minlength=spaces[0].dim)
                else:
                    test = batch.cell_dofs(spaces[0])
                    trial = batch.cell_dofs(spaces[1])
                    shape = (len(test), test.shape[1], trial.shape[1])
                    rows, cols, data = triplets[k]
                    rows.append(np.broadcast_to(test[:, :, None], shape).ravel())
                    cols.append(np.broadcast_to(trial[:, None, :], shape).ravel())
                    data.append(np.transpose(local, (2, 0, 1)).ravel())
    for k, form in enumerate(forms):
        rows, cols, data = triplets[k]
        if data:
            shape = tuple(a.space.dim for a in form.arguments)
            totals[k] = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                          shape).tocsr()
    return totals


def assemble(form:Form, degree:int=None) -> Tensor:
    """ Integrate <form>: a float for functionals, a dof vector for linear forms and a CSR matrix
        (rows: test dofs, columns: trial dofs) for bilinear forms. <degree> overrides the estimated
        quadrature degree of every integral. """
    return assemble_many([form], degree)[0]
