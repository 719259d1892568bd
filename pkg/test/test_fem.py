""" Unit tests for quadrature, spaces, assembly, Dirichlet conditions and the solvers. """

from types import SimpleNamespace

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import norm as sparse_norm

from shape_tape.fem import BoundaryConditionError, ConvergenceError, FEFunction, Factorization, FunctionSpace, \
    QuadratureDegreeError, SingularMatrixError, TaylorHoodSpace, VectorFunctionSpace, apply_dirichlet, assemble, \
    assemble_many, dirichlet_dofs, evaluate_at_points, interpolate, solve_linear, solve_newton
from shape_tape.forms import Constant, DirichletBC, FacetNormal, SpatialCoordinate, TestFunction, TrialFunction, \
    ds, dx, grad, inner

from . import square_mesh, two_cell_square, unit_triangle


def test_reference_matrices() -> None:
    V = FunctionSpace(unit_triangle(), 1)
    u, v = TrialFunction(V), TestFunction(V)
    mass = assemble(u * v * dx).toarray()
    stiffness = assemble(inner(grad(u), grad(v)) * dx).toarray()
    assert np.allclose(mass, np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0, atol=1e-15)
    assert np.allclose(stiffness, [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]], atol=1e-15)


def test_integrals_on_square() -> None:
    mesh = two_cell_square()
    x = SpatialCoordinate(mesh)
    assert assemble(Constant(1.0) * dx(domain=mesh)) == pytest.approx(1.0)
    assert assemble(x[0] * dx) == pytest.approx(0.5)
    assert assemble(x[0] * x[1] * dx) == pytest.approx(0.25)
    # Only the bottom edge is marked.
    assert assemble(Constant(1.0) * ds(domain=mesh)) == pytest.approx(1.0)


def test_facet_integrals() -> None:
    mesh = square_mesh(3)
    x = SpatialCoordinate(mesh)
    n = FacetNormal(mesh)
    assert assemble(Constant(1.0) * ds(domain=mesh)) == pytest.approx(4.0)
    assert assemble(x[0] * ds(2)) == pytest.approx(1.0)
    assert assemble(x[0] * ds((1, 3))) == pytest.approx(1.0)
    # Divergence theorem: the flux of x through the boundary is 2 |Omega|.
    assert assemble(inner(x, n) * ds) == pytest.approx(2.0)


def test_quadratic_space_is_exact() -> None:
    mesh = square_mesh(2)
    x = SpatialCoordinate(mesh)
    V = FunctionSpace(mesh, 2)
    assert V.dim == mesh.num_vertices + mesh.num_edges
    f = interpolate(x[0] * x[0], V)
    assert assemble(f * dx) == pytest.approx(1.0 / 3.0)
    points = np.array([[0.3, 0.7], [0.0, 1.0]])
    assert np.allclose(evaluate_at_points(x[0] * x[1], points), [0.21, 0.0])


def test_quadrature_degree_limits() -> None:
    mesh = unit_triangle()
    with pytest.raises(QuadratureDegreeError):
        assemble(Constant(1.0) * dx(domain=mesh), degree=9)
    with pytest.raises(QuadratureDegreeError):
        assemble(Constant(1.0) * dx(domain=mesh), degree=-1)
    assert assemble(Constant(1.0) * dx(domain=mesh), degree=8) == pytest.approx(0.5)


def test_function_dofs_are_read_only() -> None:
    V = VectorFunctionSpace(unit_triangle(), 1)
    f = FEFunction(V, np.arange(6.0))
    with pytest.raises(ValueError):
        f.dofs[0] = 1.0
    with pytest.raises(ValueError):
        FEFunction(V, np.zeros(5))
    assert f.vertex_values().tolist() == [[0.0, 3.0], [1.0, 4.0], [2.0, 5.0]]


def test_taylor_hood_layout() -> None:
    mesh = square_mesh(2)
    W = TaylorHoodSpace(mesh)
    nv, ne = mesh.num_vertices, mesh.num_edges
    assert W.dim == 2 * (nv + ne) + nv
    w = FEFunction(W, np.arange(W.dim, dtype=float))
    velocity, pressure = w.sub(0), w.sub(1)
    assert velocity.space.dim == 2 * (nv + ne)
    assert pressure.dofs.tolist() == list(range(2 * (nv + ne), W.dim))
    with pytest.raises(ValueError):
        W.sub(2)


def test_laplace_reproduces_linear_solution() -> None:
    mesh = square_mesh(4)
    x = SpatialCoordinate(mesh)
    V = FunctionSpace(mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    zero = FEFunction(V, 0.0)
    solution = FEFunction(V, name="u")
    bc = DirichletBC(V, x[0] + x[1], (1, 2, 3, 4))
    solve_linear(inner(grad(u), grad(v)) * dx, zero * v * dx, [bc], solution)
    expected = mesh.vertices.sum(axis=1)
    assert np.abs(solution.dofs - expected).max() < 1e-12
    assert dirichlet_dofs([bc]).tolist() == mesh.marked_vertices().tolist()


def test_missing_boundary_tag() -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    with pytest.raises(BoundaryConditionError):
        solve_linear(u * v * dx, FEFunction(V, 1.0) * v * dx, [DirichletBC(V, 0.0, 7)], FEFunction(V))


def test_newton_converges() -> None:
    V = FunctionSpace(square_mesh(2), 1)
    u = FEFunction(V, 1.0)
    v = TestFunction(V)
    iterations = solve_newton((u * u - 4.0) * v * dx, u, tol=1e-12)
    assert 0 < iterations <= 8
    assert np.allclose(u.dofs, 2.0)


def test_newton_reports_history() -> None:
    V = FunctionSpace(square_mesh(2), 1)
    u = FEFunction(V, 1.0)
    v = TestFunction(V)
    with pytest.raises(ConvergenceError) as info:
        solve_newton((u * u - 4.0) * v * dx, u, max_iter=1)
    history = info.value.history
    assert len(history) == 2
    assert history[1] < history[0]


def test_singular_matrix() -> None:
    with pytest.raises(SingularMatrixError):
        Factorization(sparse.csr_matrix((2, 2)))
    with pytest.raises(SingularMatrixError):
        Factorization(sparse.csr_matrix(np.ones((2, 3))))
    lu = Factorization(sparse.csr_matrix([[2.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(lu.solve([3.0, 1.0]), [1.0, 1.0])
    assert np.allclose(lu.solve([2.0, 2.0], transpose=True), [1.0, 1.0])


def test_solve_residual_is_relative_to_rhs(monkeypatch) -> None:
    lu = Factorization(sparse.identity(2, format="csc"))
    rhs = np.array([1.0, 1.0])
    # A residual of 1e-9 |b| is too large; 1e-12 |b| is fine.
    monkeypatch.setattr(lu, "_lu", SimpleNamespace(solve=lambda b, trans: b + 1e-9))
    with pytest.raises(SingularMatrixError):
        lu.solve(rhs)
    monkeypatch.setattr(lu, "_lu", SimpleNamespace(solve=lambda b, trans: b + 1e-12))
    assert np.allclose(lu.solve(rhs), rhs)


def test_apply_dirichlet_modes() -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    matrix = assemble(u * v * dx)
    rhs = np.ones(V.dim)
    bc = DirichletBC(V, 3.0, 1)
    dofs = dirichlet_dofs([bc])
    constrained, forward = apply_dirichlet(matrix, rhs, [bc])
    dense = constrained.toarray()
    assert np.array_equal(dense[dofs], np.eye(V.dim)[dofs])
    assert np.allclose(forward[dofs], 3.0)
    free = np.setdiff1d(np.arange(V.dim), dofs)
    assert np.allclose(forward[free], 1.0)
    assert np.allclose(rhs, 1.0)
    _, homogenized = apply_dirichlet(None, rhs, [bc], mode="homogenized")
    assert np.allclose(homogenized[dofs], 0.0)
    with pytest.raises(BoundaryConditionError):
        apply_dirichlet(matrix, rhs, [bc], mode="lifted")


def test_assembled_symmetric_forms_are_symmetric() -> None:
    mesh = square_mesh(5)
    rng = np.random.default_rng(3)
    interior = np.setdiff1d(np.arange(mesh.num_vertices), mesh.marked_vertices([1, 2, 3, 4]))
    shift = np.zeros(2 * mesh.num_vertices)
    shift[interior] = 0.03 * rng.standard_normal(len(interior))
    shift[interior + mesh.num_vertices] = 0.03 * rng.standard_normal(len(interior))
    mesh.displace(shift)
    x = SpatialCoordinate(mesh)
    V = FunctionSpace(mesh, 2)
    u, v = TrialFunction(V), TestFunction(V)
    k = 1.0 + x[0] * x[1]
    for form in [u * v * dx, k * inner(grad(u), grad(v)) * dx + k * u * v * dx]:
        matrix = assemble(form)
        assert sparse_norm(matrix - matrix.T) <= 1e-14 * sparse_norm(matrix)


def test_assemble_many_matches_single_forms() -> None:
    mesh = square_mesh(3)
    x = SpatialCoordinate(mesh)
    V = FunctionSpace(mesh, 1)
    f = interpolate(x[0] + x[1], V)
    u, v = TrialFunction(V), TestFunction(V)
    forms = [inner(grad(u), grad(v)) * dx, f * f * v * dx, f * grad(f)[0] * dx, f * v * ds(2)]
    together = assemble_many(forms)
    for form, value in zip(forms, together):
        alone = assemble(form)
        if sparse.issparse(alone):
            assert np.abs((alone - value).toarray()).max() < 1e-15
        else:
            assert np.allclose(value, alone, rtol=0.0, atol=1e-15)
