""" Unit tests for Riesz maps, the Lame field, elasticity extension and the descent optimizer. """

import numpy as np
import pytest

from shape_tape.deform import CONVERGED, MAX_ITER, NO_ADMISSIBLE_STEP, OBSTACLE_VALUE, OUTER_VALUE, \
    DescentSettings, DescentTrace, RieszMap, elasticity_extend, optimize_descent, riesz_maps, riesz_representation, \
    solve_lame_field
from shape_tape.fem import BoundaryFunctionSpace, FEFunction, FunctionSpace, SingularMatrixError, \
    VectorFunctionSpace, coordinate_space, interpolate
from shape_tape.forms import DirichletBC, SpatialCoordinate, TestFunction, TrialFunction, dx, grad, inner
from shape_tape.mesh import extract_boundary
from shape_tape.fem import assemble as assemble_values
from shape_tape.tape import BoundaryDataError, ReducedFunctional, assemble, move_mesh, solve_linear

from . import square_mesh


def test_l2_map_inverts_mass_matrix() -> None:
    V = FunctionSpace(square_mesh(3), 1)
    riesz = RieszMap(V, "l2")
    x = np.linspace(-1.0, 2.0, V.dim)
    r = riesz.representation(riesz.matrix @ x)
    assert np.allclose(r.dofs, x, atol=1e-12)
    assert riesz.norm(x) ** 2 == pytest.approx(riesz.inner(x, x))
    with pytest.raises(ValueError):
        riesz.representation(np.zeros(V.dim + 1))


def test_fixed_dofs_stay_zero() -> None:
    mesh = square_mesh(3)
    V = VectorFunctionSpace(mesh, 1)
    for kind in ("h1", "elasticity"):
        riesz = RieszMap(V, kind, fixed_tags=(1, 4))
        bottom_left = mesh.marked_vertices((1, 4))
        r = riesz.representation(np.ones(V.dim)).dofs
        assert not r[bottom_left].any()
        assert not r[bottom_left + mesh.num_vertices].any()
        assert np.abs(r).max() > 0.0
        assert abs(riesz.matrix - riesz.matrix.T).max() < 1e-12


def test_map_options() -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    boundary_space = BoundaryFunctionSpace(extract_boundary(mesh))
    with pytest.raises(ValueError):
        RieszMap(V, "h2")
    with pytest.raises(ValueError):
        RieszMap(boundary_space, "boundary-l2")
    with pytest.raises(ValueError):
        RieszMap(boundary_space, "h1")
    with pytest.raises(ValueError):
        RieszMap(V, "boundary-l2", design_tags=(1,))
    maps = riesz_maps([V, V, coordinate_space(mesh)], "l2")
    assert maps[0] is maps[1]
    assert maps[2] is not maps[0]


def test_boundary_map_fixes_vertices_off_the_design() -> None:
    mesh = square_mesh(2)
    boundary = extract_boundary(mesh)
    space = BoundaryFunctionSpace(boundary)
    riesz = RieszMap(space, "boundary-l2", design_tags=(3,))
    top = set(mesh.marked_vertices((3,)).tolist())
    off = [i for i, v in enumerate(boundary.boundary_vertices) if v not in top]
    assert sorted(riesz.fixed.tolist()) == off + [i + boundary.num_vertices for i in off]
    r = riesz.representation(np.ones(space.dim)).dofs
    assert not r[riesz.fixed].any()
    assert riesz.inner(r, np.ones(space.dim)) > 0.0


def test_lame_field_is_harmonic() -> None:
    mesh = square_mesh(4)
    lame = solve_lame_field(mesh, (1,), (3,))
    y = mesh.vertices[:, 1]
    # With the sides free the solution is linear in y.
    assert np.allclose(lame.mu.dofs, OUTER_VALUE + (OBSTACLE_VALUE - OUTER_VALUE) * y, atol=1e-9)
    assert lame.lmbda == 0.0
    with pytest.raises(ValueError):
        solve_lame_field(mesh, (), (3,))


def test_elasticity_extension(tape) -> None:
    mesh = square_mesh(4)
    S = coordinate_space(mesh)
    still = elasticity_extend(mesh, FEFunction(S), (1,), (3,))
    assert not still.dofs.any()
    nv = mesh.num_vertices
    upward = FEFunction(S, np.concatenate([np.zeros(nv), np.ones(nv)]))
    s = elasticity_extend(mesh, upward, (1,), (3,), lame=solve_lame_field(mesh, (1,), (3,)))
    bottom = mesh.marked_vertices((1,))
    top = mesh.marked_vertices((3,))
    assert not s.dofs[bottom + nv].any()
    assert np.all(s.dofs[top + nv] > 0.0)
    with pytest.raises(SingularMatrixError):
        elasticity_extend(mesh, upward, (), (3,))


def record_fit(mesh):
    """ J(f) = int (f - g)^2 dx, recorded with f as the control. """
    V = FunctionSpace(mesh, 1)
    x = SpatialCoordinate(mesh)
    f = FEFunction(V, name="f")
    g = interpolate(x[0] * x[1] + 0.5, V)
    J = assemble(inner(f - g, f - g) * dx)
    return ReducedFunctional(J, [f]), g


def test_descent_converges(tape) -> None:
    rf, g = record_fit(square_mesh(3))
    riesz = RieszMap(g.space, "l2")
    seen = []
    trace = optimize_descent(rf, riesz, callback=lambda i, _: seen.append(i))
    assert trace.status == CONVERGED
    values = trace.values()
    assert all(b < a for a, b in zip(values, values[1:]))
    assert trace.final_value < 1e-20
    assert seen == list(range(len(trace.rows)))
    assert np.allclose(rf.control_values()[0], g.dofs)
    assert trace.to_dict()["status"] == CONVERGED


def test_descent_iteration_limit(tape) -> None:
    rf, g = record_fit(square_mesh(3))
    trace = optimize_descent(rf, RieszMap(g.space, "l2"), DescentSettings(max_iter=0))
    assert trace.status == MAX_ITER
    assert len(trace.rows) == 1
    with pytest.raises(ValueError):
        optimize_descent(rf, [RieszMap(g.space, "l2")] * 2)


def test_descent_quality_guard(tape, messages) -> None:
    rf, g = record_fit(square_mesh(3))
    start = rf.control_values()[0]
    settings = DescentSettings(quality_floor=2.0, min_step=1e-3)
    trace = optimize_descent(rf, RieszMap(g.space, "l2"), settings)
    assert trace.status == NO_ADMISSIBLE_STEP
    assert any("below" in m for m in messages)
    assert np.all(rf.control_values()[0] == start)


def test_trace_csv(tape, tmp_path) -> None:
    rf, g = record_fit(square_mesh(2))
    trace = optimize_descent(rf, RieszMap(g.space, "l2"), DescentSettings(max_iter=2))
    filename = str(tmp_path / "trace.csv")
    trace.save_csv(filename)
    with open(filename) as fp:
        lines = fp.read().splitlines()
    assert lines[0] == "iter,J,grad_norm,step,min_quality"
    assert len(lines) == len(trace.rows) + 1


def test_riesz_representation_of_gradient() -> None:
    V = FunctionSpace(square_mesh(2), 1)
    riesz = RieszMap(V, "l2")
    gradient = riesz.matrix @ np.full(V.dim, 2.0)
    assert np.allclose(riesz_representation(riesz, gradient).dofs, 2.0, atol=1e-12)


def test_h1_representation_is_smoother_than_l2() -> None:
    mesh = square_mesh(6)
    V = FunctionSpace(mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    stiffness = assemble_values(inner(grad(u), grad(v)) * dx)
    gradient = np.random.default_rng(5).standard_normal(V.dim)
    tags = (1, 2, 3, 4)
    rough = RieszMap(V, "l2", fixed_tags=tags).representation(gradient).dofs
    smooth = RieszMap(V, "h1", fixed_tags=tags).representation(gradient).dofs
    assert smooth @ stiffness @ smooth <= rough @ stiffness @ rough


def record_clamped_extension(mesh, data_tag:int):
    """ Push the top of <mesh> through an elasticity extension clamped at the bottom, then solve a Poisson
        problem whose Dirichlet data x[0] sits on <data_tag>. Returns the functional and the traction. """
    S = coordinate_space(mesh)
    traction = FEFunction(S, name="traction")
    move_mesh(mesh, elasticity_extend(mesh, traction, (1,), (3,)))
    V = FunctionSpace(mesh, 1)
    x = SpatialCoordinate(mesh)
    u, v = TrialFunction(V), TestFunction(V)
    solution = FEFunction(V, name="u")
    solve_linear(inner(grad(u), grad(v)) * dx, v * dx, [DirichletBC(V, x[0], data_tag)], solution)
    return assemble(solution * solution * dx), traction


def test_coordinate_data_on_a_clamped_side(tape) -> None:
    mesh = square_mesh(4)
    J, traction = record_clamped_extension(mesh, 1)
    rf = ReducedFunctional(J, [traction])
    nv = mesh.num_vertices
    upward = np.concatenate([np.zeros(nv), np.ones(nv)])
    gradient, = rf.adjoint_gradient()
    assert np.vdot(gradient, upward) == pytest.approx(rf.tlm_action([upward]), rel=1e-9)


def test_coordinate_data_on_a_moving_side(tape) -> None:
    mesh = square_mesh(4)
    J, traction = record_clamped_extension(mesh, 3)
    rf = ReducedFunctional(J, [traction])
    nv = mesh.num_vertices
    with pytest.raises(BoundaryDataError):
        rf.tlm_action([np.concatenate([np.zeros(nv), np.ones(nv)])])


def test_trace_extend() -> None:
    first, second = DescentTrace(), DescentTrace()
    first.add(0, 3.0, 1.0, 0.0, 0.5)
    first.add(1, 2.0, 0.5, 0.1, 0.5)
    first.status = MAX_ITER
    second.add(0, 2.5, 0.7, 0.0, 0.5)
    second.add(1, 1.0, 0.2, 0.1, 0.4)
    second.status = CONVERGED
    first.extend(second)
    assert [row.iteration for row in first.rows] == [0, 1, 2]
    assert first.values() == [3.0, 2.0, 1.0]
    assert first.status == CONVERGED
