""" Unit tests for recording, replay and the derivative sweeps of the tape. """

import numpy as np
import pytest

from shape_tape import fem
from shape_tape.fem import BoundaryFunctionSpace, FEFunction, FunctionSpace, coordinate_space
from shape_tape.forms import Constant, DirichletBC, SpatialCoordinate, TestFunction, TrialFunction, dx, grad, inner
from shape_tape.mesh import DegenerateMeshError, extract_boundary
from shape_tape.tape import AdjFloat, CheckpointError, Control, ControlError, ReducedFunctional, Tape, TapeError, \
    TaylorTable, assemble, assign, get_working_tape, is_recording, move_mesh, no_recording, resume_recording, \
    set_working_tape, solve_linear, stop_recording, taylor_test, transfer_from_boundary, weighted_sum

from . import square_mesh, unit_triangle


def bump_field(mesh, scale=(0.2, -0.1)) -> np.ndarray:
    """ Coordinate-layout field vanishing on the boundary of the unit square. """
    x, y = mesh.vertices.T
    bump = 16.0 * x * (1.0 - x) * y * (1.0 - y)
    return np.concatenate([scale[0] * bump, scale[1] * bump])


def record_poisson(mesh):
    """ Move <mesh> by a zero control, solve -div grad u = 1 + x0 with u = 0 on the boundary and return (J, theta). """
    theta = FEFunction(coordinate_space(mesh), name="theta")
    move_mesh(mesh, theta)
    V = FunctionSpace(mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    x = SpatialCoordinate(mesh)
    solution = FEFunction(V, name="u")
    bcs = [DirichletBC(V, 0.0, (1, 2, 3, 4))]
    solve_linear(inner(grad(u), grad(v)) * dx, (1.0 + x[0]) * v * dx, bcs, solution)
    return assemble(solution * solution * dx), theta


def test_working_tape(tape) -> None:
    assert get_working_tape() is tape
    assert is_recording()
    with no_recording():
        assert not is_recording()
    assert is_recording()
    other = Tape()
    assert set_working_tape(other) is tape
    assert set_working_tape(tape) is other
    stop_recording()
    assert not is_recording()
    resume_recording()
    assert is_recording()


def test_area_derivatives(tape) -> None:
    mesh = square_mesh(4)
    theta = FEFunction(coordinate_space(mesh), name="theta")
    move_mesh(mesh, theta)
    J = assemble(Constant(1.0) * dx(domain=mesh))
    assert isinstance(J, AdjFloat)
    assert len(tape) == 2
    rf = ReducedFunctional(J, [theta])
    dilation = mesh.coordinates
    translation = np.concatenate([np.ones(mesh.num_vertices), np.zeros(mesh.num_vertices)])
    # Moving every point x to (1 + t) x scales the area by (1 + t)^2.
    assert rf.tlm_action([dilation]) == pytest.approx(2.0)
    gradient, = rf.adjoint_gradient()
    assert np.vdot(gradient, dilation) == pytest.approx(2.0)
    assert np.vdot(gradient, translation) == pytest.approx(0.0, abs=1e-13)
    hessian, = rf.hessian_action([dilation])
    assert np.vdot(hessian, dilation) == pytest.approx(2.0)


def test_poisson_derivatives_agree(tape) -> None:
    mesh = square_mesh(4)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    d1 = bump_field(mesh)
    d2 = bump_field(mesh, (-0.05, 0.15)) * np.tile(mesh.vertices[:, 0], 2)
    gradient, = rf.adjoint_gradient()
    assert np.vdot(gradient, d1) == pytest.approx(rf.tlm_action([d1]), rel=1e-9)
    h1, = rf.hessian_action([d1])
    h2, = rf.hessian_action([d2])
    assert np.vdot(h1, d2) == pytest.approx(np.vdot(h2, d1), rel=1e-8)


def test_poisson_taylor_rates(tape) -> None:
    mesh = square_mesh(4)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    gradient, = rf.adjoint_gradient()
    # Steepest ascent direction.
    direction = 0.1 * gradient / np.abs(gradient).max()
    table = taylor_test(rf, [direction], h0=1e-2, halvings=3)
    assert table.columns == ["R0", "R1", "R2"]
    assert not [f for f in table.failures() if f[1] != "R2"]
    assert all(r2 < r1 for r1, r2 in zip(table.residuals["R1"], table.residuals["R2"]))
    # The controls are back at their original values.
    assert rf.evaluate() == pytest.approx(float(J))
    assert np.all(mesh.coordinates == square_mesh(4).coordinates)


def test_replay_matches_fresh_solve(tape) -> None:
    mesh = square_mesh(4)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    step = 0.5 * bump_field(mesh)
    replayed = rf.evaluate([step])
    fresh_mesh = square_mesh(4)
    fresh_mesh.displace(step)
    V = FunctionSpace(fresh_mesh, 1)
    u, v = TrialFunction(V), TestFunction(V)
    x = SpatialCoordinate(fresh_mesh)
    solution = FEFunction(V)
    bcs = [DirichletBC(V, 0.0, (1, 2, 3, 4))]
    fem.solve_linear(inner(grad(u), grad(v)) * dx, (1.0 + x[0]) * v * dx, bcs, solution)
    expected = fem.assemble(solution * solution * dx)
    assert replayed == pytest.approx(expected, rel=1e-12)
    assert rf.control_values()[0] == pytest.approx(step)


def test_tlm_is_linear_in_direction(tape) -> None:
    mesh = square_mesh(4)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    d1 = bump_field(mesh)
    d2 = bump_field(mesh, (-0.05, 0.15)) * np.tile(mesh.vertices[:, 0], 2)
    combined = rf.tlm_action([3.0 * d1 - 2.0 * d2])
    assert combined == pytest.approx(3.0 * rf.tlm_action([d1]) - 2.0 * rf.tlm_action([d2]), rel=1e-10)
    h, = rf.hessian_action([3.0 * d1 - 2.0 * d2])
    h1, = rf.hessian_action([d1])
    h2, = rf.hessian_action([d2])
    assert np.allclose(h, 3.0 * h1 - 2.0 * h2, rtol=1e-9, atol=1e-14)


def test_tlm_checks_checkpoints(tape) -> None:
    mesh = square_mesh(2)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    tape.blocks[-1].dependencies[0].checkpoint = None
    with pytest.raises(CheckpointError):
        rf.tlm_action([bump_field(mesh)])


def test_taylor_uses_given_derivatives(tape) -> None:
    mesh = square_mesh(4)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    direction = [bump_field(mesh)]
    # With a zero slope the first-order residual is the plain difference.
    table = taylor_test(rf, direction, h0=1e-2, second_order=False, gradient=[np.zeros_like(direction[0])])
    assert table.residuals["R1"] == table.residuals["R0"]


def test_scalar_arithmetic(tape) -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    f = FEFunction(V, 1.0, name="f")
    J = assemble(f * dx)
    total = J * J + 3.0 * J - J / 2.0 + J ** 2
    rf = ReducedFunctional(total, [f])
    gradient, = rf.adjoint_gradient()
    area_weights = fem.assemble(TestFunction(V) * dx)
    assert float(total) == pytest.approx(4.5)
    assert gradient == pytest.approx((4.0 * float(J) + 2.5) * area_weights)
    combined = weighted_sum([J, 2.0, J], [1.0, 3.0, -0.5])
    assert float(combined) == pytest.approx(6.5)
    with pytest.raises(ValueError):
        weighted_sum([J], [1.0, 2.0])


def test_assign_is_linear(tape) -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    f = FEFunction(V, 1.0, name="f")
    g = FEFunction(V, 2.0, name="g")
    target = FEFunction(V, name="target")
    assign(target, (2.0, f), g)
    assert np.allclose(target.dofs, 4.0)
    rf = ReducedFunctional(assemble(target * dx), [f, g])
    df, dg = rf.adjoint_gradient()
    weights = fem.assemble(TestFunction(V) * dx)
    assert df == pytest.approx(2.0 * weights)
    assert dg == pytest.approx(weights)


def test_assign_saves_new_version(tape) -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    f = FEFunction(V, 1.0, name="f")
    target = FEFunction(V, name="target")
    assign(target, (3.0, f))
    first = target.block_variable
    assert np.allclose(first.saved_value(), 3.0)
    # The previous version of target is an input of the second assignment.
    assign(target, (2.0, target), f)
    assert np.allclose(target.dofs, 7.0)
    assert np.allclose(target.block_variable.saved_value(), 7.0)
    assert np.allclose(first.saved_value(), 3.0)
    rf = ReducedFunctional(assemble(target * dx), [f])
    assert rf.evaluate([np.full(V.dim, 2.0)]) == pytest.approx(14.0)
    assert np.allclose(target.dofs, 14.0)


def test_boundary_transfer(tape) -> None:
    mesh = square_mesh(3)
    boundary = extract_boundary(mesh, [1])
    h = FEFunction(BoundaryFunctionSpace(boundary), np.arange(2.0 * boundary.num_vertices), name="h")
    s = transfer_from_boundary(h)
    nv = mesh.num_vertices
    assert s.space is coordinate_space(mesh)
    assert s.dofs[boundary.vertex_map].tolist() == list(range(boundary.num_vertices))
    assert np.count_nonzero(s.dofs[:nv]) == boundary.num_vertices - 1
    assert np.array_equal(s.block_variable.saved_value(), s.dofs)
    with pytest.raises(TapeError):
        transfer_from_boundary(s)


def test_control_must_be_root(tape) -> None:
    mesh = square_mesh(2)
    theta = FEFunction(coordinate_space(mesh))
    move_mesh(mesh, theta)
    with pytest.raises(ControlError):
        Control(mesh)
    J = assemble(Constant(1.0) * dx(domain=mesh))
    with pytest.raises(ControlError):
        ReducedFunctional(J, [])
    rf = ReducedFunctional(J, [theta])
    with pytest.raises(ControlError):
        rf.evaluate([np.zeros(3)])


def test_unknown_in_linear_forms(tape) -> None:
    V = FunctionSpace(unit_triangle(), 1)
    u = FEFunction(V, 1.0)
    trial, v = TrialFunction(V), TestFunction(V)
    with pytest.raises(TapeError):
        solve_linear(trial * v * dx, u * v * dx, [], u)


def test_degenerate_move_is_not_recorded(tape) -> None:
    mesh = unit_triangle()
    start = mesh.coordinates
    # Pull vertex 1 onto vertex 0. Dofs are all x components, then all y components.
    theta = FEFunction(coordinate_space(mesh), [0.0, -1.0, 0.0, 0.0, 0.0, 0.0])
    with pytest.raises(DegenerateMeshError):
        move_mesh(mesh, theta)
    assert len(tape) == 0
    assert np.all(mesh.coordinates == start)


def test_unrecorded_functional(tape, messages) -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    f = FEFunction(V, 1.0)
    with no_recording():
        J = assemble(f * dx)
    rf = ReducedFunctional(J, [f])
    assert any("recording was stopped" in m for m in messages)
    gradient, = rf.adjoint_gradient()
    assert not gradient.any()
    assert rf.evaluate() == pytest.approx(1.0)
    assert rf.min_mesh_quality() == np.inf


def test_unreachable_control(tape, messages) -> None:
    mesh = square_mesh(2)
    V = FunctionSpace(mesh, 1)
    f = FEFunction(V, 1.0)
    g = FEFunction(V, 1.0)
    rf = ReducedFunctional(assemble(f * dx), [g])
    assert any("cannot reach" in m for m in messages)
    assert not rf.adjoint_gradient()[0].any()
    with pytest.raises(ValueError):
        taylor_test(rf, [np.zeros(V.dim)])


def test_mesh_quality_over_versions(tape) -> None:
    mesh = square_mesh(2)
    J, theta = record_poisson(mesh)
    rf = ReducedFunctional(J, [theta])
    assert rf.min_mesh_quality() == pytest.approx(mesh.quality().min())


def test_taylor_table() -> None:
    table = TaylorTable([1.0, 0.5, 0.25], {"R0": [1.0, 0.5, 0.25], "R1": [1.0, 0.25, 1e-16]})
    assert table.rates["R0"] == [None, 1.0, 1.0]
    assert table.rates["R1"][1] == 2.0
    assert np.isnan(table.rates["R1"][2])
    assert table.underflows() == [(2, "R1")]
    assert table.failures() == []
    assert table.to_dict()["rate1"] == [None, 2.0, None]
    assert table.format_table().split()[:5] == ["h", "R0", "rate", "R1", "rate"]
    slow = TaylorTable([1.0, 0.5], {"R0": [1.0, 0.8], "R1": [1.0, 0.25]})
    assert [(k, name) for k, name, _ in slow.failures()] == [(1, "R0")]
    assert slow.failures(scale=10.0) == []
