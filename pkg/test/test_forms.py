""" Unit tests for the form language and its symbolic transforms. """

import numpy as np
import pytest

from shape_tape.fem import FEFunction, FunctionSpace, VectorFunctionSpace, assemble, interpolate
from shape_tape.forms import ArityError, Constant, FormError, ShapeMismatchError, SpatialCoordinate, \
    TestFunction, TrialFunction, UnsupportedMeasureError, action, adjoint_form, ds, dx, estimate_quadrature_degree, \
    gateaux_derivative, grad, inner, replace, shape_derivative, sin, system

from . import square_mesh, unit_triangle


@pytest.fixture
def mesh():
    return square_mesh(4)


@pytest.fixture
def space(mesh):
    return FunctionSpace(mesh, 1)


def test_shape_checks() -> None:
    V = VectorFunctionSpace(unit_triangle(), 1)
    v = TestFunction(V)
    with pytest.raises(ShapeMismatchError):
        inner(v, 1.0)
    with pytest.raises(ShapeMismatchError):
        v * dx


def test_form_arithmetic(space) -> None:
    u, v = TrialFunction(space), TestFunction(space)
    a = u * v * dx
    L = v * dx
    assert a.arity == 2
    assert L.arity == 1
    assert (a + a).arity == 2
    with pytest.raises(ArityError):
        a + L
    with pytest.raises(FormError):
        v * dx * v
    # Cell measures take no subdomain.
    with pytest.raises(UnsupportedMeasureError):
        dx(1)


def test_functional_needs_a_mesh(mesh) -> None:
    with pytest.raises(FormError):
        Constant(1.0) * dx
    assert assemble(Constant(1.0) * dx(domain=mesh)) == pytest.approx(1.0)


def test_adjoint_is_transpose(space) -> None:
    w = interpolate(1.0 + SpatialCoordinate(space.mesh)[0], space)
    u, v = TrialFunction(space), TestFunction(space)
    a = inner(w * grad(u), grad(v)) * dx + 2.0 * u * grad(v)[0] * dx
    matrix = assemble(a).toarray()
    adjoint = assemble(adjoint_form(a)).toarray()
    assert np.abs(matrix.T - adjoint).max() < 1e-14
    # Non-symmetric because of the advection term.
    assert np.abs(matrix - matrix.T).max() > 1e-3
    with pytest.raises(ArityError):
        adjoint_form(v * dx)


def test_gateaux_derivative(space) -> None:
    x = SpatialCoordinate(space.mesh)
    u = interpolate(x[0] + 2.0 * x[1], space)
    w = interpolate(x[0] * x[1], space)
    v = TestFunction(space)
    F = u * u * v * dx
    derivative = assemble(gateaux_derivative(F, u, w))
    expected = assemble(2.0 * u * w * v * dx)
    assert np.allclose(derivative, expected, atol=1e-14)
    # The default direction is a trial function: the Jacobian applied to w is the same vector.
    jacobian = assemble(gateaux_derivative(F, u))
    assert np.allclose(jacobian @ w.dofs, expected, atol=1e-13)
    with pytest.raises(FormError):
        gateaux_derivative(F, x)


def test_action_and_replace(space) -> None:
    u, v = TrialFunction(space), TestFunction(space)
    f = interpolate(SpatialCoordinate(space.mesh)[1], space)
    a = u * v * dx
    assert np.allclose(assemble(action(a, f)), assemble(a) @ f.dofs)
    g = FEFunction(space, 3.0)
    swapped = replace(f * v * dx, {f: g})
    assert np.allclose(assemble(swapped), 3.0 * assemble(v * dx))
    with pytest.raises(ArityError):
        action(f * f * dx, f)


def test_system_splits_affine_residual(space) -> None:
    x = SpatialCoordinate(space.mesh)
    u = FEFunction(space, name="u")
    v = TestFunction(space)
    F = inner(grad(u), grad(v)) * dx + u * v * dx - (x[0] + x[1]) * v * dx
    a, L = system(F, u)
    assert a.arity == 2
    assert L.arity == 1
    trial, test = TrialFunction(space), TestFunction(space)
    expected = assemble(inner(grad(trial), grad(test)) * dx + trial * test * dx).toarray()
    assert np.abs(assemble(a).toarray() - expected).max() < 1e-13
    assert np.allclose(assemble(L), assemble((x[0] + x[1]) * test * dx))
    with pytest.raises(FormError):
        system(u * u * v * dx, u)


def test_shape_derivative_of_area(mesh) -> None:
    x = SpatialCoordinate(mesh)
    area = Constant(1.0) * dx(domain=mesh)
    # Translation leaves the area unchanged; the dilation x -> (1 + t) x scales it by (1 + t)^2.
    assert assemble(shape_derivative(area, Constant([1.0, 0.0]))) == pytest.approx(0.0, abs=1e-14)
    assert assemble(shape_derivative(area, x)) == pytest.approx(2.0)


def test_shape_derivative_translation_invariance(space) -> None:
    x = SpatialCoordinate(space.mesh)
    u = interpolate(x[0] * x[1] + x[0], space)
    J = inner(grad(u), grad(u)) * dx
    assert assemble(shape_derivative(J, Constant([0.3, -0.7]))) == pytest.approx(0.0, abs=1e-13)


def test_shape_derivative_matches_finite_difference(mesh, space) -> None:
    x = SpatialCoordinate(mesh)
    u = interpolate(x[0] * x[1] + x[0] * x[0], space)
    V = interpolate([x[0] * (1.0 - x[0]) * x[1], x[1] * (1.0 - x[1])], VectorFunctionSpace(mesh, 1))
    J = inner(grad(u), grad(u)) * dx + u * u * dx
    exact = assemble(shape_derivative(J, V))
    start = mesh.coordinates
    t = 1e-6
    mesh.set_coordinates(start + t * V.dofs)
    plus = assemble(J)
    mesh.set_coordinates(start - t * V.dofs)
    minus = assemble(J)
    mesh.set_coordinates(start)
    assert exact == pytest.approx((plus - minus) / (2 * t), rel=1e-6)


def test_shape_derivative_rejects_facet_integrals(space) -> None:
    u = FEFunction(space, 1.0)
    with pytest.raises(UnsupportedMeasureError):
        shape_derivative(u * ds, Constant([1.0, 0.0]))
    with pytest.raises(ShapeMismatchError):
        shape_derivative(u * dx, Constant(1.0))


def test_quadrature_degree_estimates(mesh) -> None:
    x = SpatialCoordinate(mesh)
    V1, V2 = FunctionSpace(mesh, 1), FunctionSpace(mesh, 2)
    u, v = TrialFunction(V1), TestFunction(V1)
    assert estimate_quadrature_degree(u * v) == 2
    assert estimate_quadrature_degree(inner(grad(u), grad(v))) == 0
    assert estimate_quadrature_degree(TrialFunction(V2) * TestFunction(V2)) == 4
    assert estimate_quadrature_degree(sin(np.pi * x[0])) == 2
    assert estimate_quadrature_degree(x[0] ** 12) == 8
    assert estimate_quadrature_degree(u * v * dx + inner(grad(u), grad(v)) * dx) == 2


def test_gateaux_derivative_is_linear_in_direction(space) -> None:
    x = SpatialCoordinate(space.mesh)
    u = interpolate(x[0] + 2.0 * x[1], space)
    w1 = interpolate(x[0] * x[1], space)
    w2 = interpolate(1.0 - x[0], space)
    v = TestFunction(space)
    F = u * u * v * dx + inner(grad(u), grad(u)) * v * dx
    combined = assemble(gateaux_derivative(F, u, 2.0 * w1 - 0.5 * w2))
    separate = 2.0 * assemble(gateaux_derivative(F, u, w1)) - 0.5 * assemble(gateaux_derivative(F, u, w2))
    assert np.allclose(combined, separate, rtol=1e-12, atol=1e-14)


def test_gateaux_and_shape_derivatives_commute(mesh, space) -> None:
    x = SpatialCoordinate(mesh)
    u = interpolate(x[0] * x[1] + x[0] * x[0], space)
    w = interpolate(1.0 + x[1], space)
    V = interpolate([x[0] * (1.0 - x[0]) * x[1], x[1] * (1.0 - x[1])], VectorFunctionSpace(mesh, 1))
    J = inner(grad(u), grad(u)) * dx + u * u * u * dx
    first = assemble(shape_derivative(gateaux_derivative(J, u, w), V))
    second = assemble(gateaux_derivative(shape_derivative(J, V), u, w))
    assert first == pytest.approx(second, rel=1e-12)
