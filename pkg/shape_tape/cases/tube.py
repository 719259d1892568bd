""" Advection-diffusion in a disk whose off-center hole rotates about the origin.

    Each time step moves the mesh by a vector CG1 displacement, solves one Crank-Nicolson step for the
    concentration u (held at 1 on the hole), and adds dt * int grad u . grad u dx to the functional.
    The per-step displacements are the controls. In the frozen variant the rotation is computed off the
    tape and the displacements themselves are the controls. In the decomposed variant the rotation is
    solved on the tape and each displacement is the rotation plus a control that starts at zero. """

import os
from types import SimpleNamespace
from typing import List

import numpy as np

from shape_tape.fem import FEFunction, FunctionSpace, coordinate_space, interpolate
from shape_tape.forms import DirichletBC, Expr, Form, SpatialCoordinate, TestFunction, TrialFunction, as_vector, \
    dx, grad, inner, system
from shape_tape.mesh import TUBE_HOLE, DegenerateMeshError, Mesh, annulus_mesh, write_vtk
from shape_tape.tape import assemble, assign, move_mesh, no_recording, solve_linear, weighted_sum

from .base import RecordedCase, smooth_field
from .report import CaseReport, MeshTanglingError

TUBE_VARIANTS = ("frozen", "decomposed")
TUBE_MODES = ("value", "gradient", "taylor", "hessian-taylor", "consistency", "finite-difference", "symmetry")


class TubeConfig(SimpleNamespace):
    """ Settings of the rotating hole case. """

    k: float = 0.01                      # Diffusion coefficient.
    omega: float = 0.25                  # Rotations per unit time.
    T: float = 0.5                       # End time.
    dt: float = 1e-2                     # Time step.
    variant: str = "frozen"              # How the rotation enters the tape (see TUBE_VARIANTS).
    outer_radius: float = 1.0            # Radius of the disk around the origin.
    hole_radius: float = 0.2             # Radius of the rotating hole.
    hole_center: tuple = (0.5, 0.0)      # Initial center of the hole.
    mesh_size: float = 0.06              # Target element size of the generated mesh.
    seed: int = 0                        # Seed for random directions.
    out_dir: str = ""                    # Directory for VTK snapshots of every step. Empty for none.

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


def rotation(y:Expr, omega:float) -> Expr:
    """ Velocity of a rigid rotation about the origin at <omega> turns per unit time. """
    rate = 2.0 * np.pi * omega
    return as_vector([rate * y[1], -rate * y[0]])


def rotation_step_forms(space, dt:float, omega:float):
    """ Crank-Nicolson step of dX/dt = rot(X): the displacement s over one step solves a(s, z) = L(z). """
    s = TrialFunction(space)
    z = TestFunction(space)
    X = SpatialCoordinate(space.mesh)
    a = inner(s, z) * dx - 0.5 * dt * inner(rotation(s, omega), z) * dx
    L = dt * inner(rotation(X, omega), z) * dx
    return a, L


def state_residual(u:FEFunction, u_prev:FEFunction, velocity:Expr, k:float, dt:float) -> Form:
    """ Crank-Nicolson residual of du/dt - k lap u - div(u w) = 0 with mesh velocity w. """
    v = TestFunction(u.space)
    u_mid = 0.5 * (u + u_prev)
    return ((u - u_prev) / dt * v + k * inner(grad(u_mid), grad(v)) + inner(u_mid * velocity, grad(v))) * dx


class TubeCase(RecordedCase):
    """ One recorded run of the rotating hole case. A mesh may be given; it must mark the hole with tag 2. """

    case_id = "tube"
    default_h0 = 1e-4
    taylor_second_order = False
    adjoint_ratio_limit = 2.0

    def __init__(self, config:TubeConfig=None, mesh:Mesh=None) -> None:
        config = config or TubeConfig()
        if config.dt <= 0.0 or config.T < config.dt:
            raise ValueError(f'Need 0 < dt <= T, got dt = {config.dt}, T = {config.T}.')
        if config.variant not in TUBE_VARIANTS:
            raise ValueError(f'Unknown tube variant {config.variant!r}; expected one of {TUBE_VARIANTS}.')
        if mesh is None:
            mesh = annulus_mesh(config.outer_radius, config.hole_radius, config.hole_center, config.mesh_size)
        self.mesh = mesh
        self.artifacts = []
        super().__init__(config)

    def record(self):
        cfg = self.config
        mesh = self.mesh
        V = coordinate_space(mesh)
        W = FunctionSpace(mesh, 1)
        X = SpatialCoordinate(mesh)
        bump = 1.0 - X[0] ** 2 - X[1] ** 2
        self.reference = mesh.vertices.copy()
        self.bump_direction = interpolate(as_vector([bump, bump]), V).dofs.copy()
        self.thetas = [FEFunction(V, name=f'theta_{i}') for i in range(cfg.steps + 1)]
        self.u = FEFunction(W, name="u")
        self.u_prev = FEFunction(W, name="u_prev")
        self.bc = DirichletBC(W, 1.0, TUBE_HOLE)
        self.rotation_forms = rotation_step_forms(V, cfg.dt, cfg.omega)
        if cfg.out_dir:
            os.makedirs(cfg.out_dir, exist_ok=True)
        try:
            move_mesh(mesh, self.thetas[0])
            if cfg.variant == "frozen":
                values = self._record_frozen()
            else:
                values = self._record_decomposed()
        except DegenerateMeshError as e:
            raise MeshTanglingError(e, cfg.dt) from e
        return weighted_sum(values, [cfg.dt] * len(values))

    def _record_frozen(self) -> list:
        a, L = self.rotation_forms
        values = []
        for i in range(self.config.steps):
            with no_recording():
                solve_linear(a, L, [], self.thetas[i + 1])
            move_mesh(self.mesh, self.thetas[i + 1])
            velocity = (0.5 / self.config.dt) * (self.thetas[i + 1] + self.thetas[i])
            values.append(self._step(i, velocity))
        return values

    def _record_decomposed(self) -> list:
        a, L = self.rotation_forms
        V = self.thetas[0].space
        rotation_step = FEFunction(V, name="rotation")
        totals = [FEFunction(V, name=f'displacement_{i}') for i in range(self.config.steps + 1)]
        assign(totals[0], self.thetas[0])
        values = []
        for i in range(self.config.steps):
            solve_linear(a, L, [], rotation_step)
            assign(totals[i + 1], rotation_step, self.thetas[i + 1])
            move_mesh(self.mesh, totals[i + 1])
            velocity = (0.5 / self.config.dt) * (totals[i] + totals[i + 1])
            values.append(self._step(i, velocity))
        return values

    def _step(self, i:int, velocity:Expr):
        """ Advance u by one step on the moved mesh and return this step's contribution to J. """
        cfg = self.config
        a, L = system(state_residual(self.u, self.u_prev, velocity, cfg.k, cfg.dt), self.u)
        solve_linear(a, L, [self.bc], self.u)
        assign(self.u_prev, self.u)
        if cfg.out_dir:
            path = os.path.join(cfg.out_dir, f'tube_{i + 1:04d}.vtk')
            write_vtk(self.mesh, {"u": self.u, "theta": self.thetas[i + 1]}, path)
            self.artifacts.append(path)
        return assemble(inner(grad(self.u), grad(self.u)) * dx)

    def controls(self) -> list:
        return self.thetas

    def test_directions(self) -> List[np.ndarray]:
        """ The same bump (1 - x^2 - y^2) in both components at every step. """
        return [self.bump_direction.copy() for _ in self.thetas]

    def random_directions(self, seed:int) -> List[np.ndarray]:
        rng = np.random.default_rng(seed)
        return [np.concatenate([smooth_field(self.reference, rng), smooth_field(self.reference, rng)])
                for _ in self.thetas]

    def hole_dofs(self) -> np.ndarray:
        """ Displacement dofs (both components) of the vertices on the hole. """
        vertices = self.mesh.marked_vertices([TUBE_HOLE])
        return np.concatenate([vertices, vertices + self.mesh.num_vertices])

    def new_report(self, mode:str) -> CaseReport:
        report = CaseReport(self.case_id, self.config, variant=self.config.variant, mode=mode)
        for path in self.artifacts:
            report.add_artifact(path)
        return report


def run_tube_case(config:TubeConfig=None, mode="value", **options) -> CaseReport:
    """ Record the tube case and run one of TUBE_MODES on it. """
    if mode not in TUBE_MODES:
        raise ValueError(f'Unknown tube mode {mode!r}; expected one of {TUBE_MODES}.')
    return TubeCase(config).run(mode, **options)
