""" Minimal dissipated energy of Stokes flow past an obstacle in a unit square channel.

    J = int grad u : grad u dx + alpha (Vol - Vol0)^2 + beta |Bc - Bc0|^2
    where Vol = 1 - int 1 dx is the obstacle area and Bc = (0.5 - int x dx) / Vol its barycenter.

    Two pipelines produce the mesh displacement. riesz-descent controls a volumetric displacement s
    directly and turns gradients into directions with an h1, elasticity or l2 Riesz map. through-deformation
    controls a traction h on the boundary; s is its elasticity extension and the tape differentiates
    through that solve, so an l2 map on the obstacle boundary is enough.

    The penalty weights are recorded as tape scalars. The optimizer runs in stages; after each stage whose
    obstacle area or barycenter has drifted past the limit, both weights grow and the descent goes on with
    the stiffer functional. """

import os
from copy import copy
from types import SimpleNamespace
from typing import List, NamedTuple

import numpy as np

from shape_tape.deform import CONVERGED, DescentSettings, RieszMap, elasticity_extend, optimize_descent, \
    solve_lame_field
from shape_tape.fem import BoundaryFunctionSpace, FEFunction, TaylorHoodSpace, coordinate_space
from shape_tape.fem import assemble as assemble_values
from shape_tape.forms import Constant, DirichletBC, SpatialCoordinate, TestFunction, TrialFunction, Zero, as_vector, \
    div, dx, grad, inner, sin, split
from shape_tape.mesh import CHANNEL_INFLOW, CHANNEL_OBSTACLE, CHANNEL_OUTFLOW, CHANNEL_WALLS, Mesh, channel_mesh, \
    extract_boundary, write_vtk
from shape_tape.tape import AdjFloat, Control, assemble, move_mesh, no_recording, solve_linear, transfer_from_boundary
from shape_tape.util.log import log

from .base import RecordedCase, smooth_field
from .report import CaseReport

PIPELINES = ("riesz-descent", "through-deformation")
PIRONNEAU_MODES = ("value", "gradient", "taylor", "hessian-taylor", "consistency", "finite-difference", "symmetry",
                   "optimize")
OUTER_TAGS = (CHANNEL_INFLOW, CHANNEL_OUTFLOW, CHANNEL_WALLS)
DESIGN_TAGS = (CHANNEL_OBSTACLE,)
MIN_REDUCTION = 0.1  # Smallest relative decrease of J an optimization run must reach.


class PironneauConfig(SimpleNamespace):
    """ Settings of the obstacle case. """

    alpha: float = 1e4                   # Weight of the volume penalty.
    beta: float = 1e4                    # Weight of the barycenter penalty.
    pipeline: str = "through-deformation"
    riesz: str = "h1"                    # Riesz map of the riesz-descent pipeline.
    mesh_size: float = 0.033             # Target element size of the generated mesh.
    obstacle_center: tuple = (0.5, 0.5)
    obstacle_radius: float = 0.13
    max_iter: int = 100                  # Optimizer iteration limit.
    penalty_stages: int = 3              # Optimizer stages sharing max_iter; the weights may grow between them.
    penalty_growth: float = 10.0         # Factor applied to both weights after a stage that drifted too far.
    drift_limit: float = 0.01            # Largest accepted relative drift of the obstacle area and barycenter.
    quality_floor: float = 0.1           # Smallest scaled Jacobian an accepted step may leave.
    seed: int = 0                        # Seed for random directions.
    out_dir: str = ""                    # Directory for per-iteration VTK snapshots and the trace. Empty for none.


class Geometry(NamedTuple):
    """ Obstacle area and barycenter, as plain or recorded scalars. """

    volume: float
    barycenter: tuple


def obstacle_geometry(mesh:Mesh, integrate=assemble) -> Geometry:
    """ Area and barycenter of the hole in the unit square, from integrals over the fluid domain. """
    X = SpatialCoordinate(mesh)
    volume = 1.0 - integrate(Constant(1.0) * dx(domain=mesh))
    barycenter = tuple((0.5 - integrate(X[i] * dx)) / volume for i in range(2))
    return Geometry(volume=volume, barycenter=barycenter)


def stokes_forms(space:TaylorHoodSpace):
    (u, p) = split(TrialFunction(space))
    (v, q) = split(TestFunction(space))
    a = inner(grad(u), grad(v)) * dx - div(u) * q * dx - div(v) * p * dx
    L = inner(Zero((2,)), v) * dx(domain=space.mesh)
    return a, L


def stokes_bcs(space:TaylorHoodSpace) -> List[DirichletBC]:
    """ Parabolic-like inflow (sin(pi y), 0), no slip on the walls and the obstacle, free outflow. """
    X = SpatialCoordinate(space.mesh)
    velocity = space.sub(0)
    return [DirichletBC(velocity, as_vector([sin(np.pi * X[1]), 0.0]), CHANNEL_INFLOW),
            DirichletBC(velocity, Zero((2,)), CHANNEL_WALLS),
            DirichletBC(velocity, Zero((2,)), CHANNEL_OBSTACLE)]


class PironneauCase(RecordedCase):
    """ One recorded evaluation of the obstacle functional at zero displacement. """

    case_id = "pironneau"
    default_h0 = 1e-4

    def __init__(self, config:PironneauConfig=None, mesh:Mesh=None) -> None:
        config = config or PironneauConfig()
        if config.pipeline not in PIPELINES:
            raise ValueError(f'Unknown pipeline {config.pipeline!r}; expected one of {PIPELINES}.')
        if config.alpha <= 0.0 or config.beta <= 0.0:
            raise ValueError('Penalty weights must be positive.')
        if config.penalty_stages < 1 or config.penalty_growth < 1.0:
            raise ValueError('Need at least one optimizer stage and a penalty growth of at least 1.')
        if mesh is None:
            mesh = channel_mesh(config.mesh_size, config.obstacle_center, config.obstacle_radius)
        self.mesh = mesh
        self.reference = mesh.vertices.copy()
        super().__init__(config)
        self.riesz = self._riesz_map()
        self._direction_scale = self._unit_displacement_scale()

    def record(self):
        cfg = self.config
        mesh = self.mesh
        S = coordinate_space(mesh)
        initial = obstacle_geometry(mesh, integrate=assemble_values)
        self.initial_volume = initial.volume
        self.initial_barycenter = initial.barycenter
        self.lame = None
        if cfg.pipeline == "riesz-descent":
            self.control = FEFunction(S, name="s")
            self.displacement = self.control
        else:
            self.lame = solve_lame_field(mesh, OUTER_TAGS, DESIGN_TAGS)
            self.boundary = extract_boundary(mesh)
            self.control = FEFunction(BoundaryFunctionSpace(self.boundary), name="h")
            traction = transfer_from_boundary(self.control, S)
            self.displacement = elasticity_extend(mesh, traction, OUTER_TAGS, DESIGN_TAGS, self.lame)
        move_mesh(mesh, self.displacement)
        space = TaylorHoodSpace(mesh)
        self.state = FEFunction(space, name="state")
        a, L = stokes_forms(space)
        solve_linear(a, L, stokes_bcs(space), self.state)
        u, _ = split(self.state)
        energy = assemble(inner(grad(u), grad(u)) * dx)
        self.geometry = obstacle_geometry(mesh)
        volume_drift = self.geometry.volume - self.initial_volume
        barycenter_drift = [b - b0 for b, b0 in zip(self.geometry.barycenter, self.initial_barycenter)]
        self.weights = (AdjFloat(cfg.alpha), AdjFloat(cfg.beta))
        alpha, beta = self.weights
        penalty = alpha * volume_drift ** 2 + beta * (barycenter_drift[0] ** 2 + barycenter_drift[1] ** 2)
        return energy + penalty

    def controls(self) -> list:
        return [self.control]

    def _riesz_map(self) -> RieszMap:
        cfg = self.config
        if cfg.pipeline == "through-deformation":
            return RieszMap(self.control.space, "boundary-l2", design_tags=DESIGN_TAGS)
        lame = None
        if cfg.riesz == "elasticity":
            lame = solve_lame_field(self.mesh, OUTER_TAGS, DESIGN_TAGS)
        return RieszMap(self.control.space, cfg.riesz, fixed_tags=OUTER_TAGS, lame=lame)

    def _unit_displacement_scale(self) -> float:
        """ Factor that makes a unit control direction move the mesh by at most about one unit.
            For tractions this is the size of the extension of a unit traction on the obstacle. """
        if self.config.pipeline == "riesz-descent":
            return 1.0
        unit = FEFunction(self.control.space, np.ones(self.control.space.dim))
        with no_recording():
            s = elasticity_extend(self.mesh, transfer_from_boundary(unit), OUTER_TAGS, DESIGN_TAGS, self.lame)
        largest = float(np.abs(s.dofs).max())
        return 1.0 / largest if largest > 0.0 else 1.0

    def random_directions(self, seed:int) -> List[np.ndarray]:
        rng = np.random.default_rng(seed)
        if self.config.pipeline == "riesz-descent":
            points = self.reference
            free = np.ones(self.mesh.num_vertices, dtype=bool)
            free[self.mesh.marked_vertices(OUTER_TAGS)] = False
        else:
            points = self.reference[self.boundary.vertex_map]
            on_obstacle = set(self.mesh.marked_vertices(DESIGN_TAGS).tolist())
            free = np.array([v in on_obstacle for v in self.boundary.vertex_map.tolist()])
        components = [smooth_field(points, rng) * free for _ in range(2)]
        return [self._direction_scale * np.concatenate(components)]

    def replayed_geometry(self) -> dict:
        """ Obstacle area and barycenter at the last evaluation, with their drift from the reference. """
        volume = float(self.geometry.volume.block_variable.saved_value())
        barycenter = [float(b.block_variable.saved_value()) for b in self.geometry.barycenter]
        return {"volume": volume,
                "barycenter": barycenter,
                "volume_drift": abs(volume - self.initial_volume) / abs(self.initial_volume),
                "barycenter_drift": max(abs(b - b0) / abs(b0) for b, b0 in zip(barycenter, self.initial_barycenter))}

    def new_report(self, mode:str) -> CaseReport:
        return CaseReport(self.case_id, self.config, pipeline=self.config.pipeline, mode=mode)

    def run_gradient(self, report:CaseReport) -> List[np.ndarray]:
        gradient = super().run_gradient(report)
        report.results["riesz_norm"] = self.riesz.norm(self.riesz.representation(gradient[0]).dofs)
        return gradient

    def _snapshot(self, report:CaseReport, iteration:int) -> None:
        path = os.path.join(self.config.out_dir, f'pironneau_{iteration:04d}.vtk')
        write_vtk(self.mesh, {"state": self.state}, path)
        report.add_artifact(path)

    def set_weights(self, alpha:float, beta:float) -> None:
        """ Change the recorded penalty weights. The next evaluation uses them. """
        for weight, value in zip(self.weights, (alpha, beta)):
            Control(weight).update(value)

    def _stage_budgets(self, max_iter:int) -> List[int]:
        stages = self.config.penalty_stages
        return [max_iter // stages + (1 if k < max_iter % stages else 0) for k in range(stages)]

    def run_optimize(self, report:CaseReport, settings:DescentSettings=None) -> None:
        """ Descend from the current controls in stages and report the decrease and the geometric drift.
            The run fails if J drops by less than MIN_REDUCTION or either drift exceeds the limit.
            An inverted cell also fails it. """
        cfg = self.config
        if settings is None:
            settings = DescentSettings(max_iter=cfg.max_iter, quality_floor=cfg.quality_floor)
        if cfg.out_dir:
            os.makedirs(cfg.out_dir, exist_ok=True)
        weights = [cfg.alpha, cfg.beta]
        trace = None
        stages = []
        budgets = [b for b in self._stage_budgets(settings.max_iter) if b] or [0]
        with report.timings.measure("optimize"):
            for k, budget in enumerate(budgets):
                stage_settings = copy(settings)
                stage_settings.max_iter = budget
                offset = len(trace.rows) - 1 if trace is not None else 0
                callback = None
                if cfg.out_dir:

                    def callback(iteration:int, rf, offset=offset) -> None:
                        if iteration or not offset:
                            self._snapshot(report, iteration + offset)
                stage = optimize_descent(self.rf, self.riesz, stage_settings, callback)
                if trace is None:
                    trace = stage
                else:
                    trace.extend(stage)
                self.rf.evaluate()
                geometry = self.replayed_geometry()
                drift = max(geometry["volume_drift"], geometry["barycenter_drift"])
                stages.append({"alpha": weights[0], "beta": weights[1], "iterations": len(stage.rows) - 1,
                               "status": stage.status, "J": stage.final_value, "drift": drift})
                log.info("Optimizer stage %d: J = %.10g, drift = %.3e", k, stage.final_value, drift)
                if k == len(budgets) - 1:
                    break
                if drift > cfg.drift_limit:
                    weights = [w * cfg.penalty_growth for w in weights]
                    self.set_weights(*weights)
                elif stage.status == CONVERGED:
                    break
        J_final = self.rf.evaluate()
        initial = trace.initial_value
        geometry = self.replayed_geometry()
        min_cell_area = float(self.mesh.cell_areas().min())
        reduction = (initial - J_final) / initial
        report.results.update(J_initial=initial,
                              J_final=J_final,
                              reduction=reduction,
                              iterations=len(trace.rows) - 1,
                              status=trace.status,
                              min_quality=self.rf.min_mesh_quality(),
                              min_cell_area=min_cell_area,
                              geometry=geometry,
                              penalty_stages=stages,
                              trace=trace.to_dict())
        if reduction < MIN_REDUCTION:
            report.fail(f'J decreased by {reduction:.2%}; at least {MIN_REDUCTION:.0%} is required.')
        for name in ("volume_drift", "barycenter_drift"):
            if geometry[name] > cfg.drift_limit:
                report.fail(f'The obstacle {name.replace("_", " ")} is {geometry[name]:.2%}, '
                            f'above the limit of {cfg.drift_limit:.2%}.')
        if min_cell_area <= 0.0:
            report.fail(f'The optimized mesh has an inverted cell (smallest area {min_cell_area:.3e}).')
        if cfg.out_dir:
            path = os.path.join(cfg.out_dir, "trace.csv")
            trace.save_csv(path)
            report.add_artifact(path)


def run_pironneau_case(config:PironneauConfig=None, mode="value", **options) -> CaseReport:
    """ Record the obstacle case and run one of PIRONNEAU_MODES on it. """
    if mode not in PIRONNEAU_MODES:
        raise ValueError(f'Unknown Pironneau mode {mode!r}; expected one of {PIRONNEAU_MODES}.')
    return PironneauCase(config).run(mode, **options)
