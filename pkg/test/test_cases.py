""" Tests of the two recorded cases on coarse meshes and short runs. """

import os

import numpy as np
import pytest

from shape_tape.cases import PIPELINES, SCHEMA, TUBE_VARIANTS, CaseReport, MeshTanglingError, PironneauCase, \
    PironneauConfig, Timings, TubeCase, TubeConfig, pair, run_pironneau_case, run_tube_case, smooth_field
from shape_tape.mesh import DegenerateMeshError


def tiny_tube(**settings) -> TubeConfig:
    return TubeConfig(**{"T": 0.03, "dt": 0.01, "mesh_size": 0.15, **settings})


def coarse_channel(**settings) -> PironneauConfig:
    return PironneauConfig(**{"mesh_size": 0.1, **settings})


@pytest.fixture(scope="module", params=TUBE_VARIANTS)
def tube(request):
    return TubeCase(tiny_tube(variant=request.param))


@pytest.fixture(scope="module", params=PIPELINES)
def channel(request):
    return PironneauCase(coarse_channel(pipeline=request.param))


def test_smooth_field() -> None:
    points = np.random.default_rng(1).random((20, 2))
    first = smooth_field(points, np.random.default_rng(7))
    second = smooth_field(points, np.random.default_rng(7))
    assert np.all(first == second)
    assert np.abs(first).max() == pytest.approx(1.0)
    assert pair([np.ones(3)], [np.arange(3.0)]) == 3.0


def test_tube_setup(tube) -> None:
    assert tube.config.steps == 3
    assert len(tube.controls()) == 4
    assert tube.value > 0.0
    directions = tube.test_directions()
    assert len(directions) == 4
    # The bump vanishes on the outer circle.
    assert np.abs(directions[0][tube.mesh.marked_vertices([1])]).max() < 1e-12


def test_tube_variants_agree() -> None:
    frozen = TubeCase(tiny_tube(variant="frozen"))
    decomposed = TubeCase(tiny_tube(variant="decomposed"))
    assert decomposed.value == pytest.approx(frozen.value, rel=1e-10)


def test_tube_variant_gradients_differ_on_the_hole() -> None:
    settings = {"T": 0.15, "dt": 0.05, "omega": 1.0}
    frozen = TubeCase(tiny_tube(variant="frozen", **settings))
    decomposed = TubeCase(tiny_tube(variant="decomposed", **settings))
    hole = frozen.hole_dofs()
    a = frozen.rf.adjoint_gradient()[0][hole]
    b = decomposed.rf.adjoint_gradient()[0][hole]
    angle = np.degrees(np.arccos(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0)))
    assert angle > 5.0


def test_tube_adjoint_ratio_check(monkeypatch) -> None:
    case = TubeCase(tiny_tube())
    report = case.run("gradient")
    ratio = report.timings.ratio("adjoint")
    assert report.timings.to_dict()["ratios"]["adjoint/forward"] == ratio
    assert "adjoint_setup" in report.timings.seconds
    assert report.passed == (ratio <= 2.0)
    monkeypatch.setattr(case, "adjoint_ratio_limit", 0.0)
    assert not case.run("gradient").passed
    monkeypatch.setattr(case, "adjoint_ratio_limit", None)
    assert case.run("gradient").passed


def test_tube_consistency(tube) -> None:
    report = tube.run("consistency", count=2)
    assert report.passed, report.failures
    assert len(report.results["consistency"]) == 2


def test_tube_finite_difference(tube) -> None:
    report = tube.run("finite-difference", count=1)
    assert report.passed, report.failures


def test_tube_symmetry(tube) -> None:
    report = tube.run("symmetry", count=1)
    assert report.passed, report.failures


def test_tube_taylor(tube) -> None:
    report = tube.run("taylor")
    assert report.passed, report.failures
    table = report.results["taylor_table"]
    assert "R2" not in table
    assert len(table["h"]) == 4


def test_tube_checks_settings() -> None:
    with pytest.raises(ValueError):
        TubeCase(tiny_tube(dt=0.05))
    with pytest.raises(ValueError):
        TubeCase(tiny_tube(variant="moving"))
    with pytest.raises(ValueError):
        run_tube_case(tiny_tube(), "optimize")


def test_tube_snapshots(tmp_path) -> None:
    out_dir = str(tmp_path / "tube")
    report = run_tube_case(tiny_tube(out_dir=out_dir), "value")
    assert len(report.artifacts) == 3
    assert all(os.path.exists(path) for path in report.artifacts)
    assert report.artifacts[0].endswith("tube_0001.vtk")


def test_channel_geometry(channel) -> None:
    r = channel.config.obstacle_radius
    assert channel.initial_volume == pytest.approx(np.pi * r * r, rel=0.15)
    assert channel.initial_barycenter == pytest.approx((0.5, 0.5), abs=1e-2)
    geometry = channel.replayed_geometry()
    assert geometry["volume_drift"] < 1e-12
    assert geometry["barycenter_drift"] < 1e-12


def test_channel_consistency(channel) -> None:
    report = channel.run("consistency", count=2)
    assert report.passed, report.failures


def test_channel_gradient(channel) -> None:
    report = channel.run("gradient")
    assert report.results["riesz_norm"] > 0.0
    assert report.results["gradient_norms"][0] > 0.0
    assert report.results["J"] == pytest.approx(channel.value)


def test_channel_taylor(channel) -> None:
    assert channel.default_h0 == 1e-4
    report = channel.run("taylor", second_order=False)
    assert report.passed, report.failures
    assert report.results["taylor_table"]["h"][0] == 1e-4


def test_channel_symmetry() -> None:
    report = run_pironneau_case(coarse_channel(pipeline="riesz-descent"), "symmetry", count=1)
    assert report.passed, report.failures


def test_channel_optimize() -> None:
    config = coarse_channel(pipeline="riesz-descent", max_iter=2, penalty_stages=1)
    report = run_pironneau_case(config, "optimize")
    results = report.results
    assert results["J_final"] <= results["J_initial"]
    assert results["iterations"] <= 2
    assert results["min_quality"] > 0.0
    assert len(results["trace"]["rows"]) == results["iterations"] + 1
    assert len(results["penalty_stages"]) == 1
    assert (results["reduction"] < 0.1) == any("decreased by" in message for message in report.failures)


def test_channel_penalty_continuation() -> None:
    case = PironneauCase(coarse_channel(pipeline="riesz-descent", max_iter=2, penalty_stages=2, drift_limit=0.0))
    report = case.run("optimize")
    stages = report.results["penalty_stages"]
    assert [stage["iterations"] for stage in stages] == [1, 1]
    assert stages[1]["alpha"] == pytest.approx(10.0 * stages[0]["alpha"])
    assert case.weights[0].block_variable.saved_value() == pytest.approx(stages[1]["alpha"])
    rows = report.results["trace"]["rows"]
    assert [row["iteration"] for row in rows] == list(range(len(rows)))
    assert report.results["J_final"] == pytest.approx(case.rf.evaluate())
    assert any("drift" in message for message in report.failures)


def test_channel_optimize_keeps_geometry() -> None:
    report = run_pironneau_case(coarse_channel(), "optimize")
    results = report.results
    assert report.passed, report.failures
    assert results["reduction"] >= 0.1
    assert results["geometry"]["volume_drift"] <= 0.01
    assert results["geometry"]["barycenter_drift"] <= 0.01
    assert results["min_cell_area"] > 0.0


def test_channel_checks_settings() -> None:
    with pytest.raises(ValueError):
        PironneauCase(coarse_channel(pipeline="direct"))
    with pytest.raises(ValueError):
        PironneauCase(coarse_channel(alpha=0.0))
    with pytest.raises(ValueError):
        PironneauCase(coarse_channel(penalty_stages=0))
    with pytest.raises(ValueError):
        run_pironneau_case(coarse_channel(), "hessian")


def test_report_layout() -> None:
    report = CaseReport("tube", tiny_tube(), variant="frozen", mode="value")
    with report.timings.measure("forward"):
        pass
    assert "forward" in report.timings.seconds
    report.timings.seconds.update(forward=0.5, adjoint=1.0)
    report.results["J"] = 1.5
    d = report.to_dict()
    assert d["schema"] == SCHEMA
    assert d["variant"] == "frozen"
    assert d["config"]["k"] == 0.01
    assert d["config"]["T"] == 0.03
    assert d["timings"]["ratios"]["adjoint/forward"] == pytest.approx(2.0)
    assert "timings" not in report.to_dict(timings=False)
    assert report.passed
    report.fail("broken")
    assert report.to_dict()["failures"] == ["broken"]
    assert Timings().to_dict() == {"ratios": {}}


def test_tangling_message() -> None:
    error = MeshTanglingError(DegenerateMeshError("Cell 3 would have non-positive area.", 3), 0.5)
    assert error.cell == 3
    assert "dt = 0.5" in str(error)
