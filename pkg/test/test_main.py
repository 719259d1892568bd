""" Command-line tests: every entry mode through the master console script, on tiny runs. """

import json

import pytest

from shape_tape.__main__ import main
from shape_tape.fem import ConvergenceError
from shape_tape.mesh import save_mesh
from shape_tape.util.exception import ErrorSummary, HandlerChain, TracebackLogger

from . import square_mesh

TINY_TUBE = ["--case", "tube", "--T", "0.03", "--dt", "0.01", "--mesh-size", "0.15"]


def run(*args:str) -> int:
    return main(["shape-tape", *args])


def load(path) -> dict:
    with open(path, encoding="utf-8") as fp:
        return json.load(fp)


@pytest.mark.parametrize("mode", ["", "bogus", "-x"])
def test_bad_operation(mode, capsys) -> None:
    assert run(mode) == 2
    assert "Currently available operations:" in capsys.readouterr().out


def test_help_exits() -> None:
    with pytest.raises(SystemExit) as info:
        run("run", "--help")
    assert info.value.code == 0


def test_run_value(tmp_path) -> None:
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert run("run", *TINY_TUBE, "--no-timings", "--out", str(first)) == 0
    assert run("run", *TINY_TUBE, "--no-timings", "--out", str(second)) == 0
    # Reports without timings are reproducible byte for byte.
    assert first.read_text() == second.read_text()
    d = load(first)
    assert d["schema"] == 1
    assert d["case"] == "tube"
    assert d["variant"] == "frozen"
    assert d["mode"] == "value"
    assert d["results"]["J"] > 0.0
    assert d["failures"] == []
    assert "timings" not in d


def test_run_gradient_to_stdout(capsys) -> None:
    code = run("run", *TINY_TUBE, "--variant", "decomposed", "--mode", "gradient")
    d = json.loads(capsys.readouterr().out)
    assert code == (1 if d["failures"] else 0)
    assert all("adjoint sweep" in message for message in d["failures"])
    assert len(d["results"]["gradient_norms"]) == 4
    assert "forward_s" in d["timings"]
    assert "adjoint_setup_s" in d["timings"]
    assert "adjoint/forward" in d["timings"]["ratios"]


def test_run_log_file(tmp_path) -> None:
    log_path = tmp_path / "run.log"
    assert run("run", *TINY_TUBE, "--log", str(log_path), "--out", str(tmp_path / "out.json")) == 0
    text = log_path.read_text()
    assert "Running tube case in value mode..." in text
    assert "Report saved to" in text


@pytest.mark.parametrize("args", [["--mode", "hessian"],
                                  ["--case", "cylinder"],
                                  ["--pipeline", "direct"],
                                  ["--dt", "0"],
                                  ["--T", "0.01", "--dt", "0.02"],
                                  ["--alpha", "-1"],
                                  ["--mesh-size", "abc"],
                                  ["--unknown"],
                                  ["stray"]])
def test_run_usage_errors(args, capsys) -> None:
    assert run("run", *args) == 2
    assert "usage:" in capsys.readouterr().err


def test_taylor_first_order(tmp_path) -> None:
    out = tmp_path / "taylor.json"
    assert run("taylor", *TINY_TUBE, "--first-order", "--out", str(out)) == 0
    d = load(out)
    assert d["mode"] == "taylor"
    assert len(d["results"]["taylor_table"]["h"]) == 4


def test_taylor_failure_exit_code(tmp_path) -> None:
    out = tmp_path / "taylor.json"
    # No measured rate is ever this close to its expected value.
    code = run("taylor", *TINY_TUBE, "--first-order", "--tolerance-scale", "1e-9", "--out", str(out))
    assert code == 1
    assert load(out)["failures"]


@pytest.mark.parametrize("args", [["--halvings", "0"], ["--h0", "-1"], ["--tolerance-scale", "0"]])
def test_taylor_usage_errors(args) -> None:
    assert run("taylor", *TINY_TUBE, *args) == 2


@pytest.mark.parametrize("args", [["--case", "tube"], ["--max-iters", "-1"], ["--quality-floor", "1.5"]])
def test_optimize_usage_errors(args) -> None:
    assert run("optimize", *args) == 2


def test_mesh_info(tmp_path) -> None:
    path = str(tmp_path / "square.msh")
    out = tmp_path / "info.json"
    save_mesh(square_mesh(4), path)
    assert run("mesh-info", path, "--out", str(out)) == 0
    d = load(out)
    assert d["path"] == path
    assert d["vertices"] == 25
    assert d["cells"] == 32
    assert d["tags"] == {"1": 4, "2": 4, "3": 4, "4": 4}
    assert d["area"] == pytest.approx(1.0)
    assert 0.0 < d["quality"][0] <= d["quality"][1] <= 1.0


def test_mesh_info_errors(tmp_path) -> None:
    assert run("mesh-info") == 2
    assert run("mesh-info", "a.msh", "b.msh") == 2
    assert run("mesh-info", str(tmp_path / "missing.msh")) == 1
    bad = tmp_path / "bad.msh"
    bad.write_text("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
    assert run("mesh-info", str(bad)) == 1


def test_error_summary() -> None:
    lines = []
    chain = HandlerChain([ErrorSummary(lines.append, [ConvergenceError]), TracebackLogger(lines.append)])
    error = ConvergenceError("Newton did not converge.", [1.0, 0.5])
    assert chain(type(error), error, None)
    assert lines == ['ConvergenceError: Newton did not converge. (residual 1.000e+00 -> 5.000e-01 over 1 iterations)']
    assert not chain(KeyError, KeyError("x"), None)
    assert lines[1].startswith("Unexpected error during the run:")
