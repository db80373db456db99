import json
import pathlib

import pytest
from click.testing import CliRunner

from gentree.cli import RunConfig, main, run

SPECS = pathlib.Path(__file__).resolve().parents[1] / "specs"


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_grow_writes_tree_and_svg(runner, tmp_path):
    res = invoke(runner, "grow", SPECS / "spiral_tree.json", "--out", tmp_path, "--depth", 4)
    assert res.exit_code == 0
    summary = json.loads(res.stdout)
    assert summary["branches"] == 31 and summary["max_position_gap"] == 0.0
    tree = json.loads((tmp_path / "tree.json").read_text())
    assert tree["kind"] == "tree" and len(tree["branches"]) == 31
    assert (tmp_path / "tree.svg").read_text().startswith("<?xml")


def test_compile_certificate(runner, tmp_path):
    res = invoke(runner, "compile", SPECS / "binary_ifs.json", "--out", tmp_path, "--depth", 6)
    assert res.exit_code == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["isomorphic"] is True and cert["depth"] == 6 and cert["max_gap"] < 1e-9


def test_verify_binary_ifs_depth8(runner, tmp_path):
    res = invoke(runner, "verify", SPECS / "binary_ifs.json", "--out", tmp_path)
    assert res.exit_code == 0
    out = json.loads((tmp_path / "verify.json").read_text())
    assert out["passed"] and out["max_gap"] < 1e-9
    assert (tmp_path / "canopy.csv").read_text().startswith("k,hausdorff,fitted_ratio\n")


def test_verify_fails_on_strict_tolerance(runner, tmp_path):
    res = invoke(runner, "verify", SPECS / "binary_ifs.json", "--out", tmp_path, "--depth", 5,
                 "--tolerance", 1e-30)
    assert res.exit_code == 1
    assert json.loads(res.stdout)["checks"]["isomorphism"] is False


def test_analyze_csv(runner, tmp_path):
    res = invoke(runner, "analyze", SPECS / "spiral_tree.json", "--out", tmp_path)
    assert res.exit_code == 0
    lines = (tmp_path / "recovery.csv").read_text().splitlines()
    assert lines[0] == "g,lambda_hat_mean,theta_hat_abs_mean,max_dev" and len(lines) == 8


def test_render_from_tree_json(runner, tmp_path):
    invoke(runner, "grow", SPECS / "spiral_tree.json", "--out", tmp_path / "a", "--depth", 3)
    res = invoke(runner, "render", tmp_path / "a" / "tree.json", "--out", tmp_path / "b",
                 "--overlay-scaffold", "--markers")
    assert res.exit_code == 0
    assert (tmp_path / "b" / "tree.svg").read_text().count("<path") == 15 + 15 + 7


def test_outputs_are_byte_deterministic(runner, tmp_path):
    for d in ("a", "b"):
        invoke(runner, "grow", SPECS / "spiral_tree.json", "--out", tmp_path / d, "--depth", 5, "--markers")
        invoke(runner, "analyze", SPECS / "spiral_tree.json", "--out", tmp_path / d)
    for name in ("tree.svg", "tree.json", "recovery.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_input_is_io_error(runner, tmp_path):
    res = invoke(runner, "verify", tmp_path / "nope.json")
    assert res.exit_code == 2
    assert json.loads(res.stderr)["kind"] == "io"


def test_parse_error_exit(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"v": 1, "kind": "ifs", "maps": [}')
    res = invoke(runner, "compile", bad)
    assert res.exit_code == 3
    err = json.loads(res.stderr)
    assert err["kind"] == "parse" and err["line"] == 1


def test_unreachable_target_is_module_error(runner, tmp_path):
    res = invoke(runner, "compile", SPECS / "lsystem.json", "--depth", 6, "--out", tmp_path)
    assert res.exit_code == 3
    assert json.loads(res.stderr)["kind"] == "no_solution"


def test_chord_policy_compiles_lsystem(runner, tmp_path):
    res = invoke(runner, "compile", SPECS / "lsystem.json", "--depth", 6, "--policy", "chord",
                 "--out", tmp_path)
    assert res.exit_code == 0
    assert json.loads((tmp_path / "certificate.json").read_text())["max_gap"] < 1e-9


def test_wrong_kind_for_command(runner, tmp_path):
    res = invoke(runner, "grow", SPECS / "binary_ifs.json", "--out", tmp_path)
    assert res.exit_code == 3


def test_run_function(tmp_path, capsys):
    cfg = RunConfig("compile", SPECS / "binary_ifs.json", tmp_path, depth=3, policy="arc", turn=0.4)
    assert run(cfg) == 0
    assert json.loads(capsys.readouterr().out)["certificate"]["isomorphic"] is True
    with pytest.raises(ValueError):
        RunConfig("explode", SPECS / "spiral_tree.json")
    with pytest.raises(ValueError):
        RunConfig("grow", SPECS / "spiral_tree.json", step=0.0)
