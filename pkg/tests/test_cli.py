import json
from pathlib import Path

import pytest

from sinkasym import cli
from sinkasym.cli import RunConfig, main
from sinkasym.errors import InputError
from sinkasym.validation import CheckResult

DATA = Path(__file__).resolve().parents[1] / "demos" / "data"
STAR = str(DATA / "star_node.json")


def _report(path):
    return (Path(path) / "report.txt").read_text()


def test_classify_star(tmp_path):
    assert main(["classify", "--input", STAR, "--out", str(tmp_path)]) == 0
    assert _report(tmp_path).splitlines()[0] == \
        "star node, kappa=1, closely-spaced (alpha=2)"
    data = json.loads((tmp_path / "classify.json").read_text())
    assert data


@pytest.mark.parametrize("command, files", [
    ("iterates", {"iterates.json"}),
    ("psi", {"psi.json", "psi_check.csv"}),
    ("relate", {"relate.json", "trajectory.csv", "phase.svg", "sign_map.svg"}),
])
def test_commands_write_artifacts(tmp_path, command, files):
    status = main([command, "--input", STAR, "--out", str(tmp_path),
                   "--x0", "0.05,0.05", "--m-max", "3", "--svg"])
    assert status == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert files | {"report.txt"} <= names
    assert _report(tmp_path).startswith("star node")


def test_mm_kappa2_report(tmp_path):
    assert main(["mm", "--eps", "1", "--eta", "0.888888889", "--out", str(tmp_path)]) == 0
    text = _report(tmp_path)
    assert "resonant: kappa = 2" in text
    assert "x^2 ln x" in text and "+ C*x^2" in text
    data = json.loads((tmp_path / "mm.json").read_text())
    assert data["spectrum"]["kappa"] == pytest.approx(2.0, abs=1e-8)
    assert data["pole_index"] == 2
    assert data["log_coefficient"] == pytest.approx(18.0, rel=1e-7)


def test_mm_rate_constants_from_file(tmp_path):
    f = tmp_path / "mm.json"
    f.write_text(json.dumps({"k1": 1, "km1": 1, "k2": 1, "e0": 2}))
    out = tmp_path / "out"
    assert main(["mm", "--input", str(f), "--out", str(out), "--svg"]) == 0
    assert "K_m = 2" in _report(out)
    assert (out / "mm_phase.svg").read_text().startswith("<svg")


def test_output_is_deterministic(tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["relate", "--input", STAR, "--out", str(out), "--svg"]) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert runs[0] == runs[1]


def test_validate_passes(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    assert all(line.startswith("PASS")
               for line in _report(tmp_path).splitlines()[2:] if line)


def test_validate_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_all", lambda seed: [
        CheckResult("ok", True, "fine"), CheckResult("broken", False, "off by 1")])
    assert main(["validate", "--out", str(tmp_path)]) == 3
    assert (tmp_path / "validation_failures.txt").read_text() == \
        "FAIL  broken: off by 1\n"


def test_unsupported_system_exit_code(tmp_path, capsys):
    f = tmp_path / "source.json"
    f.write_text(json.dumps({"A": [[1, 0], [0, -1]], "b": [[], []]}))
    assert main(["classify", "--input", str(f), "--out", str(tmp_path)]) == 2
    assert "not all negative" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["classify"],
    ["classify", "--input", "/nonexistent/system.json"],
    ["mm", "--eps", "1"],
    ["mm", "--eps", "1", "--eta", "1.5"],
    ["psi", "--input", STAR, "--x0", "0.1,0.1,0.1"],
])
def test_input_errors_exit_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_bad_json_reports_position(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text('{"A": [[-1, 0], [0, -1]],,}')
    assert main(["classify", "--input", str(f), "--out", str(tmp_path)]) == 1
    assert "line 1" in capsys.readouterr().err


def test_config_is_strict(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "classify", "input": STAR, "bogus": 1}))
    assert main(["classify", "--config", str(cfg)]) == 1
    cfg.write_text(json.dumps({"command": "psi", "input": STAR}))
    assert main(["classify", "--config", str(cfg)]) == 1
    cfg.write_text(json.dumps({"input": STAR, "out": str(tmp_path / "o")}))
    assert main(["classify", "--config", str(cfg)]) == 0


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": STAR, "m_max": 2, "out": str(tmp_path / "a")}))
    args = cli.build_parser().parse_args(["iterates", "--config", str(cfg), "--m-max", "3"])
    c = cli.config_from_args(args)
    assert c.m_max == 3 and c.out == str(tmp_path / "a")


def test_run_config_defaults_and_validation():
    assert RunConfig("mm").m_max == 8 and RunConfig("psi").m_max == 4
    for bad in ({"command": "nope"}, {"command": "psi", "m_max": 0},
                {"command": "psi", "rtol": 2.0}, {"command": "psi", "x0": ["a"]},
                {"command": "psi", "seed": True}):
        with pytest.raises(InputError):
            RunConfig.from_mapping(bad)
