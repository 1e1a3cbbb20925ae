import json
import math

import pytest

from impflow import __version__
from impflow import cli
from impflow.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, OUTPUT_ENV, config_hash, main
from impflow.errors import GrazingError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_writes_impulse_row(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--example", "annulus", "--start", "0,1.5",
                       "--T", "6", "--out", str(tmp_path))
    assert code == EXIT_OK
    lines = (tmp_path / "orbit.csv").read_text().splitlines()
    assert lines[0] == f"# impflow {__version__}"
    assert lines[3] == "t,x0,x1,impulse"
    jumps = [l for l in lines[4:] if l.endswith(",1")]
    assert jumps == [f"{format(3 * math.pi / 2, '.12g')},-1.25,0,1"]
    summary = json.loads((tmp_path / "orbit.json").read_text())
    assert summary["impulse_times"] == [pytest.approx(3 * math.pi / 2, abs=1e-9)]
    assert json.loads(out)["config_hash"] == summary["config_hash"]


def test_check_reports_annulus_constants(tmp_path, capsys):
    code, _, _ = run(capsys, "check", "--example", "annulus", "--out", str(tmp_path))
    assert code == EXIT_OK
    report = json.loads((tmp_path / "check.json").read_text())
    assert report["passed"]
    assert report["a"] == pytest.approx(2.0, abs=1e-6)
    assert report["lipschitz"] == pytest.approx(0.5, abs=1e-9)
    assert report["version"] == __version__ and report["seed"] == 0


def test_entropy_outputs_are_byte_identical(tmp_path, capsys):
    args = ["entropy", "--example", "rotation", "--mode", "tau", "--T", "2,4,6,8",
            "--eps", "0.2,0.1", "--delta", "0.3", "--samples", "400", "--seed", "7"]
    texts = []
    for k in range(2):
        out = tmp_path / str(k)
        assert run(capsys, *args, "--out", str(out))[0] == EXIT_OK
        texts.append(((out / "entropy.csv").read_bytes(), (out / "entropy.json").read_bytes()))
    assert texts[0] == texts[1]
    summary = json.loads(texts[0][1])
    assert abs(summary["slope"]) <= 0.02 and "stable" in summary["flags"]
    assert summary["seed"] == 7 and summary["time_function"] == "section"
    assert texts[0][0].decode().splitlines()[2] == "# seed 7"


def test_quotient_summary(tmp_path, capsys):
    code, _, _ = run(capsys, "quotient", "--example", "annulus", "--pairs", "5", "--pool", "20",
                     "--out", str(tmp_path))
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "quotient.json").read_text())
    assert summary["pairs"] == 5 and summary["quotient_le_d"]
    rows = (tmp_path / "quotient.csv").read_text().splitlines()
    assert rows[3] == "pair_id,x,y,d,d_quotient,d_chain" and len(rows) == 9


def test_example_list_and_describe(capsys):
    code, out, _ = run(capsys, "example", "list")
    assert code == EXIT_OK
    assert json.loads(out)["examples"] == ["annulus", "doubling_suspension", "rotation"]
    code, out, _ = run(capsys, "example", "describe", "annulus")
    assert json.loads(out)["analytic_facts"]["lipschitz"]["value"] == 0.5


def test_env_var_sets_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert run(capsys, "check", "--example", "annulus", "--samples", "8")[0] == EXIT_OK
    assert (tmp_path / "env" / "check.json").exists()


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "simulate", "system": "annulus",
                               "params": {"start": [0, 1.5], "T": 2.0, "seed": 3}}))
    out = tmp_path / "o"
    assert run(capsys, "simulate", "--config", str(cfg), "--T", "6", "--out", str(out))[0] == 0
    summary = json.loads((out / "orbit.json").read_text())
    assert summary["config"]["params"]["T"] == 6.0 and summary["seed"] == 3
    assert summary["config_hash"] == config_hash(summary["config"])


def test_inline_system_constants(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "check",
                               "system": {"example": "annulus", "constants": {"xi": 0.1}}}))
    assert run(capsys, "check", "--config", str(cfg), "--out", str(tmp_path))[0] == EXIT_OK


@pytest.mark.parametrize("text, line, needle", [
    ('{\n  "command": "entropy",\n  "params": {"T_grid": [1, 3, 2]}\n}', 3, "monotone"),
    ('{\n  "command": "entropy",\n\n  "bogus": 1\n}', 4, "bogus"),
    ('{\n  "command": "entropy",\n  "params": {\n    "T_grid": [1, 2,\n}', 5, "invalid JSON"),
    ('{"system": {"example": "annulus",\n "constants": {"zeta": 1}}}', 2, "zeta"),
])
def test_config_errors_are_line_anchored(tmp_path, capsys, text, line, needle):
    cfg = tmp_path / "bad.json"
    cfg.write_text(text)
    code, _, err = run(capsys, "entropy", "--config", str(cfg), "--example", "rotation")
    assert code == EXIT_CONFIG
    assert f"{cfg}:{line}:" in err and needle in err


@pytest.mark.parametrize("argv", [
    ["simulate", "--example", "nowhere", "--start", "0,1.5"],
    ["simulate", "--example", "annulus", "--start", "0,3"],
    ["simulate", "--example", "annulus"],
    ["entropy", "--example", "rotation", "--eps", "0.1,0.2,0.1"],
    ["entropy", "--example", "rotation", "--T", "a,b"],
    ["check", "--example", "rotation"],
    ["frobnicate"],
    ["entropy", "--mode", "fuzzy"],
])
def test_bad_invocations_exit_2(tmp_path, capsys, argv):
    try:
        code = main(argv + (["--out", str(tmp_path)] if argv[0] != "frobnicate" else []))
    except SystemExit as exc:
        code = exc.code
    capsys.readouterr()
    assert code == EXIT_CONFIG


def test_overstated_gap_exits_3(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "simulate",
                               "system": {"example": "annulus", "constants": {"eta": 4.0}},
                               "params": {"start": [0, 1.5], "T": 12}}))
    code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path))
    assert code == EXIT_NUMERIC and "witness" in err


def test_grazing_exits_3_with_witness(tmp_path, capsys, monkeypatch):
    def graze(*a, **k):
        raise GrazingError("tangent touch", time=0.5, point=(1.5, 0.0))

    monkeypatch.setattr(cli, "impulsive_orbit", graze)
    code, _, err = run(capsys, "simulate", "--example", "annulus", "--start", "0,1.5",
                       "--out", str(tmp_path))
    assert code == EXIT_NUMERIC and "'time': 0.5" in err


def test_annulus_tau_entropy_is_flat(tmp_path, capsys):
    code, out, _ = run(capsys, "entropy", "--example", "annulus", "--mode", "tau",
                       "--T", "5,10,15,20", "--eps", "0.05", "--delta", "0.2", "--seed", "7",
                       "--out", str(tmp_path))
    summary = json.loads(out)
    assert code == EXIT_OK
    assert abs(summary["slope"]) <= 0.05 and "stable" in summary["flags"]
