import json
from pathlib import Path

import numpy as np
import pytest

from evikit.cli import load_problem, run
from evikit.errors import ParseError
from evikit.evicore import EVIProblem
from evikit.games import NormalFormGame

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "evikit" / "fixtures"


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_load_problem_dispatch():
    assert isinstance(load_problem(FIXTURES / "sign.json"), EVIProblem)
    assert isinstance(load_problem(FIXTURES / "bos.json"), NormalFormGame)
    game = load_problem(FIXTURES / "matching-pennies.json")
    assert isinstance(game, NormalFormGame)
    assert game.pairwise is not None


def test_load_problem_malformed_row(tmp_path):
    bad = write_json(tmp_path / "bad.json", {
        "polytope": {"A": [[1.0], [1.0, 2.0]], "b": [1.0, 1.0]},
        "operator": {"kind": "sign"}, "phi": "lin", "epsilon": 0.1})
    with pytest.raises(ParseError, match="row 1"):
        load_problem(bad)


def test_solve_eah_writes_verified_report(tmp_path):
    code = run(["solve", "--problem", str(FIXTURES / "sign.json"),
                "--method", "eah", "--epsilon", "0.01",
                "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["gaps"]["linear"] <= 0.01
    assert report["library"]["name"] == "evikit"
    assert "wall_time_s" not in report
    assert len(report["canonical_digest"]) == 64


def test_solve_pgd_writes_trace(tmp_path):
    code = run(["solve", "--problem", str(FIXTURES / "sign.json"),
                "--method", "pgd", "--rounds", "50", "--out", str(tmp_path)])
    assert code == 0
    trace = (tmp_path / "trace.csv").read_text().splitlines()
    assert trace[0] == "round,instantaneous_payoff,average_gap"
    assert len(trace) == 51


def test_solve_determinism_byte_identical(tmp_path):
    blobs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert run(["solve", "--problem", str(FIXTURES / "sign.json"),
                    "--epsilon", "0.02", "--out", str(out)]) == 0
        blobs.append((out / "report.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_verify_exit_codes(tmp_path):
    nash = write_json(tmp_path / "nash.json",
                      {"support": [[0.6, 0.4, 0.4, 0.6]], "weights": [1.0]})
    assert run(["verify", "--problem", str(FIXTURES / "bos.json"),
                "--distribution", nash, "--epsilon", "1e-9"]) == 0
    off = write_json(tmp_path / "off.json",
                     {"support": [[1.0, 0.0, 0.0, 1.0]], "weights": [1.0]})
    assert run(["verify", "--problem", str(FIXTURES / "bos.json"),
                "--distribution", off, "--epsilon", "1e-3"]) == 2
    # gap reports without enforcing
    assert run(["gap", "--problem", str(FIXTURES / "bos.json"),
                "--distribution", off, "--epsilon", "1e-3"]) == 0


def test_verify_exact_solution_of_modified_sign(tmp_path):
    mu = write_json(tmp_path / "mu.json",
                    {"support": [[0.3], [0.5]], "weights": [0.5, 0.5]})
    assert run(["verify", "--problem", str(FIXTURES / "sign-modified.json"),
                "--distribution", mu, "--epsilon", "1e-9"]) == 0


def test_game_command(tmp_path, capsys):
    mu = write_json(tmp_path / "mu.json", {
        "support": [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0],
                    [1.0, 0.0, 0.0, 1.0]],
        "weights": [1 / 3, 1 / 3, 1 / 3]})
    assert run(["game", "--game", str(FIXTURES / "bos.json"),
                "--distribution", mu]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["alce"]["gap"] >= 4.0 / 3.0 - 1e-6
    assert max(out["lce"]["per_player"]) <= 1e-9


def test_region_command(tmp_path):
    assert run(["region", "--game", str(FIXTURES / "bos.json"),
                "--resolution", "0.25", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "region.csv").read_text().splitlines()
    assert lines[0] == "p,q,verdict"
    assert len(lines) == 26
    svg = (tmp_path / "region.svg").read_text()
    assert svg.startswith("<svg") or "<svg" in svg


def test_analyze_command(tmp_path):
    mu = write_json(tmp_path / "mu.json", {"support": [[0.0]], "weights": [1.0]})
    code = run(["analyze", "--problem", str(FIXTURES / "quartic-p4.json"),
                "--distribution", mu, "--out", str(tmp_path)])
    assert code == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["smoothness"]["passed"]
    assert cert["welfare"]["bound"] == pytest.approx(1.0, abs=1e-9)
    assert cert["welfare"]["holds"]


def test_selftest_command():
    assert run(["selftest"]) == 0


def test_usage_error_prints_schema_help(capsys):
    assert run(["solve"]) == 1
    err = capsys.readouterr().err
    assert "schemas" in err


def test_unknown_input_schema(tmp_path):
    bad = write_json(tmp_path / "what.json", {"foo": 1})
    assert run(["solve", "--problem", bad]) == 1


def test_problem_round_trip_bit_exact(tmp_path):
    prob = load_problem(FIXTURES / "quartic-p4.json")
    data = prob.to_dict()
    again = EVIProblem.from_dict(json.loads(json.dumps(data)))
    assert again.to_dict() == data


def test_report_round_trip_bit_exact(tmp_path):
    assert run(["solve", "--problem", str(FIXTURES / "sign.json"),
                "--epsilon", "0.05", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "report.json").read_text()
    reloaded = json.dumps(json.loads(text), indent=1, sort_keys=True)
    assert reloaded == text
