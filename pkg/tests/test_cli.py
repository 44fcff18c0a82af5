import csv
import hashlib
import json
import subprocess
import sys

import pytest

from crnp.cli import main
from crnp.parser import serialize_network

from conftest import fixture_path, load


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def huge(tmp_path):
    path = tmp_path / "huge.crn"
    path.write_text("\n".join(f"S{j} <-> S{j + 1} [k=1,1]" for j in range(39)))
    return path


@pytest.fixture
def broken(tmp_path):
    path = tmp_path / "broken.crn"
    path.write_text("X1 -> X2 [k=1\n")
    return path


class TestAnalyze:
    def test_trio(self, capsys):
        code, out, _ = run(capsys, "analyze", fixture_path("net_trio"))
        doc = json.loads(out)
        assert code == 0
        assert doc["schema_version"] == "1"
        assert doc["verdict"] == "Persistent"
        assert [(r["members"], r["rule"]) for r in doc["semilocking_sets"]] == [
            (["X1"], "R1"),
            (["X1", "X2"], "R2"),
            (["X1", "X3"], "R2"),
            (["X1", "X2", "X3"], "TrivialConservation"),
        ]
        first = doc["semilocking_sets"][0]
        assert first["boundary"] == "Facet"
        assert first["partition"] == {"tf": [], "sr": ["X2", "X3"], "tr": []}
        assert first["complement_projection_dim"] == 2
        assert doc["conservation_basis"] == [["1/1", "1/1", "1/1"]]

    def test_hash_is_of_canonical_text(self, capsys):
        _, out, _ = run(capsys, "analyze", fixture_path("net_comb_open"))
        canonical = serialize_network(load("net_comb_open"))
        assert json.loads(out)["network_sha256"] == hashlib.sha256(canonical.encode()).hexdigest()

    def test_reproducible_outside_meta(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(capsys, "analyze", fixture_path("net_comb_open"), "--out", a)[0] == 0
        assert run(capsys, "analyze", fixture_path("net_comb_open"), "--out", b)[0] == 0
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        da.pop("meta"), db.pop("meta")
        assert json.dumps(da) == json.dumps(db)

    def test_syntax_error(self, capsys, broken):
        code, out, err = run(capsys, "analyze", broken)
        assert code == 2 and out == ""
        assert err.startswith("crnp: line 1:") and len(err.strip().splitlines()) == 1

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "analyze", tmp_path / "nope.crn")[0] == 2

    def test_too_large(self, capsys, huge):
        assert run(capsys, "analyze", huge)[0] == 4

    def test_cap_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("CRNP_MAX_N", "2")
        assert run(capsys, "analyze", fixture_path("net_trio"))[0] == 4

    def test_undecided(self, capsys, tmp_path):
        path = tmp_path / "open.crn"
        path.write_text("X1 <-> X2 [k=1,1]\nX1 -> 0 [k=1]\n")
        code, out, _ = run(capsys, "analyze", path)
        assert code == 3 and json.loads(out)["verdict"] == "Undecided"

    def test_invalid_partition(self, capsys, tmp_path):
        path = tmp_path / "bad.crn"
        path.write_text("species A B C\nA -> B [k=1]\n")
        assert run(capsys, "analyze", path)[0] == 2


class TestExplain:
    def test_semilocking_set(self, capsys):
        code, out, _ = run(capsys, "explain", fixture_path("net_trio"), "--set", "X1")
        first = out.splitlines()[0]
        assert code == 0
        assert first.startswith("semilocking: yes; boundary: facet; rule: R1 (")
        assert "W^sr: {X2, X3}" in out

    def test_not_semilocking(self, capsys):
        code, out, _ = run(capsys, "explain", fixture_path("net_trio"), "--set", "X2")
        assert code == 0
        assert out.strip() == "semilocking: no; witness reaction 1: 2 X1 -> X1 + X2"

    def test_unknown_species(self, capsys):
        code, _, err = run(capsys, "explain", fixture_path("net_trio"), "--set", "X1,Q")
        assert code == 2 and "Q" in err


class TestSimulate:
    def test_ab_csv_and_report(self, capsys, tmp_path):
        out_csv, report = tmp_path / "ab.csv", tmp_path / "ab.json"
        code, _, _ = run(
            capsys, "simulate", fixture_path("net_ab"), "--init", "X1=2,X2=0.5",
            "--t-end", 50, "--step", 0.001, "--out", out_csv, "--report", report, "--every", 1000,
        )
        assert code == 0
        rows = list(csv.reader(out_csv.open()))
        assert rows[0] == ["t", "X1", "X2"]
        assert len(rows) == 52
        doc = json.loads(report.read_text())
        assert doc["conservation_drift"] < 1e-6
        assert doc["terminal_state"]["X1"] == pytest.approx(1.25, abs=1e-9)
        assert doc["reference_equilibrium"] == ["1", "1"]

    def test_report_to_stdout_with_csv_file(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", fixture_path("net_trio"), "--init", "X1=1,X2=2,X3=3",
            "--t-end", 1, "--step", 0.01, "--out", tmp_path / "t.csv",
        )
        assert code == 0 and json.loads(out)["delays_used"] == [0.1] * 4

    def test_tau_override(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, "simulate", fixture_path("net_trio"), "--init", "X1=1,X2=2,X3=3",
            "--t-end", 1, "--step", 0.01, "--tau-override", 0.3, "--out", tmp_path / "t.csv",
        )
        assert code == 0 and json.loads(out)["delays_used"] == pytest.approx([0.3] * 4)

    @pytest.mark.parametrize(
        "extra",
        [
            ["--init", "X1=2"],
            ["--init", "X1=2,X2=0"],
            ["--init", "X1=2,X2=abc"],
            ["--init", "X1=2,X2=1,Q=1"],
            ["--init", "X1=2,X2=1", "--step", "0"],
            ["--init", "X1=2,X2=1", "--t-end", "-1"],
        ],
    )
    def test_bad_input(self, capsys, extra):
        assert run(capsys, "simulate", fixture_path("net_ab"), *extra)[0] == 2

    def test_step_larger_than_delay(self, capsys):
        code, _, _ = run(capsys, "simulate", fixture_path("net_trio"), "--init", "X1=1,X2=1,X3=1", "--step", 0.5)
        assert code == 2

    def test_blow_up(self, capsys, tmp_path):
        path = tmp_path / "boom.crn"
        path.write_text("2 X -> 3 X [k=1]\n")
        code, _, err = run(capsys, "simulate", path, "--init", "X=1", "--t-end", 3, "--step", 0.01)
        assert code == 5 and "non-finite" in err


class TestReduce:
    def test_listing(self, capsys):
        code, out, _ = run(capsys, "reduce", fixture_path("net_semi"), "--keep", "X1,X2")
        assert code == 0
        assert "X1 -> X2 [k=1.0*X3^1, tau=0.0]" in out
        assert "# reduced dimension 1, kept species 2" in out


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "crnp.cli", "explain", str(fixture_path("net_trio")), "--set", "X1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("semilocking: yes")
