"""
End-to-end runs of the qgdual command line through main(argv).
"""
import json
import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from engines.algebra import content, parse_config
from scripts.cli import main
from utils.dumps import read_matrix_csv, sidecar_path

pytestmark = pytest.mark.integration


def run(*argv):
    return main([str(a) for a in argv])


class TestVerify:
    """Exit codes and printed check lines."""

    @pytest.mark.parametrize("scope,alg", [("relations", "A2"), ("central", "C2"), ("kernel", "C2"),
                                           ("groundstate", "C2"), ("generator", "A2"), ("duality", "C2")])
    def test_scopes_pass(self, scope, alg, out_dir, capsys):
        code = run("verify", "--scope", scope, "--alg", alg, "--L", 2, "--out", out_dir)
        printed = capsys.readouterr().out
        assert code == 0, printed
        assert "[verify] OK" in printed
        assert "FAIL" not in printed
        assert (out_dir / f"verify_{scope}.json").exists()

    def test_float_ring(self, out_dir, capsys):
        code = run("verify", "--scope", "duality", "--alg", "A2", "--L", 4, "--ring", "float", "--q", 0.7,
                   "--out", out_dir)
        assert code == 0, capsys.readouterr().out

    def test_rate_fault_fails(self, out_dir, capsys):
        code = run("verify", "--scope", "generator", "--alg", "A2", "--L", 2, "--rate", "L12=2", "--out", out_dir)
        printed = capsys.readouterr().out
        assert code == 1
        assert "[generator] FAIL constructed = reference" in printed
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["passed"] is False

    def test_manifest(self, out_dir):
        assert run("verify", "--scope", "relations", "--alg", "C2", "--L", 1, "--out", out_dir) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["passed"] is True
        assert manifest["parameters"]["alg"] == "C2"
        assert manifest["parameters"]["L"] == 1
        assert {"python", "numpy", "scipy", "pydantic"} <= set(manifest["versions"])

    @pytest.mark.parametrize("argv", [
        ("verify", "--L", 0),
        ("verify", "--alg", "B2"),
        ("verify", "--scope", "generator", "--rate", "L21=1"),
        ("verify", "--scope", "generator", "--rate", "L12=q^"),
        ("verify", "--scope", "kernel", "--alg", "A2"),
        ("verify", "--scope", "duality", "--alg", "A2", "--variant", "C2_self"),
        ("verify", "--scope", "generator", "--alg", "C2", "--L", 1),
        ("verify", "--eps=-1/2"),
    ])
    def test_bad_parameters(self, argv, out_dir, capsys):
        assert run(*argv, "--out", out_dir) == 2

    def test_usage_error_writes_manifest(self, out_dir, capsys):
        assert run("verify", "--scope", "kernel", "--alg", "A2", "--out", out_dir) == 2
        assert "[error]" in capsys.readouterr().err
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["passed"] is False
        assert manifest["summary"].startswith("usage error")
        assert manifest["parameters"]["alg"] == "A2"

    def test_dump_usage_error_manifest_beside_target(self, out_dir):
        path = out_dir / "sub" / "dual.csv"
        assert run("dump", "--object", "duality", "--alg", "A2", "--variant", "C2_self", "--L", 2,
                   "--out", path) == 2
        assert not path.exists()
        assert json.loads((path.parent / "manifest.json").read_text())["passed"] is False

    @pytest.mark.parametrize("argv", [("verify", "--L", 0), ("verify", "--scope", "everything")])
    def test_rejected_before_settings_writes_no_manifest(self, argv, out_dir):
        assert run(*argv, "--out", out_dir) == 2
        assert not (out_dir / "manifest.json").exists()

    def test_missing_config_file(self, tmp_path):
        assert run("verify", "--config", tmp_path / "nope.json") == 2

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"run": {"alg": "A2", "color": "red"}}))
        assert run("verify", "--config", cfg) == 2


class TestDump:
    """Matrix and vector files with their sidecars."""

    def test_exact_generator(self, out_dir):
        path = out_dir / "gen.csv"
        assert run("dump", "--object", "generator", "--alg", "A2", "--L", 2, "--out", path) == 0
        header, entries = read_matrix_csv(path)
        assert header == {"dim": "9", "ring": "exact", "basis": "A2", "L": "2"}
        assert entries
        side = json.loads(sidecar_path(path).read_text())
        assert side["normalization_constant"] == "q^2"
        assert side["q"] == "symbolic"
        assert (out_dir / "manifest.json").exists()

    def test_float_generator_rows_sum_to_zero(self, out_dir):
        path = out_dir / "gen.csv"
        assert run("dump", "--object", "generator", "--alg", "C2", "--L", 3, "--ring", "float", "--q", 0.5,
                   "--out", path) == 0
        _, entries = read_matrix_csv(path)
        sums = {}
        for i, _, v in entries:
            sums[i] = sums.get(i, 0.0) + float(v)
        assert all(abs(s) < 1e-9 for s in sums.values())
        assert json.loads(sidecar_path(path).read_text())["normalization_constant"] == "1"

    def test_duality_table(self, out_dir):
        path = out_dir / "dual.csv"
        assert run("dump", "--object", "duality", "--alg", "C2", "--L", 2, "--out", path) == 0
        header, entries = read_matrix_csv(path)
        assert header["basis"] == "C2_to_ASEP"
        assert len(entries) == 9 * 4

    def test_hamiltonian(self, out_dir):
        path = out_dir / "ham.csv"
        assert run("dump", "--object", "hamiltonian", "--alg", "C2", "--L", 2, "--out", path) == 0
        header, _ = read_matrix_csv(path)
        assert header["dim"] == "16"

    def test_reproducible(self, tmp_path):
        paths = []
        for k in range(2):
            path = tmp_path / str(k) / "gen.csv"
            assert run("dump", "--object", "generator", "--alg", "C2", "--L", 3, "--out", path) == 0
            paths.append(path)
        first, second = paths
        assert first.read_bytes() == second.read_bytes()
        assert sidecar_path(first).read_bytes() == sidecar_path(second).read_bytes()

    def test_groundstate(self, out_dir):
        path = out_dir / "g.json"
        assert run("dump", "--object", "groundstate", "--alg", "C2", "--L", 2, "--out", path) == 0
        records = json.loads(path.read_text())
        assert records[0] == {"state": "00", "weight": "1"}

    def test_default_path(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert run("dump", "--object", "hamiltonian", "--alg", "A2", "--L", 2) == 0
        path = tmp_path / "outputs" / "hamiltonian_A2_L2.csv"
        assert path.exists() and sidecar_path(path).exists()
        assert (tmp_path / "outputs" / "manifest.json").exists()


class TestSimulate:
    """Simulation modes write their JSON summaries."""

    def test_trajectory(self, out_dir):
        code = run("simulate", "--mode", "trajectory", "--alg", "A2", "--L", 5, "--x", "12010", "--t", 2.0,
                   "--seed", 3, "--out", out_dir)
        assert code == 0
        payload = json.loads((out_dir / "trajectory.json").read_text())
        assert payload["config"]["initial"] == "12010"
        assert content(parse_config(payload["final"])) == (2, 1)
        lines = (out_dir / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "time,site,from_state,to_state"
        assert len(lines) - 1 == 2 * payload["events"]

    def test_reproducible(self, tmp_path):
        outs = []
        for k in range(2):
            out = tmp_path / str(k)
            assert run("simulate", "--alg", "C2", "--L", 4, "--x", "1200", "--seed", 8, "--out", out) == 0
            outs.append(out)
        first, second = outs
        assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()
        payloads = []
        for out in outs:
            payload = json.loads((out / "trajectory.json").read_text())
            assert payload.pop("elapsed_seconds") >= 0
            payloads.append(payload)
        assert payloads[0] == payloads[1]

    def test_moment_demo_rejects_empty_c2_self_dual(self, out_dir):
        code = run("simulate", "--mode", "moment_demo", "--alg", "C2", "--variant", "C2_self", "--L", 3,
                   "--x", "120", "--sites", "--out", out_dir)
        assert code == 2
        assert not (out_dir / "moment_demo.json").exists()


    def test_duality_mc_needs_y(self, out_dir):
        assert run("simulate", "--mode", "duality_mc", "--alg", "C2", "--L", 3, "--x", "120", "--out", out_dir) == 2

    def test_wrong_length(self, out_dir):
        assert run("simulate", "--alg", "C2", "--L", 3, "--x", "1200", "--out", out_dir) == 2

    @pytest.mark.slow
    def test_duality_mc(self, out_dir):
        code = run("simulate", "--mode", "duality_mc", "--alg", "C2", "--L", 4, "--x", "1201", "--y", "0200",
                   "--t", 0.5, "--traj", 3000, "--seed", 12, "--out", out_dir)
        payload = json.loads((out_dir / "duality_mc.json").read_text())
        assert "lhs_mean" in payload["estimates"]
        assert code == (0 if payload["agreement"] else 1)
