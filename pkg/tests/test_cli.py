import csv
import json
import subprocess
import sys

import pytest

import uccsim.cli as cli
from uccsim.scf import SCFConvergenceError


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--output", str(out)])
    return code, out.read_bytes() if out.exists() else b""


def rows(data: bytes):
    return list(csv.DictReader(data.decode().splitlines()))


def test_surface_schema(tmp_path):
    code, data = run(tmp_path, "surface", "--rmin", "0.5", "--rmax", "4.0", "--rstep", "0.1", "--mode", "exact")
    assert code == 0
    assert data.splitlines()[0] == b"R,E_vqe,E_exact,iterations,fidelity,stderr"
    assert b"\r" not in data and data.endswith(b"\n")
    recs = rows(data)
    assert len(recs) == 36
    assert recs[0]["R"] == "0.5" and recs[-1]["R"] == "4"
    for r in recs:
        assert abs(float(r["E_vqe"]) - float(r["E_exact"])) < 1e-6
        mantissa = r["E_vqe"].lstrip("-").replace(".", "").lstrip("0")
        assert len(mantissa) <= 12


def test_vqe_byte_identical(tmp_path):
    argv = ["vqe", "--r", "1.7", "--params", "2", "--shots", "1000", "--seed", "7"]
    code_a, a = run(tmp_path, *argv, name="a")
    code_b, b = run(tmp_path, *argv, name="b")
    assert code_a == code_b == 0
    assert a == b
    assert a.splitlines()[0] == b"iteration,energy,accepted,fidelity,stderr"


def test_excited_schema(tmp_path):
    code, data = run(tmp_path, "excited", "--r", "1.7", "--lmin", "-4", "--lmax", "1", "--lstep", "0.05")
    assert code == 0
    recs = rows(data)
    assert len(recs) == 101
    assert {"lambda", "E_plus", "E_minus", "folded_min"} <= set(recs[0])


def test_field_scan_csv(tmp_path):
    code, data = run(tmp_path, "field", "--fmin", "-0.05", "--fmax", "0.05", "--fstep", "0.05")
    assert code == 0
    recs = rows(data)
    assert [r["field"] for r in recs] == ["-0.05", "0", "0.05"]
    assert {"E_first", "E_second"} <= set(recs[0])


def test_json_output_has_config_and_records(tmp_path):
    code, data = run(tmp_path, "surface", "--rmin", "1.0", "--rmax", "2.0", "--rstep", "0.5", "--format", "json")
    assert code == 0
    doc = json.loads(data)
    assert set(doc) == {"config", "records"}
    assert doc["config"]["subcommand"] == "surface"
    assert len(doc["records"]) == 3
    assert {"E_vqe_elec", "E_vqe_total", "E_exact_elec", "E_exact_total"} <= set(doc["records"][0])


def test_energy_convention_flag(tmp_path):
    _, tot = run(tmp_path, "surface", "--rmin", "2", "--rmax", "2", "--rstep", "1", name="t")
    _, ele = run(tmp_path, "surface", "--rmin", "2", "--rmax", "2", "--rstep", "1", "--energy", "electronic", name="e")
    diff = float(rows(tot)[0]["E_exact"]) - float(rows(ele)[0]["E_exact"])
    assert diff == pytest.approx(1.0, abs=1e-10)  # 2*1/2.0


def test_integrals_dump(tmp_path):
    code, data = run(tmp_path, "integrals", "--r", "1.7")
    assert code == 0
    doc = json.loads(data)["records"]
    assert doc["spin_orbital_order"] == ["1up", "1down", "2up", "2down"]
    assert len(doc["h1"]) == 4 and len(doc["h2"][0][0][0]) == 4
    assert doc["counts"]["tomography_settings"] == 15
    assert all(set(t["letters"]) <= set("IXYZ") for t in doc["pauli_terms"])
    assert len(doc["qudit_hamiltonian"]) == 4


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": 6, "trotter": 3, "rmin": 1.0}))
    resolved = cli.resolve_config(["surface", "--config", str(cfg), "--trotter", "5"])
    assert resolved.params == 6  # from file
    assert resolved.trotter == 5  # flag wins
    assert resolved.rmin == 1.0 and resolved.rmax == 4.0  # file, then default
    assert resolved.mode == "exact"
    assert cli.resolve_config(["vqe", "--shots", "10", "--seed", "1"]).mode == "shots"


@pytest.mark.parametrize("argv", [
    ["surface", "--bogus"],
    [],
    ["vqe", "--shots", "100"],
    ["surface", "--rstep", "-0.1"],
    ["surface", "--rmin", "3", "--rmax", "1"],
    ["vqe", "--params", "4"],
    ["vqe", "--trotter", "0"],
])
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert cli.main(["surface", "--config", str(bad)]) == 1
    assert cli.main(["surface", "--config", str(tmp_path / "missing.json")]) == 1


def test_computational_failure_exit_code(monkeypatch):
    def boom(cfg):
        raise SCFConvergenceError("no convergence", None)

    monkeypatch.setitem(cli.RUNNERS, "vqe", boom)
    assert cli.main(["vqe"]) == 2


def test_worker_count_does_not_change_output(tmp_path):
    argv = ["surface", "--rmin", "1.0", "--rmax", "2.0", "--rstep", "0.5", "--shots", "200", "--seed", "4"]
    _, a = run(tmp_path, *argv, "--workers", "1", name="a")
    _, b = run(tmp_path, *argv, "--workers", "2", name="b")
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "uccsim", "integrals", "--r", "2.0"], capture_output=True,
                          text=True, check=True)
    assert json.loads(proc.stdout)["records"]["E_nuc"] == pytest.approx(1.0)
