import csv
import json
from fractions import Fraction

import numpy as np
import pytest

from enspec import cli
from enspec.circuit import CircuitIR, Gate, circuit_to_json
from enspec.fastforward import FFReport
from enspec.hamiltonian import build_h2d, u_weights
from enspec.iqp import LatticeSpec


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def h2d_file(tmp_path):
    path = tmp_path / "h2d_u_2x2.json"
    assert run("build-ham", "--rows", 2, "--cols", 2, "--weights", "u", "--out", path) == 0
    return path


@pytest.fixture
def circuit_file(tmp_path):
    c = CircuitIR(2, (Gate("H", (0,)), Gate("CX", (0, 1)), Gate("T", (1,))))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(circuit_to_json(c)))
    return path


def test_spectrum_of_u_preset(h2d_file, tmp_path):
    out = tmp_path / "spec.csv"
    assert run("spectrum", "--ham", h2d_file, "--out", out) == 0
    rows = read_csv(out)
    assert len(rows) == 16
    assert [Fraction(r["exact"]) for r in rows] == [Fraction(z, 16) for z in range(16)]
    assert [float(r["eigenvalue"]) for r in rows] == [z / 16 for z in range(16)]


def test_spectrum_round_trip_is_bit_identical(h2d_file, tmp_path):
    out = tmp_path / "spec.csv"
    run("spectrum", "--ham", h2d_file, "--out", out)
    mem = sorted(build_h2d(LatticeSpec(2, 2), u_weights(4)).eigen.values())
    assert [float(r["eigenvalue"]) for r in read_csv(out)] == mem


def test_numeric_spectrum(h2d_file, tmp_path):
    out = tmp_path / "spec.csv"
    assert run("spectrum", "--ham", h2d_file, "--numeric", "--out", out) == 0
    vals = [float(r["eigenvalue"]) for r in read_csv(out)]
    assert np.allclose(vals, np.arange(16) / 16, atol=1e-12)


def test_sample_zero_hamiltonian(tmp_path):
    ham = tmp_path / "zero.json"
    ham.write_text(json.dumps({"kind": "pauli", "n": 2, "terms": []}))
    out = tmp_path / "hist.csv"
    assert run("sample", "--ham", ham, "--shots", 100, "--out", out) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["bin_index", "energy", "probability", "counts"]
    assert int(rows[0]["counts"]) == 100
    assert sum(int(r["counts"]) for r in rows[1:]) == 0


def test_sample_same_seed_identical_bytes(h2d_file, tmp_path):
    inp = tmp_path / "in.json"
    inp.write_text(json.dumps({"theta": [0, 0.7853981633974483, 0, 0], "x": [1, 0, 0, 1]}))
    outs = []
    for name, seed in (("a", 5), ("b", 5), ("c", 6)):
        path = tmp_path / f"{name}.csv"
        run("sample", "--ham", h2d_file, "--input", inp, "--digits", 4, "--beta", 0.05,
            "--shots", 2000, "--seed", seed, "--out", path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_sample_report_embeds_seed(h2d_file, tmp_path):
    rep = tmp_path / "rep.json"
    run("sample", "--ham", h2d_file, "--shots", 10, "--seed", 9, "--out", tmp_path / "h.csv", "--report", rep)
    data = json.loads(rep.read_text())
    assert data["seed"] == 9 and data["config"]["seed"] == 9


def test_sample_fk_needs_rescaling(circuit_file, tmp_path):
    fk = tmp_path / "fk.json"
    run("fk-build", "--circuit", circuit_file, "--out", fk)
    assert run("sample", "--ham", fk, "--digits", 5) == 2
    assert run("sample", "--ham", fk, "--digits", 5, "--kappa", 3, "--out", tmp_path / "h.csv") == 0


def test_malformed_circuit_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "gates": [{"kind": "H", "targets": ["a"]}]}))
    assert run("fk-build", "--circuit", bad) == 2
    assert "gates[0].targets" in capsys.readouterr().err


def test_invalid_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("spectrum", "--ham", bad) == 2
    assert run("spectrum", "--ham", tmp_path / "missing.json") == 2
    assert run("spectrum") == 2


def test_resource_guard_exit_code(tmp_path):
    ham = tmp_path / "big.json"
    run("build-ham", "--rows", 4, "--cols", 4, "--out", ham)
    assert run("spectrum", "--ham", ham, "--numeric") == 3


def test_ff_verify(h2d_file, tmp_path):
    out = tmp_path / "ff.json"
    assert run("ff-verify", "--ham", h2d_file, "--T", 2**20, "--a", 8, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["pass"] and data["distance"] <= data["bound"]


def test_certification_failure_exit_code(h2d_file, monkeypatch):
    monkeypatch.setattr(cli, "verify_ff", lambda H, p: FFReport(1.0, 0.1, False, 0.0))
    assert run("ff-verify", "--ham", h2d_file, "--T", 1, "--a", 4, "--out", h2d_file.parent / "r.json") == 4


def test_fk_build_and_certify(circuit_file, tmp_path):
    fk = tmp_path / "fk.json"
    assert run("fk-build", "--circuit", circuit_file, "--marginal", "1=0", "--no-init", "--out", fk) == 0
    data = json.loads(fk.read_text())
    assert data["kind"] == "fk" and data["marginal"] == {"positions": [1], "bits": [0]}
    out = tmp_path / "cert.json"
    assert run("certify", "--ham", fk, "--x", 2, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["ground_dim"] == 2
    assert abs(rep["pgs_check"]["expected"] - rep["pgs_check"]["measured"]) < 1e-10


def test_marginal_from_file(circuit_file, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"positions": [0], "bits": [1]}))
    assert run("fk-build", "--circuit", circuit_file, "--marginal", spec, "--out", tmp_path / "fk.json") == 0
    assert run("fk-build", "--circuit", circuit_file, "--marginal", "zz") == 2


def test_reduce_thm2(tmp_path):
    out = tmp_path / "thm2.json"
    assert run("reduce", "thm2", "--rows", 2, "--cols", 2, "--eps", 0.01, "--beta", 0.02,
               "--inputs", 5, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["measured"] <= 0.04 + 1e-12
    assert rep["config"]["eps"] == 0.01


def test_polybox(circuit_file, tmp_path):
    out = tmp_path / "pb.json"
    assert run("polybox", "--circuit", circuit_file, "--marginal", "0=0", "--delta-p", 0.1,
               "--eps-p", 0.1, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert abs(rep["p_hat"] - 0.5) <= 0.1
    assert rep["samples"] == 9587  # ceil(ln 20 * 2 * 16 / 0.01)


def test_anticoncentration_seeded(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        run("anticoncentration", "--rows", 1, "--cols", 3, "--trials", 20, "--seed", 3, "--out", path)
    assert a.read_bytes() == b.read_bytes()


def test_thread_env(h2d_file, tmp_path, monkeypatch):
    monkeypatch.setenv("ENSPEC_NUM_THREADS", "1")
    assert run("spectrum", "--ham", h2d_file, "--out", tmp_path / "s.csv") == 0
    monkeypatch.setenv("ENSPEC_NUM_THREADS", "many")
    assert run("spectrum", "--ham", h2d_file, "--out", tmp_path / "s.csv") == 2


def test_atomic_write_leaves_no_temp_files(h2d_file, tmp_path):
    run("spectrum", "--ham", h2d_file, "--out", tmp_path / "s.csv")
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]
