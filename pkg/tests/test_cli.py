import json
from pathlib import Path

import pytest

from tcsum.cli import EXIT_CHECK, EXIT_SEARCH, EXIT_USAGE, EXIT_VALIDATION, run

GOLDEN = Path(__file__).parent / "golden"
HINTS = Path(__file__).resolve().parents[1] / "src" / "tcsum" / "data" / "hints_p2xp1_rank3.json"


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "argv, golden",
    [
        (["chern", "--ambient", "6", "--degrees", "2,2,2", "--format", "json"], "chern_x8.json"),
        (["lattice", "show", "--name", "K3", "--format", "json"], "lattice_k3.json"),
        (["fano", "list", "--format", "json"], "fano_list.json"),
        (["match", "build", "--fano1", "P3", "--fano2", "P3"], "cert_p3_p3.json"),
        (["geography"], "geography.csv"),
    ],
)
def test_golden_outputs(capsys, argv, golden):
    code, out, _ = call(capsys, *argv)
    assert code == 0
    assert out == (GOLDEN / golden).read_text()


def test_chern_text(capsys):
    code, out, _ = call(capsys, "chern", "--ambient", "6", "--degrees", "2,2,2")
    assert code == 0
    assert "c     = 1 + x + 3x^2 - 3x^3" in out
    assert "chi   = -24" in out and "b3    = 28" in out


def test_lattice_signature(capsys):
    assert call(capsys, "lattice", "signature", "--name", "K3")[1].strip() == "(3,19)"
    code, out, _ = call(capsys, "lattice", "complement", "e1+2e1'", "--format", "json")
    assert json.loads(out)["rank"] == 21


def test_build_then_invariants(capsys, tmp_path):
    cert = tmp_path / "out.json"
    code, _, _ = call(capsys, "match", "build", "--fano1", "P3", "--fano2", "P3", "--out", str(cert))
    assert code == 0
    code, out, _ = call(capsys, "invariants", "--cert", str(cert), "--format", "json")
    d = json.loads(out)
    assert code == 0 and (d["b2"], d["b3"]) == (0, 155)
    assert d == json.loads((GOLDEN / "invariants_p3_p3.json").read_text())
    code, out, _ = call(capsys, "match", "verify", str(cert))
    assert code == 0 and "certificate OK" in out


def test_rank3_hints(capsys, tmp_path):
    cert = tmp_path / "r3.json"
    code, out, _ = call(
        capsys, "match", "build", "--fano1", "P2xP1", "--fano2", "P2xP1", "--hints", str(HINTS), "--out", str(cert)
    )
    assert code == 0 and "waived" in out
    code, out, _ = call(capsys, "invariants", "--cert", str(cert), "--format", "json")
    d = json.loads(out)
    assert (d["b2"], d["b3"]) == (1, 134)
    code, out, _ = call(capsys, "match", "verify", str(cert))
    assert code == 0 and "waived" in out


def test_verify_detects_tampering(capsys, tmp_path):
    cert = tmp_path / "c.json"
    call(capsys, "match", "build", "--fano1", "P3", "--fano2", "P3", "--out", str(cert))
    doc = json.loads(cert.read_text())
    doc["kappaK"] = doc["kappa1"]
    cert.write_text(json.dumps(doc))
    code, out, _ = call(capsys, "match", "verify", str(cert))
    assert code == EXIT_CHECK and "fail   kappaK_perp_image1" in out
    code, _, err = call(capsys, "invariants", "--cert", str(cert))
    assert code == EXIT_CHECK and "inconsistent" in err


def test_exit_codes(capsys, tmp_path):
    assert call(capsys, "frobnicate")[0] == EXIT_USAGE
    assert call(capsys, "chern", "--ambient", "6", "--bogus")[0] == EXIT_USAGE
    assert call(capsys, "chern")[0] == EXIT_USAGE
    code, _, err = call(
        capsys, "match", "build", "--fano1", "P2xP1", "--fano2", "P2xP1", "--span-rank", "3", "--radius", "2"
    )
    assert code == EXIT_SEARCH and "within radius 2" in err
    bad = tmp_path / "db.json"
    doc = json.loads((GOLDEN / "fano_list.json").read_text())
    doc[0]["b3"] = 7
    bad.write_text(json.dumps(doc))
    assert call(capsys, "fano", "validate", "--db", str(bad))[0] == EXIT_VALIDATION
    assert call(capsys, "fano", "show", "V5")[0] == 1


def test_help_for_every_command(capsys):
    for cmd in ("lattice", "fano", "chern", "match", "invariants", "geography"):
        assert call(capsys, cmd, "--help")[0] == 0


def test_geography_to_file_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert call(capsys, "geography", "--out", str(a))[0] == 0
    assert call(capsys, "geography", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_fano_show(capsys):
    code, out, _ = call(capsys, "fano", "show", "X22", "--format", "json")
    assert code == 0 and json.loads(out)["genus"] == 12
