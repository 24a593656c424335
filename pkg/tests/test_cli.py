import json
import subprocess
import sys
from pathlib import Path

import pytest

from givkdv.cli import RunConfig, build_parser, config_from_args, main

DATA = Path(__file__).resolve().parents[1] / "scripts" / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_omega_text(capsys):
    code, out, _ = run(capsys, "omega", "--p-max", "1")
    assert code == 0
    assert "omega 1,0;1,1 = 1/2*u[1,0]^2 + 1/12*h^2*u[1,2]" in out


def test_verify_sqrt_json(capsys):
    code, out, _ = run(capsys, "verify", "sqrt", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == 1 and doc["command"] == "verify sqrt" and doc["all_pass"]
    assert {"case", "status", "depth", "lhs", "rhs", "difference"} <= set(doc["reports"][0])
    assert "wall_time" not in doc["reports"][0]


def test_timing_flag_adds_wall_time(capsys):
    _, out, _ = run(capsys, "verify", "sqrt", "--format", "json", "--timing")
    assert "wall_time" in json.loads(out)["reports"][0]


def test_csv(capsys):
    code, out, _ = run(capsys, "verify", "zs", "--N", "1", "--p-max", "1", "--format", "csv")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "case,status,depth,lhs,rhs,difference"
    assert len(lines) == 5


def test_deform_matrix_file(capsys):
    code, out, _ = run(capsys, "deform", "--matrix", str(DATA / "r_ell1.json"), "--p-max", "1")
    assert code == 0
    assert out.strip().endswith("8/8 passed")


def test_sign_normalization_off_fails(capsys):
    code, out, _ = run(capsys, "deform", "--ell", "2", "--p-max", "0", "--no-sign-normalization")
    assert code == 1
    assert "[FAIL]" in out


def test_broken_matrix_names_entry(capsys):
    code, out, err = run(capsys, "deform", "--matrix", str(DATA / "broken.json"))
    assert code == 2
    assert out == ""
    assert "(1, 2)" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "deform", "--matrix", str(DATA / "nope.json"))
    assert code == 2 and "error" in err


def test_depth_below_policy_rejected(capsys):
    code, _, err = run(capsys, "deform", "--depth", "3", "--p-max", "1")
    assert code == 2 and "policy" in err


def test_bad_arguments(capsys):
    assert run(capsys, "omega", "--N", "0")[0] == 2
    assert run(capsys, "verify", "zs", "--ell", "0")[0] == 2
    with pytest.raises(SystemExit):
        main(["verify", "nonsense"])


def test_suite_kind_mismatch(capsys):
    code, _, err = run(capsys, "verify", "tilde-lemma", "--matrix", str(DATA / "r_ell1.json"))
    assert code == 2 and "S datum" in err


def test_vertex_json_has_series(capsys):
    code, out, _ = run(capsys, "vertex", "--ell", "1", "--p-max", "1", "--k-max", "3", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["all_pass"]
    series = [r["extra"]["series"] for r in doc["reports"] if "series" in r.get("extra", {})]
    assert series and all("degree" in t for s in series for t in s)


def test_config_defaults():
    ns = build_parser().parse_args(["deform"])
    cfg = config_from_args(ns)
    assert cfg == RunConfig(command="deform")
    with pytest.raises(ValueError):
        RunConfig("deform", k_max=-1).validate()


def test_output_is_byte_stable():
    cmd = [sys.executable, "-m", "givkdv", "deform", "--kind", "S", "--ell", "2", "--p-max", "1", "--format", "json"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == second
    assert json.loads(first)["all_pass"]
