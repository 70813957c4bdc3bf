import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spdgeo import grassmann as gr
from spdgeo.cli import main


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dsr_zero_and_schema(tmp_path, capsys):
    X = _write(tmp_path, "x.json", [[2.0, 0.5], [0.5, 1.0]])
    code, out, _ = _run(["dsr", "--X", X, "--Y", X], capsys)
    assert code == 0
    body = json.loads(out)
    assert body["schema"] == "1" and body["command"] == "dsr"
    assert body["dsr"] == pytest.approx(0.0, abs=1e-10)
    assert body["minimal_pairs"]


def test_dsr_accepts_wrapped_matrix(tmp_path, capsys):
    X = _write(tmp_path, "x.json", {"matrix": [[1.0, 0], [0, 4.0]]})
    Y = _write(tmp_path, "y.json", [[4.0, 0], [0, 1.0]])
    code, out, _ = _run(["dsr", "--X", X, "--Y", Y, "--k", "4"], capsys)
    assert code == 0
    assert json.loads(out)["dsr"] == pytest.approx(min(math.pi, math.sqrt(2) * math.log(4)), abs=1e-9)


def test_output_is_deterministic(tmp_path, capsys):
    rng = np.random.default_rng(1)
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 3))
    X = _write(tmp_path, "x.json", (A @ A.T + np.eye(3)).tolist())
    Y = _write(tmp_path, "y.json", (B @ B.T + np.eye(3)).tolist())
    outs = []
    for _ in range(2):
        code, out, _ = _run(["mssr", "--X", X, "--Y", Y, "--samples", "8"], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    body = json.loads(outs[0])
    assert body["curves"][0]["sample"]["times"][0] == 0.0
    assert body["report"]["curve_count"] >= 1


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = _run(["dsr", "--X", str(bad), "--Y", str(bad)], capsys)
    assert code == 2 and "error" in err
    code, _, _ = _run(["dsr", "--X", str(tmp_path / "missing.json"), "--Y", str(bad)], capsys)
    assert code == 2
    code, _, _ = _run(["dsr"], capsys)
    assert code == 2
    nonspd = _write(tmp_path, "n.json", [[1.0, 0], [0, -1.0]])
    code, _, _ = _run(["dsr", "--X", nonspd, "--Y", nonspd], capsys)
    assert code == 2
    code, _, _ = _run(["dsr", "--X", nonspd, "--Y", nonspd, "--k", "0"], capsys)
    assert code == 2


def test_cap_exceeded_exit_3(tmp_path, capsys):
    X = _write(tmp_path, "x.json", np.diag(np.arange(1.0, 6.0)).tolist())
    code, _, err = _run(["dsr", "--X", X, "--Y", X, "--cap-p", "4"], capsys)
    assert code == 3 and "cap" in err
    import os
    from spdgeo.config import CAP_ENV_VAR
    assert CAP_ENV_VAR not in os.environ


def test_numerical_failure_code(tmp_path, capsys, monkeypatch):
    from spdgeo import errors
    import spdgeo.grassmann as g

    def boom(*a, **k):
        raise errors.NumericalFailure("forced")

    monkeypatch.setattr(g, "half_angle_check", boom)
    R = _write(tmp_path, "r.json", (-np.eye(2)).tolist())
    code, _, err = _run(["halfangle", "--R", R, "--R2", R], capsys)
    assert code == 4 and "numerical failure" in err


def test_reduce_and_halfangle(tmp_path, capsys):
    R = _write(tmp_path, "r.json", gr.phi(gr.example_plane_wp_prime(11)).tolist())
    code, out, _ = _run(["reduce", "--R", R], capsys)
    body = json.loads(out)
    assert code == 0 and body["reducible"] is False and body["sigma"] is None
    R4 = _write(tmp_path, "r4.json", np.diag([-1.0, -1, 1, 1]).tolist())
    code, out, _ = _run(["reduce", "--R", R4], capsys)
    body = json.loads(out)
    assert body["reducible"] is True and body["d_after"] < body["d_before"]
    code, out, _ = _run(["halfangle", "--R", R4, "--R2", R], capsys)
    assert code == 2  # different sizes
    code, out, _ = _run(["halfangle", "--R", R4, "--R2", R4], capsys)
    assert code == 0 and json.loads(out)["pass"] is True


def test_reduce_rejects_non_involution(tmp_path, capsys):
    R = _write(tmp_path, "r.json", np.eye(3).tolist())
    code, _, _ = _run(["reduce", "--R", R], capsys)
    assert code == 2


def test_fiber_and_classify(tmp_path, capsys):
    X = _write(tmp_path, "x.json", np.diag([1.0, 1.0, 2.0]).tolist())
    code, out, _ = _run(["fiber", "--X", X], capsys)
    body = json.loads(out)
    assert body["component_count"] == 6 and body["component_shape"] == [2, 1]
    A = _write(tmp_path, "a.json", np.diag([1.0, 2.0]).tolist())
    B = _write(tmp_path, "b.json", np.diag([2.0, 1.0]).tolist())
    code, out, _ = _run(["classify", "--X", A, "--Y", B, "--k", "0.25"], capsys)
    rep = json.loads(out)["report"]
    assert rep["type1"] is True and rep["type2"] is False


def test_grass_commands(tmp_path, capsys):
    W = _write(tmp_path, "w.json", {"basis": gr.example_plane_wp(12).basis.tolist()})
    code, out, _ = _run(["grass", "nearest", "--W", W], capsys)
    body = json.loads(out)
    assert code == 0 and body["d"] > math.pi / 2 and len(body["J"]) == 2
    Z = _write(tmp_path, "z.json", np.eye(12)[:, :2].tolist())
    code, out, _ = _run(["grass", "dist", "--W", W, "--Z", Z], capsys)
    assert code == 0 and json.loads(out)["m"] == 2
    code, out, _ = _run(["grass", "search", "--p", "5", "--samples", "5"], capsys)
    assert code == 0 and json.loads(out)["samples"] == 5
    code, _, _ = _run(["grass", "search"], capsys)
    assert code == 2


def test_verify_only(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, err = _run(["verify", "--only", "A4,A11", "--only", "9", "--out", str(out_path)], capsys)
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert [c["id"] for c in rep["checks"]] == ["A04", "A09", "A11"]
    assert rep["all_passed"] is True
    assert "A04 PASS" in err


def test_module_entry_point(tmp_path):
    X = _write(tmp_path, "x.json", np.diag([1.0, 3.0]).tolist())
    res = subprocess.run([sys.executable, "-m", "spdgeo", "fiber", "--X", X], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["component_count"] == 4
