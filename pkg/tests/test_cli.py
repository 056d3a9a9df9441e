"""Command-line interface: subcommands, config plumbing, exit codes.

Everything calls main() in-process with small truncations so the whole file
stays fast; one subprocess test confirms the installed entry point works.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from wfspectral import cli, model
from wfspectral.model import ModelParams


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_spectrum_neutral_matches_eigenvalue_table(tmp_path):
    code = run(tmp_path, "spectrum", "--set", "truncation=6")
    assert code == 0
    header, rows = read_csv(tmp_path / "spectrum_eigenvalues.csv")
    assert header == ["n", "Lambda", "norm"]
    assert len(rows) == 28
    p = ModelParams([0.01, 0.02, 0.03], np.zeros((3, 3)))
    got = sorted(float(r[1]) for r in rows)
    want = sorted(model.neutral_eigenvalue(l, p)
                  for l in range(7) for _ in range(l + 1))
    assert np.allclose(got, want, atol=1e-10)
    meta = json.loads((tmp_path / "spectrum_meta.json").read_text())
    assert meta["config"]["truncation"] == 6
    assert meta["size"] == 28
    assert len(meta["decomposition_hash"]) == 64


def test_spectrum_selected_distinct_eigenvalues(tmp_path, sigma_1):
    code = run(tmp_path, "spectrum",
               "--set", "truncation=24",
               "--set", f"model.sigma={json.dumps(sigma_1.tolist())}")
    assert code == 0
    _, rows = read_csv(tmp_path / "spectrum_eigenvalues.csv")
    lam = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(lam[:36]) > 1e-9)


def test_reruns_are_byte_identical(tmp_path, sigma_1):
    a = tmp_path / "a"
    b = tmp_path / "b"
    argv = ["spectrum", "--set", "truncation=10",
            "--set", f"model.sigma={json.dumps(sigma_1.tolist())}"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    for name in ("spectrum_eigenvalues.csv", "spectrum_coefficients.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_density_grids(tmp_path):
    code = run(tmp_path, "density",
               "--set", "truncation=10",
               "--set", "times=[0.5,1.0]",
               "--set", "grid_resolution=8",
               "--set", "clip_negative=true")
    assert code == 0
    for name in ("density_t0.5.csv", "density_t1.csv"):
        header, rows = read_csv(tmp_path / name)
        assert header == ["y_1", "y_2", "p"]
        assert len(rows) == sum(8 - i - 1 for i in range(8))
        vals = np.array([float(r[2]) for r in rows])
        assert np.all(np.isfinite(vals))
        assert np.all(vals >= 0.0)
    meta = json.loads((tmp_path / "density_meta.json").read_text())
    assert meta["config"]["clip_negative"] is True
    assert len(meta["outputs"]) == 2


def test_density_csv_line_endings_and_precision(tmp_path):
    run(tmp_path, "density", "--set", "truncation=8",
        "--set", "times=[0.5]", "--set", "grid_resolution=5")
    raw = (tmp_path / "density_t0.5.csv").read_bytes()
    assert b"\r" not in raw
    _, rows = read_csv(tmp_path / "density_t0.5.csv")
    # 17 significant digits survive a float round trip
    for r in rows[:3]:
        assert format(float(r[2]), ".17g") == r[2]


def test_normconst_closed_form(tmp_path):
    code = run(tmp_path, "normconst",
               "--set", "truncation=6",
               "--set", "model.theta=[0.5,0.5,1.0]")
    assert code == 0
    doc = json.loads((tmp_path / "normconst.json").read_text())
    assert doc["C_stat"] == pytest.approx(math.pi, rel=1e-8)


def test_converge_table(tmp_path):
    code = run(tmp_path, "converge",
               "--set", "converge.D_list=[2,4]",
               "--set", "converge.n_list=[0,1]",
               "--set", "converge.track=[[1,[0,1]]]")
    assert code == 0
    header, rows = read_csv(tmp_path / "converge.csv")
    assert header == ["D", "kind", "n", "m_tuple", "value"]
    p = ModelParams([0.01, 0.02, 0.03], np.zeros((3, 3)))
    lam_rows = [r for r in rows if r[1] == "Lambda"]
    assert len(lam_rows) == 4
    for r in lam_rows:
        want = model.neutral_eigenvalue(int(r[2]) and 1, p)
        assert float(r[4]) == pytest.approx(
            0.0 if r[2] == "0" else model.neutral_eigenvalue(1, p), abs=1e-10)
    u_rows = [r for r in rows if r[1] == "u"]
    assert len(u_rows) == 2
    assert u_rows[0][3] == "0;1"
    assert all(math.isfinite(float(r[4])) for r in u_rows)


def test_distance_curve(tmp_path, sigma_1):
    code = run(tmp_path, "distance",
               "--set", "truncation=12",
               "--set", "model.theta=[0.3,0.4,0.3]",
               "--set", f"model.sigma={json.dumps(sigma_1.tolist())}",
               "--set", "x=[0.3,0.3]",
               "--set", 'distance={"t_min":0.1,"t_max":2.0,"points":8}')
    assert code == 0
    header, rows = read_csv(tmp_path / "distance.csv")
    assert header == ["t", "d2"]
    assert len(rows) == 8
    d2 = [float(r[1]) for r in rows]
    assert all(a > b for a, b in zip(d2, d2[1:]))


def test_config_file_and_override_precedence(tmp_path):
    cfg_path = tmp_path / "job.json"
    cfg_path.write_text(json.dumps({"truncation": 8, "times": [0.3]}))
    code = cli.main(["spectrum", "--config", str(cfg_path),
                     "--set", "truncation=4", "--out", str(tmp_path)])
    assert code == 0
    meta = json.loads((tmp_path / "spectrum_meta.json").read_text())
    assert meta["config"]["truncation"] == 4      # --set beats the file
    assert meta["config"]["times"] == [0.3]       # file beats defaults


def test_malformed_sigma_exit_code_and_message(tmp_path, capsys):
    code = run(tmp_path, "spectrum",
               "--set", "model.sigma=[[0,1,2],[1,0,3],[9,3,0]]")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "parameter"
    assert "symmetric" in err["message"]


def test_zero_time_rejected(tmp_path, capsys):
    code = run(tmp_path, "density", "--set", "times=[0.0,0.5]",
               "--set", "truncation=6")
    assert code == 2
    assert "positive" in json.loads(capsys.readouterr().err)["message"]


def test_bad_config_document(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(bad),
                     "--out", str(tmp_path)]) == 2
    capsys.readouterr()
    missing = tmp_path / "nope.json"
    assert cli.main(["spectrum", "--config", str(missing),
                     "--out", str(tmp_path)]) == 2
    arr = tmp_path / "arr.json"
    arr.write_text("[1,2]")
    assert cli.main(["spectrum", "--config", str(arr),
                     "--out", str(tmp_path)]) == 2


def test_bad_set_spec(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--set", "truncation") == 2
    capsys.readouterr()
    assert run(tmp_path, "spectrum", "--set", "=4") == 2


def test_threads_flag(tmp_path):
    saved = {v: os.environ.get(v) for v in cli.THREAD_ENV_VARS}
    try:
        code = run(tmp_path, "spectrum", "--threads", "2",
                   "--set", "truncation=2")
        assert code == 0
        for var in cli.THREAD_ENV_VARS:
            assert os.environ[var] == "2"
    finally:
        for var, old in saved.items():
            if old is None:
                os.environ.pop(var, None)
            else:
                os.environ[var] = old


def test_threads_must_be_positive(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--threads", "0") == 2


def test_validate_q(tmp_path):
    code = run(tmp_path, "validate", "q")
    assert code == 0
    doc = json.loads((tmp_path / "validate_q.json").read_text())
    assert doc["report"]["passed"] is True
    assert doc["report"]["max_rel_defect"] <= 1e-10


def test_validate_neutral(tmp_path):
    code = run(tmp_path, "validate", "neutral",
               "--set", "model.theta=[0.3,0.4,0.3]")
    assert code == 0
    doc = json.loads((tmp_path / "validate_neutral.json").read_text())
    assert doc["report"]["eigenvalue_defect"] <= 1e-10
    assert doc["report"]["cross_path_rel"] <= 1e-6


def test_validate_orthogonality(tmp_path):
    code = run(tmp_path, "validate", "orthogonality",
               "--set", "model.theta=[0.3,0.4,0.3]",
               "--set", "quadrature_resolution=24")
    assert code == 0
    doc = json.loads((tmp_path / "validate_orthogonality.json").read_text())
    assert doc["report"]["passed"] is True


def test_installed_entry_point(tmp_path):
    proc = subprocess.run(
        ["wfspectral", "spectrum", "--set", "truncation=3",
         "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "spectrum_eigenvalues.csv").exists()
    assert "eigenpairs" in proc.stdout
