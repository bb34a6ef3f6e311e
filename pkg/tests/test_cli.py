import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from bubblecert.cli import UsageError, bump_log10_smallness, main, parse_grid, read_config
from bubblecert.exact import Surd


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_and_version():
    proc = subprocess.run([sys.executable, "-m", "bubblecert", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("certify", "crosscheck", "sample-metric"):
        assert cmd in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "bubblecert", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().startswith("bubblecert ")


def test_certify_mid_range(capsys):
    code, out, _ = run(capsys, "certify", "--n-min", "25", "--n-max", "52")
    assert code == 0
    certs = json.loads(out)
    assert len(certs) == 28 and all(c["valid"] and c["regime"] == "mid" for c in certs)


def test_certify_53_witness(capsys):
    code, out, _ = run(capsys, "certify", "--n-min", "53", "--n-max", "53")
    assert code == 0
    (cert,) = json.loads(out)
    check = cert["checks"]["I'(1)=0"]
    assert check["sign"] == "zero" and check["ok"]
    assert Surd.from_json(check["witness"]) == 0


def test_certify_unsupported(capsys):
    code, out, err = run(capsys, "certify", "--n-min", "24", "--n-max", "24")
    assert code == 1
    assert "unsupported dimension" in err
    assert json.loads(out)[0]["valid"] is False


def test_certify_usage_errors(capsys):
    assert run(capsys, "certify", "--n-min", "30", "--n-max", "29")[0] == 2
    assert run(capsys, "certify", "--n-min", "x")[0] == 2
    assert run(capsys, "certify", "--jobs", "0")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "certify", "--format", "xml")[0] == 2


def test_certify_csv_and_out_file(tmp_path, capsys):
    target = tmp_path / "c.csv"
    code, out, _ = run(capsys, "certify", "--n-min", "50", "--n-max", "55", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(target.read_text())))
    assert [int(r["n"]) for r in rows] == list(range(50, 56))
    assert all(r["valid"] == "True" and float(r["J(1)"]) < 0 for r in rows)


def test_certify_deterministic_with_jobs(capsys, monkeypatch):
    _, serial, _ = run(capsys, "certify", "--n-min", "25", "--n-max", "70")
    monkeypatch.setenv("BUBBLECERT_JOBS", "3")
    _, env_parallel, _ = run(capsys, "certify", "--n-min", "25", "--n-max", "70")
    assert serial == env_parallel


def test_crosscheck_appendix_b_table(capsys):
    code, out, err = run(capsys, "crosscheck", "--suite", "appendixB")
    assert code == 0
    assert "REFERENCE" in out
    lines = out.splitlines()
    for label, value in (("q_L(9)", "32"), ("q(53)", "105696"), ("gamma(70)", "-118392"), ("q_U(53)", "169857/28")):
        row = next(line for line in lines if line.split()[1] == label)
        assert value in row and row.rstrip().endswith("MATCH")
    assert "appendixB: PASS" in err


def test_crosscheck_moments_without_samples(capsys):
    code, out, _ = run(capsys, "crosscheck", "--suite", "moments", "--samples", "0")
    assert code == 0
    assert "SKIP" in out and "MC " not in out


def test_crosscheck_json_and_tolerance_override(capsys):
    code, out, _ = run(capsys, "crosscheck", "--suite", "bubble", "--json", "--tol", "residual=1e-30")
    rows = json.loads(out)
    assert code == 1
    assert any(r["status"] == "FAIL" and "residual" in r["check"] for r in rows)
    assert run(capsys, "crosscheck", "--tol", "bogus=1")[0] == 2


def test_crosscheck_energy_seed(capsys):
    code, out, _ = run(capsys, "crosscheck", "--suite", "energy", "--seed", "7", "--json")
    assert code == 0
    rows = json.loads(out)
    f0 = [r for r in rows if "closed vs quadrature" in r["check"] and r["check"].startswith("F(0,")]
    assert len(f0) == 6
    for r in f0:
        rel = float(r["computed"].split("rel ")[1].rstrip(")"))
        assert rel < 1e-8


def test_config_file_sets_tolerance(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# pinned tolerances\ntol.residual = 1e-30\nseed = 2\n")
    assert read_config(str(cfg)) == {"seed": "2", "tol": {"residual": 1e-30}}
    code, _, _ = run(capsys, "--config", str(cfg), "crosscheck", "--suite", "bubble")
    assert code == 1
    # a flag overrides the file
    code, _, _ = run(capsys, "--config", str(cfg), "crosscheck", "--suite", "bubble", "--tol", "residual=1e-10")
    assert code == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n")
    assert run(capsys, "--config", str(bad), "certify")[0] == 2


def test_parse_grid():
    pts = parse_grid("0:1:3,0.5:0.5:1", 4)
    assert pts.shape == (3, 4)
    assert np.array_equal(pts[:, 0], [0, 0.5, 1]) and np.all(pts[:, 1] == 0.5)
    for bad in ("0:1", "a:b:c", "0:1:0"):
        with pytest.raises(UsageError):
            parse_grid(bad, 4)
    with pytest.raises(UsageError):
        parse_grid("0:1:2," * 4 + "0:1:2", 4)


def test_sample_metric_outside_supports(capsys):
    code, out, _ = run(capsys, "sample-metric", "--n", "25", "--grid", "1:2:4", "--N0", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4
    for r in rows:
        assert r["bumps"] == ""
        for a in range(1, 26):
            for b in range(a, 26):
                assert float(r[f"g{a}_{b}"]) == (1.0 if a == b else 0.0)


def test_sample_metric_straddling_bump(capsys):
    # x_1 sweeps across the N = 3 bump centred at 1/3 with support radius 1/18
    code, out, _ = run(capsys, "sample-metric", "--n", "25", "--grid", "0.29:0.42:14,0.004:0.004:1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    seen = set()
    for r in rows:
        x1 = float(r["x1"])
        inside = np.hypot(x1 - 1 / 3, 0.004) < 1 / 18
        seen.add(inside)
        off = max(abs(float(r[f"g1_{b}"]) - (b == 1)) for b in range(1, 26))
        if inside:
            assert r["bumps"] == "3" and off > 0
            assert float(r["log10_smallness"]) == pytest.approx(bump_log10_smallness(25, 4, 3))
        else:
            assert r["bumps"] == "" and off == 0.0
    assert seen == {True, False}


def test_sample_metric_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for t in (a, b):
        assert run(capsys, "sample-metric", "--seed", "4", "--grid", "0.3:0.36:5,-0.01:0.01:3", "--out", str(t))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_sample_metric_errors(capsys):
    assert run(capsys, "sample-metric", "--grid", "0:1")[0] == 2
    assert run(capsys, "sample-metric", "--n", "20")[0] == 2
    assert run(capsys, "sample-metric", "--N0", "2")[0] == 2
    assert run(capsys, "sample-metric", "--n", "4", "--grid", "0:1:2,0:1:2,0:1:2,-1:0:2")[0] == 2


def test_bump_smallness_values():
    # mu = 1, lam = 2^-N, rho = 1/(2N^2): log10 of 2^{-N(n-4d-6)} (2N^2)^{n-2}
    n, d, N = 25, 4, 3
    expect = -N * (n - 4 * d - 6) * np.log10(2) + (n - 2) * np.log10(2 * N * N)
    assert bump_log10_smallness(n, d, N) == pytest.approx(expect, rel=1e-14)
