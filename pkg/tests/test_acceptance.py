"""The nine acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and by running this file directly.
"""

import json
import time
from fractions import Fraction

import numpy as np
import pytest

from bubblecert import certificates as C
from bubblecert import energy as E
from bubblecert import moments as M
from bubblecert.cli import main
from bubblecert.exact import quadratic_discriminant
from bubblecert.suites import bubble_suite, curvature_suite, mc_rows
from bubblecert.weyl import weyl_from_seed

SEED = 0
RESULTS: dict[int, tuple[bool, str]] = {}


def record(num: int, ok: bool, detail: str) -> None:
    RESULTS[num] = (bool(ok), detail)
    assert ok, f"criterion {num}: {detail}"


def test_criterion_1_constant_table():
    t0 = time.perf_counter()
    F = Fraction
    qL, q = C.q_L(), C.q_poly()
    u1, u2 = C.q_U(C.ALPHA_B1), C.q_U(C.ALPHA_B2)
    g = C.gamma_poly(C.ALPHA_B1)
    pairs = [
        (qL(9), F(32)),
        (qL.derivative()(9), F(118)),
        (q(53), F(105696)),
        (q.derivative()(53), F(110340)),
        (u1(70), F(287074, 15)),
        (u1.derivative()(70), F(178522037, 7200)),
        (u1.derivative(2)(70), F(10910017, 4800)),
        (g(70), F(-118392)),
        (g.derivative()(70), F(-744953, 5)),
        (g.derivative(2)(70), F(-136479, 10)),
        (u2(53), F(169857, 28)),
        (u2.derivative()(53), F(20672955, 1568)),
        (u2.derivative(2)(53), F(5182395, 3136)),
        (C.ALPHA_B2, F(1, 8) * (9 - F(36, 56**2))),
    ]
    exact = sum(a == b for a, b in pairs)
    elapsed = time.perf_counter() - t0
    record(1, exact == len(pairs) and elapsed < 1.0, f"{exact}/{len(pairs)} constants exact, {elapsed:.3f} s")


def test_criterion_2_mid_regime():
    t0 = time.perf_counter()
    bad = []
    for n in range(25, 53):
        c = C.certify(n)
        r = C.rn_poly(n)
        ok = (
            quadratic_discriminant(r) > 0
            and r(c.a0) == 0
            and c.checks["I'(1)=0"]["ok"]
            and c.checks["I''(1)<0"]["ok"]
            and c.checks["J(1)<0"]["ok"]
            and c.checks["I''(1)_surd_form"]["ok"]
            and c.checks["J(1)_surd_form"]["ok"]
            and c.valid
        )
        if not ok:
            bad.append(n)
    elapsed = time.perf_counter() - t0
    record(2, not bad and elapsed < 10.0, f"28 dimensions, failures {bad}, {elapsed:.2f} s")


def test_criterion_3_high_regime():
    t0 = time.perf_counter()
    bad = []
    for n in range(53, 201):
        c = C.certify(n)
        ok = c.checks["p_n(a0)=0"]["ok"] and c.checks["I'(1)=0"]["ok"] and c.checks["I''(1)<0"]["ok"] and c.checks["J(1)<0"]["ok"]
        if not (ok and c.valid):
            bad.append(n)
    b1, b2 = C.appendix_b1_suite(200), C.appendix_b2_suite(200)
    elapsed = time.perf_counter() - t0
    ok = not bad and b1.ok and b2.ok and elapsed < 30.0
    record(3, ok, f"148 dimensions, failures {bad}, B-1 {b1.ok}, B-2 {b2.ok}, {elapsed:.2f} s")


def test_criterion_4_energy_closed_vs_quadrature():
    t0 = time.perf_counter()
    worst, negative = 0.0, True
    for n in (53, 25):
        W = weyl_from_seed(n - 1, SEED)
        f = C.f_for(n)
        for eps in (Fraction(1, 2), Fraction(1), Fraction(2)):
            closed = E.F0_closed(n, W, f, eps).value
            quad = E.F0_quadrature(n, W, f, float(eps))
            worst = max(worst, abs(quad - closed) / abs(closed))
        negative = negative and E.F0_closed(n, W, f, 1).value < 0
    elapsed = time.perf_counter() - t0
    record(4, worst <= 1e-8 and negative and elapsed < 60.0, f"max rel {worst:.1e}, F(0,1) < 0: {negative}, {elapsed:.1f} s")


def test_criterion_5_hessian():
    parts = []
    ok = True
    for n in (25, 53):
        W = weyl_from_seed(n - 1, SEED)
        f = C.f_for(n)
        hc = E.hessian_xi(n, W, f, 1, "closed")
        hq = E.hessian_xi(n, W, f, 1, "quadrature")
        mask = hc != 0
        rel = float(np.max(np.abs(hc - hq)[mask] / np.abs(hc)[mask]))
        zeros_ok = bool(np.all(np.abs(hq[~mask]) <= 1e-7 * np.abs(hc).max()))
        sym = bool(np.array_equal(hc, hc.T))
        try:
            margin = E.cholesky_margin(hc)
        except np.linalg.LinAlgError:
            margin = float("-inf")
        ok = ok and rel <= 1e-7 and zeros_ok and sym and margin >= 1e-10
        parts.append(f"n={n}: entrywise rel {rel:.1e}, symmetric {sym}, margin {margin:.3g}")
    record(5, ok, "; ".join(parts))


def test_criterion_6_sphere_moments():
    rows = mc_rows(SEED, 10**6, 4.0, count=20)
    mc_ok = sum(r.ok for r in rows)
    rng = np.random.Generator(np.random.Philox(key=[SEED, 77]))
    red_ok = 0
    for i in range(20):
        k = 2 + i % 5
        m = 3 + i % 4
        p = M.random_homogeneous_poly(k, m, rng)
        if not p or M.homogeneous_reduction_check(p, m, Fraction(5, 3)).holds:
            red_ok += 1
    rec_cases = ((0, 2), (1, 3), (Fraction(1, 2), 4), (23, 23), (51, 51), (10, 12))
    rec_ok = sum(M.beta_recurrence_check(a, m).holds(1e-10) for a, m in rec_cases)
    ok = mc_ok == 20 and red_ok == 20 and rec_ok == len(rec_cases)
    record(6, ok, f"MC {mc_ok}/20 within 4 se, reduction {red_ok}/20 exact, recurrence {rec_ok}/{len(rec_cases)}")


def test_criterion_7_bubble():
    rows = bubble_suite(SEED, points=1000)
    bad = [r.check for r in rows if not r.ok]
    record(7, not bad, f"{len(rows) - len(bad)}/{len(rows)} checks pass" + (f", failing {bad}" if bad else ""))


def test_criterion_8_curvature_order():
    rows = curvature_suite(SEED, points=20)
    ratios = [float(r.computed) for r in rows]
    ok = len(rows) == 20 and all(r.ok for r in rows)
    record(8, ok, f"20 points, min ratio {min(ratios):.3f}")


def test_criterion_9_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        code = main(["certify", "--n-min", "25", "--n-max", "200", "--seed", str(SEED), "--out", str(path)])
        outs.append((code, path.read_bytes()))
    same = outs[0][1] == outs[1][1]
    ok = same and outs[0][0] == 0 and outs[1][0] == 0 and len(json.loads(outs[0][1])) == 176
    record(9, ok, f"byte-identical: {same}, {len(outs[0][1])} bytes")


def summary_lines() -> list[str]:
    lines = []
    for num in range(1, 10):
        if num in RESULTS:
            ok, detail = RESULTS[num]
            lines.append(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            lines.append(f"criterion {num}: FAIL  (did not complete)")
    return lines


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
