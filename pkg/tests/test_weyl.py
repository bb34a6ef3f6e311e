from fractions import Fraction

import numpy as np
import pytest

from bubblecert.exact import RatPoly
from bubblecert.weyl import (
    DimensionError,
    OutsideSupportError,
    PerturbationConfig,
    StencilError,
    WeylForm,
    active_bumps,
    bump_center,
    bump_support_radius,
    counterexample_metric_sample,
    describe_smallness,
    h_field,
    h_field_global,
    h_gradient,
    metric_exp,
    scalar_curvature_order_check,
    smallness_diagnostic,
    support_report,
    weyl_from_seed,
)


@pytest.fixture(scope="module")
def W24():
    return weyl_from_seed(24, 1)


def test_no_weyl_form_below_four():
    with pytest.raises(DimensionError):
        weyl_from_seed(3, 0)


def test_seeded_form_satisfies_invariants(W24):
    rep = W24.invariant_report()
    assert set(rep) == {"antisym_12", "antisym_34", "pair_swap", "bianchi", "trace_free", "nonzero"}
    assert all(rep.values())
    assert W24.norm_sq > 0


def test_seeded_form_is_deterministic(W24):
    again = weyl_from_seed(24, 1)
    assert np.array_equal(again.numer, W24.numer) and again.denom == W24.denom
    assert not np.array_equal(weyl_from_seed(24, 2).numer, W24.numer)


def test_json_roundtrip():
    W = weyl_from_seed(5, 3)
    back = WeylForm.from_json(W.to_json())
    assert np.array_equal(back.components, W.components)


def test_norm_is_pair_sum():
    W = weyl_from_seed(5, 4)
    w = W.components
    # sum over a, b, c, d of (W_acbd + W_adbc)^2
    direct = np.sum((np.einsum("acbd->abcd", w) + np.einsum("adbc->abcd", w)) ** 2)
    assert float(W.norm_sq) == pytest.approx(direct, rel=1e-13)


def test_gram_trace_relation():
    # trace of G_pq equals the paired squared norm
    W = weyl_from_seed(6, 0)
    assert sum(W.gram[p][p] for p in range(W.m)) == W.norm_sq


def test_permuted_form_is_still_weyl():
    W = weyl_from_seed(6, 5)
    Wp = W.permuted([3, 1, 5, 0, 2, 4])
    assert Wp.is_valid()
    assert Wp.norm_sq == W.norm_sq


def cfg_for(n=25, d=4, f=None, **kw):
    f = f if f is not None else RatPoly([1, Fraction(-3, 5), Fraction(1, 8), Fraction(-1, 125), Fraction(1, 10**4)])
    return PerturbationConfig(n=n, d=d, f=f, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg_for(n=22, d=4)
    with pytest.raises(ValueError):
        cfg_for(lam=Fraction(1, 2), rho=Fraction(1, 4))
    with pytest.raises(ValueError):
        cfg_for(mu=2)
    with pytest.raises(ValueError):
        PerturbationConfig(n=25, d=1, f=RatPoly([1, 1, 1]))


def test_h_field_vanishes_at_origin(W24):
    cfg = cfg_for()
    assert not np.any(h_field(W24, cfg, np.zeros(25)))


def test_h_field_outside_support(W24):
    cfg = cfg_for(lam=Fraction(1, 4), rho=Fraction(1, 2))
    x = np.zeros(25)
    x[0] = 0.75
    with pytest.raises(OutsideSupportError):
        h_field(W24, cfg, x)
    x[0] = 1.5
    assert not np.any(h_field_global(W24, cfg, x))


def test_h_field_symmetric_trace_free_tangential(W24):
    cfg = cfg_for()
    rng = np.random.default_rng(0)
    x = rng.normal(size=25) * 0.1
    h = h_field(W24, cfg, x)
    assert np.allclose(h, h.T, atol=1e-15)
    assert abs(np.trace(h)) < 1e-13 * np.abs(h).max()
    assert not np.any(h[-1]) and not np.any(h[:, -1])


def test_h_field_divergence_free():
    W = weyl_from_seed(10, 2)
    cfg = PerturbationConfig(n=11, d=1, f=RatPoly([3, -1]), lam=Fraction(1, 2), rho=1)
    rng = np.random.Generator(np.random.Philox(key=[0, 1]))
    step = 1e-5
    for _ in range(100):
        x = rng.normal(size=11)
        x *= rng.uniform(0.05, 0.9) / np.linalg.norm(x)
        div = np.zeros(11)
        for i in range(11):
            e = np.zeros(11)
            e[i] = step
            div += (h_field(W, cfg, x + e)[i] - h_field(W, cfg, x - e)[i]) / (2 * step)
        scale = np.abs(h_gradient(W, cfg, x)).max()
        assert np.abs(div).max() <= 1e-8 * max(scale, 1.0)


def test_h_gradient_matches_finite_differences():
    W = weyl_from_seed(10, 2)
    cfg = PerturbationConfig(n=11, d=1, f=RatPoly([3, -1]), lam=Fraction(1, 2), rho=1)
    x = np.linspace(-0.2, 0.3, 11)
    dh = h_gradient(W, cfg, x)
    step = 1e-6
    for c in range(11):
        e = np.zeros(11)
        e[c] = step
        num = (h_field(W, cfg, x + e) - h_field(W, cfg, x - e)) / (2 * step)
        assert np.allclose(num, dh[c], rtol=0, atol=1e-8 * np.abs(dh).max())


def test_metric_exp_examples():
    assert np.array_equal(metric_exp(np.zeros((4, 4))), np.eye(4))
    t = 0.37
    g = metric_exp(np.diag([t, -t, 0.0, 0.0]))
    assert np.allclose(g, np.diag([np.exp(t), np.exp(-t), 1, 1]), rtol=1e-14, atol=0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.normal(size=(6, 6))
        h = a + a.T
        h -= np.trace(h) / 6 * np.eye(6)
        h *= 0.1 / np.abs(h).max()
        assert abs(np.linalg.det(metric_exp(h)) - 1) < 1e-12
    with pytest.raises(ValueError):
        metric_exp(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_curvature_of_flat_metric_is_zero():
    W = weyl_from_seed(10, 0)
    cfg = PerturbationConfig(n=11, d=1, f=RatPoly([]), lam=Fraction(1, 2), rho=1)
    x = np.full(11, 0.15)
    rep = scalar_curvature_order_check(W, cfg, x)
    assert rep.residual_t == 0.0 and rep.curvature_t == 0.0 and rep.passed


def test_curvature_order_check_generic_point():
    W = weyl_from_seed(10, 0)
    cfg = PerturbationConfig(n=11, d=1, f=RatPoly([3, -1]), lam=Fraction(1, 2), rho=1)
    x = np.linspace(0.05, 0.2, 11)
    rep = scalar_curvature_order_check(W, cfg, x, t=1e-2)
    assert rep.ratio >= 6
    # the residual is cubic in t: residual / t^2 shrinks with t
    assert rep.residual_half / (0.5e-2) ** 2 < rep.residual_t / 1e-4


def test_curvature_order_check_rejects_boundary_points():
    W = weyl_from_seed(10, 0)
    cfg = PerturbationConfig(n=11, d=1, f=RatPoly([3, -1]), lam=Fraction(1, 2), rho=1)
    x = np.full(11, 0.1)
    x[-1] = 0.0
    with pytest.raises(StencilError):
        scalar_curvature_order_check(W, cfg, x)


def test_smallness_examples():
    one = PerturbationConfig(n=25, d=4, f=RatPoly([1]), mu=1, lam=1, rho=1)
    assert smallness_diagnostic(one) == 1
    big = PerturbationConfig(n=25, d=4, f=RatPoly([1]), mu=1, lam=Fraction(1, 100), rho=Fraction(1, 10))
    assert smallness_diagnostic(big) == 10**17
    assert "NOT small" in describe_smallness(smallness_diagnostic(big))
    ok = PerturbationConfig(n=25, d=4, f=RatPoly([1]), mu=1, lam=Fraction(1, 10**8), rho=Fraction(1, 10))
    val = smallness_diagnostic(ok)
    assert val == Fraction(1, 10)
    assert describe_smallness(val).startswith("1/10 (small")


def test_counterexample_metric_identity_cases():
    W = weyl_from_seed(24, 0)
    fc = [1.0, -0.6, 0.125, -0.008, 1e-4]
    far = np.zeros(25)
    far[0] = 1.2
    assert np.array_equal(counterexample_metric_sample(W, fc, 4, 3, far), np.eye(25))
    for N in (3, 4, 7):
        assert np.allclose(counterexample_metric_sample(W, fc, 4, 3, bump_center(N, 25)), np.eye(25), atol=0)


def test_counterexample_metric_inside_bump_is_not_identity():
    W = weyl_from_seed(24, 0)
    fc = [1.0, -0.6, 0.125, -0.008, 1e-4]
    x = bump_center(3, 25)
    x[1] = 0.2 * 2.0**-3
    x[2] = -0.1 * 2.0**-3
    g = counterexample_metric_sample(W, fc, 4, 3, x)
    assert not np.allclose(g, np.eye(25), atol=1e-30)
    assert active_bumps(x, 3) == [3]


def test_bump_supports():
    rep = support_report(3, 60)
    assert rep["non_consecutive_disjoint"]
    assert rep["max_simultaneous_terms"] <= 2
    assert rep["outer_radius"] < Fraction(1, 2)
    assert bump_support_radius(4) == Fraction(1, 32)
    rng = np.random.default_rng(3)
    for _ in range(2000):
        x = np.zeros(25)
        x[0] = rng.uniform(0.0, 0.4)
        x[1] = rng.uniform(-0.05, 0.05)
        assert len(active_bumps(x, 3)) <= 2
