import math

import numpy as np
import pytest

from bubblecert import bubble as B


def rand_params(rng, n):
    return B.BubbleParams(tuple(rng.normal(size=n - 1)), float(rng.uniform(0.3, 2.0)))


def rand_points(rng, n, k=50):
    x = rng.normal(size=(k, n)) * 1.5
    x[:, -1] = np.abs(x[:, -1])
    return x


def test_params_validation():
    with pytest.raises(ValueError):
        B.BubbleParams((0.0, 0.0), 0.0)
    p = B.BubbleParams([1, 2], 1)
    assert p.n == 3 and p.xi == (1.0, 2.0)


def test_u_examples():
    for n in (3, 5, 25):
        p = B.BubbleParams((0.0,) * (n - 1), 1.0)
        x = np.zeros(n)
        assert B.u_eval(p, x) == 1.0
        x[-1] = 1.0
        assert B.u_eval(p, x) == pytest.approx(0.25 ** ((n - 2) / 2), rel=1e-15)


def test_u_scaling_and_translation():
    rng = np.random.default_rng(0)
    for n in (3, 6, 25):
        p = rand_params(rng, n)
        x = rand_points(rng, n)
        lam = rng.uniform(0.2, 5.0)
        v = np.append(rng.normal(size=n - 1), 0.0)
        q = B.BubbleParams(tuple(lam * p.xi_array + v[:-1]), lam * p.eps)
        lhs = B.u_eval(q, lam * x + v)
        rhs = lam ** (-(n - 2) / 2) * B.u_eval(p, x)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    n = 5
    p = rand_params(rng, n)
    x = rand_points(rng, n, 5)
    x[:, -1] += 0.1
    h = 1e-5
    grad = B.u_gradient(p, x)
    hess = B.u_hessian(p, x)
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        num = (B.u_eval(p, x + e) - B.u_eval(p, x - e)) / (2 * h)
        assert np.allclose(num, grad[:, a], rtol=1e-7, atol=1e-12)
        num2 = (B.u_gradient(p, x + e) - B.u_gradient(p, x - e)) / (2 * h)
        assert np.allclose(num2, hess[:, a, :], rtol=1e-6, atol=1e-11)


def test_pde_residuals():
    rng = np.random.default_rng(2)
    for n in (3, 5, 25, 53):
        p = rand_params(rng, n)
        x = rand_points(rng, n, 1000)
        interior, _ = B.scaled_residuals(p, x)
        assert interior.max() <= 1e-10
        x[:, -1] = 0.0
        _, boundary = B.scaled_residuals(p, x)
        assert boundary.max() <= 1e-10


def test_residual_reflection_symmetry():
    rng = np.random.default_rng(3)
    n = 6
    p = rand_params(rng, n)
    x = rand_points(rng, n, 20)
    xr = x.copy()
    xr[:, :-1] = 2 * p.xi_array - x[:, :-1]
    assert np.allclose(B.u_eval(p, x), B.u_eval(p, xr), rtol=1e-14, atol=0)
    # residuals are rounding noise; they agree at the scale u/D of the terms they balance
    unit = B.u_eval(p, x) / B.denominator(p, x)
    for a, b in zip(B.u_pde_residual(p, x), B.u_pde_residual(p, xr)):
        assert np.all(np.abs(a - b) <= 1e-12 * unit)


def test_phi_zero_sets():
    n = 5
    p = B.BubbleParams((0.3, -0.2, 0.1, 0.5), 1.3)
    x = np.array([0.3 + 0.6, -0.2, 0.1 + 0.8, 0.5, 0.0])
    x[-1] = math.sqrt(p.eps**2 - 0.6**2 - 0.8**2)
    assert abs(B.phi_eval(p, n, x)) < 1e-16
    y = np.append(p.xi_array, 0.7)
    for a in range(1, n):
        assert B.phi_eval(p, a, y) == 0.0
    with pytest.raises(ValueError):
        B.phi_eval(p, 0, x)


def test_phi_parameter_derivative_identities():
    rng = np.random.default_rng(4)
    n = 6
    p = rand_params(rng, n)
    x = rand_points(rng, n, 20)
    D = B.denominator(p, x)
    h = 1e-6
    c = 2 * p.eps**2 / (n - 2)
    up = B.u_eval(B.BubbleParams(p.xi, p.eps + h), x)
    dn = B.u_eval(B.BubbleParams(p.xi, p.eps - h), x)
    fd_eps = (up - dn) / (2 * h)
    scale = B.u_eval(p, x) * p.eps
    assert np.max(np.abs(B.phi_eval(p, n, x) * D + c * fd_eps) / scale) < 1e-7
    for k in range(n - 1):
        e = np.zeros(n - 1)
        e[k] = h
        up = B.u_eval(B.BubbleParams(tuple(p.xi_array + e), p.eps), x)
        dn = B.u_eval(B.BubbleParams(tuple(p.xi_array - e), p.eps), x)
        fd = (up - dn) / (2 * h)
        assert np.max(np.abs(B.phi_eval(p, k + 1, x) * D - c * fd) / scale) < 1e-7
        assert np.allclose(B.du_dxi(p, x)[:, k], fd, rtol=1e-6, atol=1e-12)
    assert np.allclose(B.du_deps(p, x), fd_eps, rtol=1e-6, atol=1e-12)


def test_phi_norm_parameter_independent():
    for n in (3, 5, 25):
        p0 = B.BubbleParams((0.0,) * (n - 1), 1.0)
        p1 = B.BubbleParams((1.0,) + (0.0,) * (n - 2), 2.0)
        for a in (1, n):
            assert B.phi_boundary_norm(p1, a) == pytest.approx(B.phi_boundary_norm(p0, a), rel=1e-8)


def test_boundary_mass():
    m3 = B.boundary_mass(3)
    assert m3["value"] == pytest.approx(math.pi, rel=1e-15)
    p0 = B.BubbleParams((0.0,) * 24, 1.0)
    ph = B.BubbleParams((0.0,) * 24, 0.5)
    assert B.boundary_mass_quadrature(p0) == pytest.approx(B.boundary_mass_quadrature(ph), rel=1e-9)
    assert B.boundary_mass_quadrature(p0) == pytest.approx(B.boundary_mass(25)["value"], rel=1e-9)
    with pytest.raises(ValueError):
        B.boundary_mass(2)


def test_boundary_mass_quotient_n3():
    # integral pi gives quotient (n-2) pi^{1/(n-1)} = sqrt(pi)
    assert B.boundary_mass(3)["quotient"] == pytest.approx(math.sqrt(math.pi), rel=1e-15)


def test_conformal_map_lands_in_ball():
    rng = np.random.default_rng(5)
    for n in (3, 7):
        p = rand_params(rng, n)
        x = rand_points(rng, n, 500)
        z = B.ball_coordinates(p, x)
        assert np.all(np.linalg.norm(z, axis=1) <= 0.5 + 1e-12)
        xb = x.copy()
        xb[:, -1] = 0.0
        assert np.allclose(np.linalg.norm(B.ball_coordinates(p, xb), axis=1), 0.5, atol=1e-12)


def test_conformal_map_special_points():
    n = 4
    p = B.BubbleParams((0.2, -0.4, 1.0), 0.7)
    top = B.conformal_map(p, np.append(p.xi_array, 0.0))
    assert np.allclose(top, np.zeros(n), atol=1e-15)
    ray = np.array([1.0, 2.0, -1.0, 3.0])
    far = B.conformal_map(p, 1e9 * ray)
    assert np.allclose(far, np.append(np.zeros(n - 1), -1.0), atol=1e-8)


def test_conformal_map_injective_on_sample():
    rng = np.random.default_rng(6)
    n = 4
    p = rand_params(rng, n)
    x = rand_points(rng, n, 10**4)
    z = B.conformal_map(p, x)
    zs = np.round(z, 12)
    assert len(np.unique(zs, axis=0)) == len(np.unique(np.round(x, 12), axis=0))


def test_pullback_and_jacobian():
    rng = np.random.default_rng(7)
    for n in (3, 5, 25):
        p = rand_params(rng, n)
        for x in rand_points(rng, n, 20):
            J = B.conformal_jacobian(p, x)
            assert np.allclose(B.numerical_jacobian(p, x), J, rtol=0, atol=1e-7 * np.abs(J).max())
            assert B.pullback_defect(p, x) <= 1e-8
            assert B.pullback_defect(p, x, J) <= 1e-12


def test_ball_coordinate_identities():
    rng = np.random.default_rng(8)
    for n in (3, 6, 25):
        p = rand_params(rng, n)
        x = rand_points(rng, n, 100)
        z = B.ball_coordinates(p, x)
        for a in range(1, n + 1):
            assert np.allclose(z[:, a - 1], B.z_identity_rhs(p, a, x), rtol=1e-10, atol=1e-12)
            assert np.allclose(z[:, a - 1], B.z_identity_param_form(p, a, x), rtol=1e-10, atol=1e-12)
