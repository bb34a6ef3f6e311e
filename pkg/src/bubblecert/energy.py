"""The reduced energy F(xi, eps) at xi = 0: closed forms and quadrature.

Exact parts (coefficients, I, J) use :mod:`bubblecert.exact`; every closed
form has a quadrature counterpart that integrates the unreduced double
integral over ``[0, inf)^2`` without the scaling substitutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import RatPoly, Surd, as_fraction
from .moments import radial_blocks
from .quadrature import ABS_TOL, REL_TOL, quad_semi_infinite, radial_beta, sphere_area
from .weyl import WeylForm


class DimensionConstraintError(ValueError):
    pass


def c_n(n: int) -> Fraction:
    return Fraction(n - 2, 4 * (n - 1))


def _degree_of(f: RatPoly) -> int:
    if f.is_zero():
        raise ValueError("f must be nonzero")
    return f.degree


def _require_dimension(n: int, d: int) -> None:
    if not n > 4 * d + 6:
        raise DimensionConstraintError(f"need n > 4d + 6, got n={n}, d={d}")


def alpha_poly(n: int, f: RatPoly) -> RatPoly:
    fp = f.derivative()
    s = RatPoly([0, 1])
    return (n + 1) * f * f + 4 * s * f * fp + 2 * s * s * fp * fp


def alpha_coeffs(n: int, f: RatPoly) -> list:
    """Coefficients of (n+1) f^2 + 4 s f f' + 2 s^2 f'^2, length 2 deg f + 1."""
    d = _degree_of(f)
    p = alpha_poly(n, f)
    return [p.coeff(q) for q in range(2 * d + 1)]


def beta_coeffs(f: RatPoly) -> list:
    """Coefficients of 2 f f' + s f'^2, length 2 deg f (empty for constant f)."""
    d = _degree_of(f)
    fp = f.derivative()
    p = 2 * f * fp + RatPoly([0, 1]) * fp * fp
    return [p.coeff(q) for q in range(2 * d)]


def _ratio_product(start_num: int, start_den: int, q: int) -> Fraction:
    out = Fraction(1)
    for j in range(q + 1):
        out *= Fraction(start_num + 2 * j, start_den - 2 * j)
    return out


def I_poly(n: int, f: RatPoly) -> RatPoly:
    """I(s) = sum_q alpha_q/(n-6-2q) prod_{j<=q} (n-1+2j)/(n-5-2j) s^{q+2}."""
    d = _degree_of(f)
    _require_dimension(n, d)
    out = [Fraction(0)] * 2
    for q, a in enumerate(alpha_coeffs(n, f)):
        out.append(a * (Fraction(1, n - 6 - 2 * q) * _ratio_product(n - 1, n - 5, q)))
    return RatPoly(out)


def J_poly(n: int, f: RatPoly) -> RatPoly:
    """J(s) = sum_q beta_q s^{q+2}/(n-6-2q) prod_{j<=q} (n+3+2j)/(n-5-2j)."""
    d = _degree_of(f)
    _require_dimension(n, d)
    out = [Fraction(0)] * 2
    for q, b in enumerate(beta_coeffs(f)):
        out.append(b * (Fraction(1, n - 6 - 2 * q) * _ratio_product(n + 3, n - 5, q)))
    return RatPoly(out)


def K_poly(n: int, f: RatPoly) -> RatPoly:
    """Profile of the f'^2 term of the xi-Hessian.

    int int eps^{n-2} r^{n+4} f'(r^2)^2 ((eps+t)^2+r^2)^{1-n} dr dt
        = K(eps^2) * int_0^inf r^{n+4} (1+r^2)^{1-n} dr
    with K(s) = sum_q c_q s^{q+3}/(n-8-2q) prod_{j<q} (n+5+2j)/(n-9-2j),
    c_q the coefficients of f'^2.
    """
    d = _degree_of(f)
    _require_dimension(n, d)
    fp = f.derivative()
    c = (fp * fp).coeffs
    out = [Fraction(0)] * 3
    for q, cq in enumerate(c):
        out.append(cq * (Fraction(1, n - 8 - 2 * q) * _ratio_product(n + 5, n - 9, q - 1)))
    return RatPoly(out)


def beta_n(n: int, W: WeylForm) -> float:
    """c_n sigma_{n-2} |W|^2 / (4 (n-1)(n+1))."""
    return float(c_n(n) * W.norm_sq / (4 * (n - 1) * (n + 1))) * float(sphere_area(n - 2))


# -- F(0, eps) --------------------------------------------------------------


@dataclass
class F0Result:
    value: float
    beta_n: float
    I_value: float
    radial_integral: float
    I_exact: object = None


def _eps_exact(eps):
    if isinstance(eps, (int, Fraction)):
        return as_fraction(eps)
    return None


def F0_closed(n: int, W: WeylForm, f: RatPoly, eps) -> F0Result:
    """F(0, eps) = -beta_n * I(eps^2) * int_0^inf r^{n-2}(1+r^2)^{2-n} dr."""
    I = I_poly(n, f)
    e = _eps_exact(eps)
    I_exact = I(e * e) if e is not None else None
    I_val = float(I_exact) if I_exact is not None else I(float(eps) ** 2)
    bn = beta_n(n, W)
    radial = float(radial_beta(n - 2, n - 2))
    return F0Result(-bn * I_val * radial, bn, I_val, radial, I_exact)


def _log_kernel(n: int, eps: float, power: int, denom_exp: int):
    """log of eps^{n-2} r^power ((eps+t)^2 + r^2)^{-denom_exp}."""
    log_eps = (n - 2) * math.log(eps)

    def k(r, t):
        with np.errstate(divide="ignore"):
            return log_eps + power * np.log(r) - denom_exp * np.log((eps + t) ** 2 + r * r)

    return k


def double_radial_integral(
    n: int,
    eps: float,
    profile: RatPoly,
    power: int,
    denom_exp: int,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> float:
    """int_0^inf int_0^inf eps^{n-2} r^power P(r^2) ((eps+t)^2+r^2)^{-denom_exp} dr dt.

    Nested adaptive quadrature, inner in r, outer in t; P evaluated in float.
    """
    coeffs = np.array([float(c) for c in profile.coeffs] or [0.0])
    if not np.any(coeffs):
        return 0.0
    logk = _log_kernel(n, eps, power, denom_exp)

    def inner(t: float) -> float:
        def g(r):
            return np.polynomial.polynomial.polyval(r * r, coeffs) * np.exp(logk(r, t))

        val, _ = quad_semi_infinite(g, 0.0, eps + t, abs_tol=abs_tol * 1e-3, rel_tol=rel_tol * 1e-2)
        return val

    def outer(ts):
        return np.array([inner(float(t)) for t in np.atleast_1d(ts)])

    val, _ = quad_semi_infinite(outer, 0.0, eps, abs_tol=abs_tol, rel_tol=rel_tol)
    return val


def F0_quadrature(n: int, W: WeylForm, f: RatPoly, eps, rel_tol: float = REL_TOL) -> float:
    """-(c_n sigma |W|^2 / (4(n-1)(n+1))) * int int r^n P_tr(r^2) eps^{n-2}((eps+t)^2+r^2)^{2-n}."""
    if f.is_zero():
        return 0.0
    _require_dimension(n, _degree_of(f))
    _, _, pt = radial_blocks(n, f)
    integral = double_radial_integral(n, float(eps), pt, n, n - 2, abs_tol=0.0, rel_tol=rel_tol)
    return -beta_n(n, W) * integral


# -- second eps-derivative --------------------------------------------------


@dataclass
class EpsCurvature:
    I_first: object
    I_second: object
    sign: int
    value: float


class PreconditionError(ValueError):
    pass


def second_eps_derivative(n: int, W: WeylForm, f: RatPoly) -> EpsCurvature:
    """d^2/deps^2 F(0, eps) at eps = 1, requiring I'(1) = 0 exactly.

    Equals -beta_n C_r (2 I'(1) + 4 I''(1)) = -4 beta_n C_r I''(1); its sign is
    the opposite of the exact sign of I''(1).
    """
    I = I_poly(n, f)
    i1 = I.derivative()(1)
    if _sign(i1) != 0:
        raise PreconditionError(f"I'(1) = {i1} is not zero")
    i2 = I.derivative(2)(1)
    radial = float(radial_beta(n - 2, n - 2))
    value = -4.0 * beta_n(n, W) * radial * float(i2)
    return EpsCurvature(i1, i2, -_sign(i2), value)


def _sign(x) -> int:
    if isinstance(x, Surd):
        return x.sign()
    x = as_fraction(x)
    return (x > 0) - (x < 0)


# -- xi-Hessian -------------------------------------------------------------


@dataclass
class HessianCoefficients:
    """H_pq = gram_coeff * G_pq + delta_coeff * |W|^2 delta_pq."""

    gram_coeff: float
    delta_coeff: float

    def matrix(self, W: WeylForm) -> np.ndarray:
        return self.gram_coeff * W.gram_float + self.delta_coeff * float(W.norm_sq) * np.eye(W.m)


def hessian_coefficients_closed(n: int, f: RatPoly, eps) -> HessianCoefficients:
    """Gram and delta coefficients of the xi-Hessian from the reduced formula."""
    sigma = float(sphere_area(n - 2))
    J, K = J_poly(n, f), K_poly(n, f)
    e = _eps_exact(eps)
    s = e * e if e is not None else float(eps) ** 2
    Jv = float(J(s))
    Kv = float(K(s))
    j_int = Jv * float(radial_beta(n + 2, n))
    k_int = Kv * float(radial_beta(n + 4, n - 1))
    pref = (n - 2) ** 2 * sigma
    gram = -2.0 * pref / ((n - 1) * (n + 1) * (n + 3)) * j_int
    delta = -pref / (2.0 * (n - 1) * (n + 1) * (n + 3)) * j_int + pref / (4.0 * (n - 1) ** 2 * (n + 1)) * k_int
    return HessianCoefficients(gram, delta)


def hessian_coefficients_quadrature(n: int, f: RatPoly, eps, rel_tol: float = REL_TOL) -> HessianCoefficients:
    """Gram and delta coefficients from the three unreduced half-space integrals.

    Term 1: (n-2)^2 int u-kernel^n Hbar_pl Hbar_ql
    Term 2: -(n-2)^2/4 int kernel^n (d Hbar)^2 x^p x^q
    Term 3: (n-2)^2/(8(n-1)) delta_pq int kernel^{n-1} (d Hbar)^2
    each reduced over spheres by the exact moment identities and integrated
    over (r, t) numerically.
    """
    _require_dimension(n, _degree_of(f))
    sigma = float(sphere_area(n - 2))
    eps = float(eps)
    pg, pd, pt = radial_blocks(n, f)
    ff = f * f

    def D(profile, power, denom_exp):
        return double_radial_integral(n, eps, profile, power, denom_exp, abs_tol=0.0, rel_tol=rel_tol)

    c2 = (n - 2) ** 2
    t1_gram = c2 * sigma / (2.0 * (n - 1) * (n + 1)) * D(ff, n + 2, n)
    t2_gram = -c2 / 4.0 * 2.0 * sigma / ((n - 1) * (n + 1) * (n + 3)) * D(pg, n + 2, n)
    t2_delta = -c2 / 4.0 * sigma / ((n - 1) * (n + 1) * (n + 3)) * D(pd, n + 2, n)
    t3_delta = c2 / (8.0 * (n - 1)) * sigma / ((n - 1) * (n + 1)) * D(pt, n, n - 1)
    return HessianCoefficients(t1_gram + t2_gram, t2_delta + t3_delta)


def hessian_xi(n: int, W: WeylForm, f: RatPoly, eps, method: str = "closed") -> np.ndarray:
    if W.m != n - 1:
        raise ValueError("W must live on n-1 tangential indices")
    if method == "closed":
        coeffs = hessian_coefficients_closed(n, f, eps)
    elif method == "quadrature":
        coeffs = hessian_coefficients_quadrature(n, f, eps)
    else:
        raise ValueError(f"unknown method {method!r}")
    return coeffs.matrix(W)


def cholesky_margin(M: np.ndarray) -> float:
    """Smallest eigenvalue over trace; Cholesky must also succeed."""
    np.linalg.cholesky(M)
    return float(np.linalg.eigvalsh(M).min() / np.trace(M))
