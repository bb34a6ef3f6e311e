"""Even moments over round spheres and the tensor reductions built on them.

Sphere integrals are returned as exact rational multiples of
``sigma * r**power`` where ``sigma`` is the (symbolic) area of the unit
sphere; only :meth:`SphereValue.to_float` ever evaluates it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .exact import RatPoly, as_fraction
from .quadrature import beta_exact, beta_float, quad_semi_infinite, sphere_area
from .weyl import WeylForm


class DivergentIntegralError(ValueError):
    pass


@dataclass(frozen=True)
class SphereValue:
    """``coeff * sigma_{sphere_dim} * r**r_power``."""

    coeff: Fraction
    sphere_dim: int
    r_power: int

    def to_float(self, r: float = 1.0) -> float:
        return float(self.coeff) * float(sphere_area(self.sphere_dim)) * r**self.r_power


# -- moments ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _pairings(k: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All perfect matchings of range(k)."""

    def rec(items):
        if not items:
            yield ()
            return
        a = items[0]
        for i in range(1, len(items)):
            rest = items[1:i] + items[i + 1 :]
            for tail in rec(rest):
                yield ((a, items[i]),) + tail

    return tuple(rec(tuple(range(k))))


def moment_coefficient(indices: Sequence[int], m: int) -> Fraction:
    """Coefficient c with  int_{S^{m-1}} x_{i1}...x_{ik} = c * sigma_{m-1}.

    Sums delta products over pairings; orders 2, 4, 6 give the three classical
    formulas with prefactors 1/m, 1/(m(m+2)), 1/(m(m+2)(m+4)).  Odd orders
    vanish by antipodal symmetry.
    """
    k = len(indices)
    if k % 2:
        return Fraction(0)
    if k not in (0, 2, 4, 6):
        raise ValueError(f"moment order {k} not supported (max 6)")
    count = sum(
        all(indices[a] == indices[b] for a, b in pairing) for pairing in _pairings(k)
    )
    denom = 1
    for j in range(k // 2):
        denom *= m + 2 * j
    return Fraction(count, denom)


def moment(indices: Sequence[int], m: int, r=1) -> SphereValue:
    """Integral of x_{i1}...x_{ik} over the radius-r sphere S^{m-1} in R^m."""
    return SphereValue(moment_coefficient(indices, m), m - 1, m - 1 + len(indices))


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def monomial_moment(exponents: Sequence[int], m: int) -> Fraction:
    """int_{S^{m-1}} prod x_i^{e_i} / sigma_{m-1} for any exponents."""
    if any(e % 2 for e in exponents):
        return Fraction(0)
    num = 1
    for e in exponents:
        num *= _double_factorial(e - 1)
    total = sum(exponents)
    den = 1
    for j in range(total // 2):
        den *= m + 2 * j
    return Fraction(num, den)


# -- Monte-Carlo ------------------------------------------------------------


def sphere_samples(m: int, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """Uniform points on S^{m-1}: normalised Gaussians from a Philox stream."""
    rng = np.random.Generator(np.random.Philox(key=[seed, stream]))
    g = rng.standard_normal((count, m))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def mc_sphere_mean(
    func: Callable[[np.ndarray], np.ndarray],
    m: int,
    samples: int,
    seed: int,
    batch: int = 200_000,
) -> tuple[float, float]:
    """Mean of ``func`` over uniform points of S^{m-1} and its standard error."""
    total = 0.0
    total_sq = 0.0
    done = 0
    stream = 0
    while done < samples:
        k = min(batch, samples - done)
        vals = np.asarray(func(sphere_samples(m, k, seed, stream)), dtype=float)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += k
        stream += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / max(samples - 1, 1))


# -- homogeneous polynomials -----------------------------------------------

Poly = Mapping[tuple, Fraction]


def poly_sphere_integral(p: Poly, m: int) -> Fraction:
    """Exact integral of a polynomial over S^{m-1}, in units of sigma_{m-1}."""
    return sum((c * monomial_moment(e, m) for e, c in p.items()), Fraction(0))


def laplacian(p: Poly) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}
    for e, c in p.items():
        for i, k in enumerate(e):
            if k >= 2:
                e2 = list(e)
                e2[i] -= 2
                key = tuple(e2)
                out[key] = out.get(key, Fraction(0)) + c * k * (k - 1)
    return {k: v for k, v in out.items() if v != 0}


def random_homogeneous_poly(k: int, m: int, rng: np.random.Generator, terms: int = 12) -> dict[tuple, Fraction]:
    monos = [e for e in itertools.product(range(k + 1), repeat=m) if sum(e) == k]
    pick = rng.choice(len(monos), size=min(terms, len(monos)), replace=False)
    out = {}
    for i in pick:
        num = int(rng.integers(-9, 10))
        den = int(rng.integers(1, 8))
        if num:
            out[monos[i]] = Fraction(num, den)
    return out


@dataclass
class ReductionReport:
    degree: int
    lhs: Fraction
    rhs: Fraction
    r_power: int

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def homogeneous_reduction_check(p: Poly, m: int, r=1) -> ReductionReport:
    """int_{S_r} p_k = r^2/(k(k+m-2)) int_{S_r} Lap p_k, both sides exact.

    Values are coefficients of sigma_{m-1} r^{m-1+k}.
    """
    degrees = {sum(e) for e in p}
    if len(degrees) != 1:
        raise ValueError("polynomial is not homogeneous")
    k = degrees.pop()
    if k < 2:
        raise ValueError("degree must be at least 2")
    r = as_fraction(r)
    lhs = poly_sphere_integral(p, m) * r ** (m - 1 + k)
    rhs = r**2 * Fraction(1, k * (k + m - 2)) * poly_sphere_integral(laplacian(p), m) * r ** (m - 1 + k - 2)
    return ReductionReport(k, lhs, rhs, m - 1 + k)


# -- radial recurrence ------------------------------------------------------


@dataclass
class RecurrenceReport:
    alpha: float
    m: int
    lhs: float
    rhs: float
    beta_value: float | None
    rel_error: float

    def holds(self, tol: float = 1e-10) -> bool:
        ok = self.rel_error <= tol
        if self.beta_value is not None:
            ok = ok and abs(self.lhs - self.beta_value) <= tol * abs(self.beta_value)
        return ok


def _radial_integrand(power: float, m: int):
    def g(s):
        with np.errstate(divide="ignore"):
            return np.exp(power * np.log(s) - m * np.log1p(s * s))

    return g


def beta_recurrence_check(alpha, m: int) -> RecurrenceReport:
    """int s^a (1+s^2)^-m = (2m-a-3)/(a+1) int s^(a+2) (1+s^2)^-m, by quadrature.

    For half-integral (a+1)/2 the left side is also compared with
    B((a+1)/2, m-(a+1)/2)/2 evaluated exactly.
    """
    a = float(alpha)
    if not a > -1 or not a + 3 < 2 * m:
        raise DivergentIntegralError(f"need -1 < alpha and alpha + 3 < 2m (alpha={alpha}, m={m})")
    lhs, _ = quad_semi_infinite(_radial_integrand(a, m))
    upper, _ = quad_semi_infinite(_radial_integrand(a + 2, m))
    rhs = (2 * m - a - 3) / (a + 1) * upper
    beta_value = None
    fa = Fraction(alpha) if not isinstance(alpha, float) else Fraction(alpha).limit_denominator(1000)
    if (fa + 1).denominator in (1, 2) and float(fa) == a:
        p = (fa + 1) / 2
        if (2 * p).denominator == 1 and (2 * (m - p)).denominator == 1:
            beta_value = float(beta_exact(p, m - p)) / 2
    if beta_value is None:
        beta_value = 0.5 * beta_float((a + 1) / 2, m - (a + 1) / 2)
    rel = abs(lhs - rhs) / abs(lhs)
    return RecurrenceReport(a, m, lhs, rhs, beta_value, rel)


# -- tensor reductions ------------------------------------------------------


def _delta(p: int, q: int) -> int:
    return 1 if p == q else 0


def dH_sq_moment(W: WeylForm, p: int, q: int) -> SphereValue:
    """int_{S_r^{n-2}} (d_l H_ij)^2 x^p x^q, with n = W.m + 1.

    = sigma r^{n+2} (2 G_pq + |W|^2 delta_pq) / ((n-1)(n+1)).
    """
    n = W.m + 1
    c = (2 * W.gram[p][q] + W.norm_sq * _delta(p, q)) / ((n - 1) * (n + 1))
    return SphereValue(c, n - 2, n + 2)


def H_sq_moment(W: WeylForm, p: int, q: int) -> SphereValue:
    """int_{S_r^{n-2}} (H_ij)^2 x^p x^q = sigma r^{n+4} (2G_pq + |W|^2 delta_pq / 2)/((n-1)(n+1)(n+3))."""
    n = W.m + 1
    c = (2 * W.gram[p][q] + W.norm_sq * _delta(p, q) / 2) / ((n - 1) * (n + 1) * (n + 3))
    return SphereValue(c, n - 2, n + 4)


def Hbar_pair_moment(W: WeylForm, p: int, q: int) -> SphereValue:
    """int_{S_r^{n-2}} H_pl H_ql = sigma r^{n+2} G_pq / (2(n-1)(n+1))  (times f(r^2)^2 for Hbar)."""
    n = W.m + 1
    return SphereValue(W.gram[p][q] / (2 * (n - 1) * (n + 1)), n - 2, n + 2)


def compose_r2(f: RatPoly) -> RatPoly:
    """f(r^2) as a polynomial in r."""
    out = []
    for c in f.coeffs:
        out.extend([c, 0])
    return RatPoly(out)


def radial_blocks(n: int, f: RatPoly) -> tuple[RatPoly, RatPoly, RatPoly]:
    """The three profiles in s = r^2:

    P_G(s)     = (n+3) f^2 + 8 s f f' + 4 s^2 f'^2
    P_delta(s) = (n+3) f^2 + 4 s f f' + 2 s^2 f'^2
    P_tr(s)    = (n+1) f^2 + 4 s f f' + 2 s^2 f'^2
    """
    fp = f.derivative()
    s = RatPoly([0, 1])
    ff = f * f
    ffp = f * fp
    fpfp = fp * fp
    pg = (n + 3) * ff + 8 * s * ffp + 4 * s * s * fpfp
    pd = (n + 3) * ff + 4 * s * ffp + 2 * s * s * fpfp
    pt = (n + 1) * ff + 4 * s * ffp + 2 * s * s * fpfp
    return pg, pd, pt


def dHbar_sq_moment(W: WeylForm, f: RatPoly, p: int, q: int) -> RatPoly:
    """int_{S_r^{n-2}} (d_l Hbar_ij)^2 x^p x^q as a polynomial in r (unit sigma_{n-2})."""
    n = W.m + 1
    pg, pd, _ = radial_blocks(n, f)
    den = (n - 1) * (n + 1) * (n + 3)
    cg = 2 * W.gram[p][q] / den
    cd = W.norm_sq * _delta(p, q) / den
    return (cg * compose_r2(pg) + cd * compose_r2(pd)).shift(n + 2)


def dHbar_sq_total(W: WeylForm, f: RatPoly) -> RatPoly:
    """int_{S_r^{n-2}} (d_l Hbar_ij)^2 as a polynomial in r (unit sigma_{n-2})."""
    n = W.m + 1
    _, _, pt = radial_blocks(n, f)
    return (W.norm_sq / ((n - 1) * (n + 1)) * compose_r2(pt)).shift(n)


# -- Monte-Carlo integrands -------------------------------------------------


def dHbar_sq_pointwise(W: WeylForm, f_coeffs: Sequence[float], x: np.ndarray) -> np.ndarray:
    """(d_l Hbar_ij)^2 at each row of x (tangential coordinates only).

    With x^l d_l H_ij = 2 H_ij this is f^2 |dH|^2 + (8 f f' + 4 s f'^2) |H|^2.
    """
    m = W.m
    wc = W.components
    c = np.asarray(f_coeffs, dtype=float)
    cp = np.array([i * c[i] for i in range(1, len(c))] or [0.0])
    s = np.einsum("ni,ni->n", x, x)
    fv = np.polynomial.polynomial.polyval(s, c)
    fpv = np.polynomial.polynomial.polyval(s, cp)
    # A[i,j,l,r] = W_iljr + W_irjl ; d_l H_ij = A[i,j,l,r] x^r
    A = (np.transpose(wc, (0, 2, 1, 3)) + np.transpose(wc, (0, 2, 3, 1))).reshape(m**3, m)
    # |dH|^2 = x^T (A^T A) x and |H|^2 = (x x)^T Q (x x), Q = sum_ij W_ikjl W_ik'jl'
    dh2 = np.einsum("ni,ij,nj->n", x, A.T @ A, x, optimize=True)
    Wk = np.transpose(wc, (0, 2, 1, 3)).reshape(m * m, m * m)
    xx = np.einsum("ni,nj->nij", x, x).reshape(-1, m * m)
    h2 = np.einsum("na,ab,nb->n", xx, Wk.T @ Wk, xx, optimize=True)
    return fv * fv * dh2 + (8 * fv * fpv + 4 * s * fpv * fpv) * h2
