"""Adaptive Gauss-Legendre quadrature and exact half-integer Beta values."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

ABS_TOL = 1e-12
REL_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Tolerance not met; ``estimate`` and ``error`` carry the best result."""

    def __init__(self, msg: str, estimate: float, error: float):
        super().__init__(f"{msg} (estimate={estimate!r}, error={error:.3e})")
        self.estimate = estimate
        self.error = error


@lru_cache(maxsize=8)
def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(f, a: float, b: float, order: int) -> float:
    x, w = _gl_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return half * float(np.dot(w, f(mid + half * x)))


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    order: int = 16,
    initial_panels: int = 8,
    max_panels: int = 4000,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    Each panel's error is estimated by comparing one ``order``-point rule
    with the same rule on its two halves; the worst panel is bisected until
    the summed estimate is below ``max(abs_tol, rel_tol*|I|)``.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    heap: list[tuple[float, float, float, float]] = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        coarse = _panel(f, lo, hi, order)
        mid = 0.5 * (lo + hi)
        fine = _panel(f, lo, mid, order) + _panel(f, mid, hi, order)
        e = abs(fine - coarse)
        heapq.heappush(heap, (-e, lo, hi, fine))
        total += fine
        err += e
    panels = initial_panels
    while err > max(abs_tol, rel_tol * abs(total)):
        if panels >= max_panels:
            raise QuadratureError("adaptive quadrature did not converge", total, err)
        neg_e, lo, hi, val = heapq.heappop(heap)
        total -= val
        err += neg_e
        mid = 0.5 * (lo + hi)
        for l2, h2 in ((lo, mid), (mid, hi)):
            coarse = _panel(f, l2, h2, order)
            m2 = 0.5 * (l2 + h2)
            fine = _panel(f, l2, m2, order) + _panel(f, m2, h2, order)
            e = abs(fine - coarse)
            heapq.heappush(heap, (-e, l2, h2, fine))
            total += fine
            err += e
        panels += 1
    # re-sum to shed accumulated cancellation in the running totals
    total = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return total, err


def quad_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    scale: float = 1.0,
    **kw,
) -> tuple[float, float]:
    """Integrate over ``[a, inf)`` via ``x = a + scale*u/(1-u)``, ``u in [0, 1)``."""

    def g(u):
        one_minus = 1.0 - u
        x = a + scale * u / one_minus
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = f(x) * scale / (one_minus * one_minus)
        return np.where(np.isfinite(out), out, 0.0)

    return adaptive_quad(g, 0.0, 1.0, **kw)


def quad_real_line(f, center: float = 0.0, scale: float = 1.0, **kw) -> tuple[float, float]:
    right, e1 = quad_semi_infinite(f, center, scale, **kw)
    left, e2 = quad_semi_infinite(lambda x: f(2 * center - x), center, scale, **kw)
    return left + right, e1 + e2


# -- exact constants --------------------------------------------------------


@dataclass(frozen=True)
class PiMultiple:
    """The real number ``coeff * pi**power`` with rational ``coeff``."""

    coeff: Fraction
    power: int

    def __float__(self) -> float:
        return float(self.coeff) * math.pi**self.power

    def __mul__(self, other):
        if isinstance(other, PiMultiple):
            return PiMultiple(self.coeff * other.coeff, self.power + other.power)
        if isinstance(other, (int, Fraction)):
            return PiMultiple(self.coeff * other, self.power)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PiMultiple):
            return PiMultiple(self.coeff / other.coeff, self.power - other.power)
        if isinstance(other, (int, Fraction)):
            return PiMultiple(self.coeff / other, self.power)
        return NotImplemented


def _half_int_gamma(x: Fraction) -> tuple[Fraction, int]:
    """Gamma(x) = c * sqrt(pi)**e for x a positive integer or half-integer."""
    if x <= 0 or (2 * x).denominator != 1:
        raise ValueError(f"Gamma only supported at positive half-integers, got {x}")
    if x.denominator == 1:
        return Fraction(math.factorial(int(x) - 1)), 0
    k = int(x - Fraction(1, 2))
    return Fraction(math.factorial(2 * k), 4**k * math.factorial(k)), 1


def beta_exact(a, b) -> PiMultiple:
    """Euler Beta B(a, b) at positive integers/half-integers, exactly."""
    a, b = Fraction(a), Fraction(b)
    ga, ea = _half_int_gamma(a)
    gb, eb = _half_int_gamma(b)
    gab, eab = _half_int_gamma(a + b)
    e = ea + eb - eab
    assert e % 2 == 0
    return PiMultiple(ga * gb / gab, e // 2)


def beta_float(a: float, b: float) -> float:
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def sphere_area(k: int) -> PiMultiple:
    """Area of the unit sphere S^k in R^(k+1): 2 pi^((k+1)/2) / Gamma((k+1)/2)."""
    if k < 0:
        raise ValueError("sphere dimension must be >= 0")
    half = Fraction(k + 1, 2)
    g, e = _half_int_gamma(half)
    # pi^{(k+1)/2} / sqrt(pi)^e is an integral power of pi
    twice = (k + 1) - e
    return PiMultiple(2 / g, twice // 2)


def radial_beta(power, denom_exp) -> PiMultiple:
    """Exact value of int_0^inf r^power (1+r^2)^(-denom_exp) dr.

    Equals B((power+1)/2, denom_exp-(power+1)/2)/2 for integer arguments.
    """
    a = Fraction(power + 1, 2)
    b = Fraction(denom_exp) - a
    if a <= 0 or b <= 0:
        raise ValueError(f"divergent radial integral r^{power}/(1+r^2)^{denom_exp}")
    return beta_exact(a, b) * Fraction(1, 2)
