"""Weyl-type forms and the perturbation metric ``g = exp(h)`` built from them.

A :class:`WeylForm` stores an integer numerator array and one common
denominator, so every symmetry check is exact and vectorised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .exact import RatPoly, as_fraction, fraction_str


class DimensionError(ValueError):
    pass


class OutsideSupportError(ValueError):
    pass


class StencilError(ValueError):
    pass


# -- Weyl forms -------------------------------------------------------------


def kulkarni_nomizu(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a ⊙ b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il."""
    t = np.einsum("ik,jl->ijkl", a, b)
    out = t + np.einsum("ik,jl->ijkl", b, a)
    out -= np.einsum("il,jk->ijkl", a, b)
    out -= np.einsum("il,jk->ijkl", b, a)
    return out


class WeylForm:
    """Order-4 tensor on R^m with the algebraic symmetries of a Weyl tensor."""

    def __init__(self, numer: np.ndarray, denom: int = 1):
        numer = np.asarray(numer)
        if numer.ndim != 4 or len(set(numer.shape)) != 1:
            raise ValueError("components must be an m x m x m x m array")
        if denom <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(int(np.gcd.reduce(np.abs(numer).ravel())) if numer.size else 0, int(denom))
        if g > 1:
            numer = numer // g
            denom //= g
        self.numer = numer
        self.numer.setflags(write=False)
        self.denom = int(denom)

    @property
    def m(self) -> int:
        return self.numer.shape[0]

    @cached_property
    def components(self) -> np.ndarray:
        out = self.numer.astype(float) / self.denom
        out.setflags(write=False)
        return out

    def component(self, i: int, j: int, k: int, l: int) -> Fraction:
        return Fraction(int(self.numer[i, j, k, l]), self.denom)

    @cached_property
    def sym_pairs(self) -> np.ndarray:
        """Integer array S[i,j,l,p] = numer of (W_ipjl + W_iljp)."""
        w = self.numer
        # W_ipjl as array indexed [i, j, l, p]
        a = np.transpose(w, (0, 2, 3, 1))
        # W_iljp as array indexed [i, j, l, p]
        b = np.transpose(w, (0, 2, 1, 3))
        return a + b

    @cached_property
    def norm_sq(self) -> Fraction:
        """|W|^2 = sum (W_ikjl + W_iljk)^2, exact."""
        s = _exact_square_sum(self.sym_pairs)
        return Fraction(s, self.denom**2)

    @cached_property
    def gram(self) -> list[list[Fraction]]:
        """G_pq = sum_ijl (W_ipjl + W_iljp)(W_iqjl + W_iljq), exact."""
        m = self.m
        a = self.sym_pairs.reshape(m**3, m)
        g = _exact_gram(a)
        d2 = self.denom**2
        return [[Fraction(int(g[p][q]), d2) for q in range(m)] for p in range(m)]

    @cached_property
    def gram_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.gram])

    def invariant_report(self) -> dict[str, bool]:
        w = self.numer
        return {
            "antisym_12": bool(np.array_equal(w, -w.transpose(1, 0, 2, 3))),
            "antisym_34": bool(np.array_equal(w, -w.transpose(0, 1, 3, 2))),
            "pair_swap": bool(np.array_equal(w, w.transpose(2, 3, 0, 1))),
            # W_ijkl + W_iklj + W_iljk
            "bianchi": bool(
                not np.any(w + w.transpose(0, 2, 3, 1) + w.transpose(0, 3, 1, 2))
            ),
            "trace_free": bool(not np.any(np.einsum("kikj->ij", w))),
            "nonzero": self.norm_sq > 0,
        }

    def is_valid(self) -> bool:
        return all(self.invariant_report().values())

    def permuted(self, perm: Sequence[int]) -> WeylForm:
        """Relabel coordinates: new W_ijkl = W_{perm[i] perm[j] perm[k] perm[l]}."""
        p = np.asarray(perm)
        return WeylForm(self.numer[np.ix_(p, p, p, p)], self.denom)

    def to_json(self) -> str:
        flat = [fraction_str(Fraction(int(v), self.denom)) for v in self.numer.ravel()]
        return json.dumps({"dimension": self.m, "components": flat})

    @classmethod
    def from_json(cls, text: str) -> WeylForm:
        obj = json.loads(text)
        m = int(obj["dimension"])
        fr = [Fraction(s) for s in obj["components"]]
        if len(fr) != m**4:
            raise ValueError("component count does not match dimension")
        den = 1
        for x in fr:
            den = den * x.denominator // math.gcd(den, x.denominator)
        numer = np.array([int(x * den) for x in fr], dtype=np.int64).reshape(m, m, m, m)
        return cls(numer, den)


def _exact_square_sum(a: np.ndarray) -> int:
    peak = int(np.max(np.abs(a))) if a.size else 0
    if peak**2 * a.size < 2**62:
        return int(np.sum(a.astype(np.int64) ** 2))
    return int(sum(int(v) * int(v) for v in a.ravel()))


def _exact_gram(a: np.ndarray) -> np.ndarray:
    peak = int(np.max(np.abs(a))) if a.size else 0
    if peak**2 * a.shape[0] < 2**53:
        # every product and partial sum is an integer below 2^53: BLAS is exact
        af = a.astype(np.float64)
        return np.rint(af.T @ af).astype(np.int64)
    if peak**2 * a.shape[0] < 2**62:
        a64 = a.astype(np.int64)
        return a64.T @ a64
    ao = a.astype(object)
    return ao.T.dot(ao)


def weyl_from_seed(m: int, seed: int, entry_bound: int = 2) -> WeylForm:
    """Deterministic generic Weyl-type form on R^m.

    Draws an integer symmetric trace-free S, forms the Kulkarni-Nomizu square
    R = S ⊙ S and removes its Ricci part.  Redraws if the result vanishes.
    """
    if m < 4:
        raise DimensionError(f"no nonzero Weyl-type form exists for m={m} < 4")
    attempt = 0
    while True:
        rng = np.random.Generator(np.random.Philox(key=[seed, attempt]))
        s = rng.integers(-entry_bound, entry_bound + 1, size=(m, m), dtype=np.int64)
        s = np.triu(s) + np.triu(s, 1).T
        s[m - 1, m - 1] -= np.trace(s)
        r = kulkarni_nomizu(s, s)
        ric = np.einsum("ijik->jk", r)
        scal = int(np.trace(ric))
        eye = np.eye(m, dtype=np.int64)
        denom = 2 * (m - 1) * (m - 2)
        numer = denom * r - 2 * (m - 1) * kulkarni_nomizu(ric, eye) + scal * kulkarni_nomizu(eye, eye)
        w = WeylForm(numer, denom)
        if w.norm_sq > 0:
            return w
        attempt += 1


# -- perturbation field -----------------------------------------------------


@dataclass(frozen=True)
class PerturbationConfig:
    n: int
    d: int
    f: RatPoly
    mu: Fraction | float = 1
    lam: Fraction | float = 1
    rho: Fraction | float = 1

    def __post_init__(self):
        if not isinstance(self.f, RatPoly):
            object.__setattr__(self, "f", RatPoly(self.f))
        if not 0 < self.d or not 4 * self.d < self.n - 6:
            raise ValueError(f"need 0 < d < (n-6)/4, got n={self.n}, d={self.d}")
        if self.f.degree > self.d:
            raise ValueError("deg f exceeds d")
        if not 0 < self.mu <= 1:
            raise ValueError("need 0 < mu <= 1")
        if not 0 < self.lam <= self.rho <= 1:
            raise ValueError("need 0 < lambda <= rho <= 1")

    @property
    def m(self) -> int:
        return self.n - 1

    @cached_property
    def f_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.f.coeffs] or [0.0])

    @cached_property
    def fprime_float(self) -> np.ndarray:
        c = self.f_float
        return np.array([i * c[i] for i in range(1, len(c))] or [0.0])


def _horner(c: np.ndarray, s):
    acc = 0.0
    for v in c[::-1]:
        acc = acc * s + v
    return acc


def H_field(W: WeylForm, xbar: np.ndarray) -> np.ndarray:
    """H_ij = W_ikjl x^k x^l on tangential indices."""
    return np.einsum("ikjl,k,l->ij", W.components, xbar, xbar)


def _check_point(W: WeylForm, cfg: PerturbationConfig, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.n,):
        raise ValueError(f"point must have {cfg.n} coordinates")
    if W.m != cfg.m:
        raise ValueError(f"W has tangential dimension {W.m}, config needs {cfg.m}")
    return x


def h_field(W: WeylForm, cfg: PerturbationConfig, x) -> np.ndarray:
    """Inner-region field h_ab = mu lam^(2d) f(|xbar|^2/lam^2) H_ab(x), |x| <= rho."""
    x = _check_point(W, cfg, x)
    if np.linalg.norm(x) > float(cfg.rho) * (1 + 1e-15):
        raise OutsideSupportError(f"|x|={np.linalg.norm(x)} exceeds rho={float(cfg.rho)}")
    return _h_inner(W, cfg, x)


def _h_inner(W: WeylForm, cfg: PerturbationConfig, x: np.ndarray) -> np.ndarray:
    m = cfg.m
    xb = x[:m]
    lam = float(cfg.lam)
    s = float(xb @ xb) / lam**2
    amp = float(cfg.mu) * lam ** (2 * cfg.d) * _horner(cfg.f_float, s)
    out = np.zeros((cfg.n, cfg.n))
    out[:m, :m] = amp * H_field(W, xb)
    return out


def smooth_cutoff(t):
    """1 for t <= 0, 0 for t >= 1, quintic smoothstep in between."""
    u = np.clip(t, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def h_field_global(W: WeylForm, cfg: PerturbationConfig, x) -> np.ndarray:
    """h on all of the half-space; inner formula damped on rho < |x| < 1."""
    x = _check_point(W, cfg, x)
    r = float(np.linalg.norm(x))
    rho = float(cfg.rho)
    if r <= rho:
        return _h_inner(W, cfg, x)
    if r >= 1.0:
        return np.zeros((cfg.n, cfg.n))
    return float(smooth_cutoff((r - rho) / (1.0 - rho))) * _h_inner(W, cfg, x)


def h_gradient(W: WeylForm, cfg: PerturbationConfig, x) -> np.ndarray:
    """Analytic dh[c, a, b] = d_c h_ab in the inner region."""
    x = _check_point(W, cfg, x)
    m, n = cfg.m, cfg.n
    xb = x[:m]
    lam = float(cfg.lam)
    s = float(xb @ xb) / lam**2
    scale = float(cfg.mu) * lam ** (2 * cfg.d)
    f0 = _horner(cfg.f_float, s)
    f1 = _horner(cfg.fprime_float, s)
    wc = W.components
    H = H_field(W, xb)
    # d_c H_ij = (W_icjl + W_iljc) x^l
    dH = np.einsum("icjl,l->cij", wc, xb) + np.einsum("iljc,l->cij", wc, xb)
    out = np.zeros((n, n, n))
    out[:m, :m, :m] = scale * (f0 * dH + (2.0 * f1 / lam**2) * xb[:, None, None] * H[None])
    return out


def metric_exp(h: np.ndarray) -> np.ndarray:
    """exp(h) for symmetric h, via the spectral decomposition."""
    h = np.asarray(h, dtype=float)
    if not np.allclose(h, h.T, rtol=0, atol=1e-13 * (1 + np.abs(h).max())):
        raise ValueError("h must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (h + h.T))
    return (vecs * np.exp(vals)) @ vecs.T


def expm_minus_identity(h: np.ndarray) -> np.ndarray:
    """exp(h) - I without cancellation when |h| is small."""
    nrm = np.linalg.norm(h, 2)
    if nrm > 0.5:
        return metric_exp(h) - np.eye(h.shape[0])
    term = h.copy()
    out = h.copy()
    k = 1
    while True:
        k += 1
        term = term @ h / k
        out += term
        if np.abs(term).max() <= 1e-18 * max(np.abs(out).max(), 1e-300):
            return out


# -- curvature --------------------------------------------------------------


def metric_derivatives(metric_dev, x: np.ndarray, step: float):
    """Central differences of a metric deviation ``e(x) = g(x) - I``.

    Returns (g, dg[c,a,b], d2g[c,d,a,b]).
    """
    n = x.size
    e0 = metric_dev(x)
    plus = [metric_dev(x + step * np.eye(n)[c]) for c in range(n)]
    minus = [metric_dev(x - step * np.eye(n)[c]) for c in range(n)]
    dg = np.array([(p - q) / (2 * step) for p, q in zip(plus, minus)])
    d2g = np.empty((n, n, n, n))
    for c in range(n):
        d2g[c, c] = (plus[c] - 2 * e0 + minus[c]) / step**2
        for d in range(c + 1, n):
            ec, ed = np.eye(n)[c], np.eye(n)[d]
            val = (
                metric_dev(x + step * (ec + ed))
                - metric_dev(x + step * (ec - ed))
                - metric_dev(x - step * (ec - ed))
                + metric_dev(x - step * (ec + ed))
            ) / (4 * step**2)
            d2g[c, d] = val
            d2g[d, c] = val
    return np.eye(n) + e0, dg, d2g


def scalar_curvature_from_derivatives(g, dg, d2g) -> float:
    """Scalar curvature from g, its first and second coordinate derivatives."""
    ginv = np.linalg.inv(g)
    # lowered Christoffel: gam[f, b, c] = (d_b g_fc + d_c g_fb - d_f g_bc)/2
    gam = 0.5 * (
        np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg
    )
    # R_abcd = 1/2(g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)
    #          + g^ef (Gam_e,bc Gam_f,ad - Gam_e,bd Gam_f,ac)
    sec = 0.5 * (
        np.einsum("bcad->abcd", d2g)
        + np.einsum("adbc->abcd", d2g)
        - np.einsum("bdac->abcd", d2g)
        - np.einsum("acbd->abcd", d2g)
    )
    quad = np.einsum("ef,ebc,fad->abcd", ginv, gam, gam) - np.einsum(
        "ef,ebd,fac->abcd", ginv, gam, gam
    )
    riem = sec + quad
    return float(np.einsum("ac,bd,abcd->", ginv, ginv, riem))


def lemma_quadratic_expression(W: WeylForm, cfg: PerturbationConfig, x, t: float, step: float) -> float:
    """t-scaled bracket d_a d_b h_ab - d_a(h_ac d_b h_bc) + 1/2 |div h|^2 - 1/4 |dh|^2."""
    x = np.asarray(x, dtype=float)
    n = cfg.n
    h = _h_inner(W, cfg, x)
    dh = h_gradient(W, cfg, x)

    def div(y):
        return np.einsum("aab->b", h_gradient(W, cfg, y))

    v = div(x)
    dv = np.array(
        [(div(x + step * np.eye(n)[a]) - div(x - step * np.eye(n)[a])) / (2 * step) for a in range(n)]
    )  # dv[a, c] = d_a v_c
    linear = float(np.trace(dv))
    second = float(v @ v + np.einsum("ac,ac->", h, dv))
    quad = 0.5 * float(v @ v) - 0.25 * float(np.sum(dh * dh))
    return t * linear - t * t * second + t * t * quad


@dataclass
class OrderCheck:
    t: float
    residual_t: float
    residual_half: float
    ratio: float
    passed: bool
    curvature_t: float = 0.0
    expression_t: float = 0.0


def scalar_curvature_order_check(
    W: WeylForm, cfg: PerturbationConfig, x, t: float = 1e-2, min_ratio: float = 6.0
) -> OrderCheck:
    """Compare R_{exp(t h)} with the quadratic bracket at amplitudes t and t/2.

    The residual must shrink at least ``min_ratio``-fold when t halves.
    """
    x = _check_point(W, cfg, x)
    r = float(np.linalg.norm(x))
    if not 0 < t <= 1:
        raise ValueError("amplitude t must lie in (0, 1]")
    if x[-1] <= 0:
        raise StencilError("point must be interior (x_n > 0)")
    step = 1e-4 * (float(cfg.lam) + r)
    if r + 2 * step * math.sqrt(2) >= float(cfg.rho) or x[-1] - 2 * step <= 0:
        raise StencilError("differentiation stencil leaves the inner region")

    def residual(amp: float) -> tuple[float, float, float]:
        dev = lambda y: expm_minus_identity(amp * _h_inner(W, cfg, y))  # noqa: E731
        g, dg, d2g = metric_derivatives(dev, x, step)
        R = scalar_curvature_from_derivatives(g, dg, d2g)
        Q = lemma_quadratic_expression(W, cfg, x, amp, step)
        return abs(R - Q), R, Q

    r1, R1, Q1 = residual(t)
    r2, _, _ = residual(t / 2)
    ratio = r1 / r2 if r2 > 0 else math.inf
    return OrderCheck(t, r1, r2, ratio, ratio >= min_ratio or r1 == 0.0, R1, Q1)


# -- counterexample metric --------------------------------------------------


def bump_center(N: int, n: int) -> np.ndarray:
    c = np.zeros(n)
    c[0] = 1.0 / N
    return c


def bump_support_radius(N: int) -> Fraction:
    """chi(4 N^2 |x - x_N|) vanishes once |x - x_N| >= 1/(2 N^2)."""
    return Fraction(1, 2 * N * N)


def support_overlap(N: int, M: int) -> Fraction:
    """Exact r_N + r_M - |x_N - x_M|; positive means the closed supports meet."""
    return bump_support_radius(N) + bump_support_radius(M) - abs(Fraction(1, N) - Fraction(1, M))


def support_report(N0: int, N_max: int) -> dict:
    """Interval arithmetic on the bump supports for N0 <= N <= N_max."""
    consecutive = {N: support_overlap(N, N + 1) for N in range(N0, N_max)}
    far_disjoint = all(
        support_overlap(N, N + k) < 0 for N in range(N0, N_max) for k in range(2, 4) if N + k <= N_max + 2
    )
    return {
        "consecutive_overlap": consecutive,
        "consecutive_disjoint": all(v < 0 for v in consecutive.values()),
        "non_consecutive_disjoint": far_disjoint,
        "max_simultaneous_terms": 1 if all(v < 0 for v in consecutive.values()) else 2,
        "outer_radius": Fraction(1, N0) + bump_support_radius(N0),
    }


def active_bumps(x, N0: int) -> list[int]:
    x = np.asarray(x, dtype=float)
    x1 = x[0]
    if x1 <= 0:
        return []
    centre = 1.0 / x1
    lo = max(N0, int(math.floor(centre)) - 1)
    out = []
    for N in range(lo, max(lo, int(math.ceil(centre)) + 2) + 1):
        if np.linalg.norm(x - bump_center(N, x.size)) < float(bump_support_radius(N)):
            out.append(N)
    return out


def counterexample_h(W: WeylForm, f_coeffs: Sequence[float], d: int, N0: int, x) -> np.ndarray:
    """Series of rescaled bumps centred at x_N = (1/N, 0, ..., 0).

    Term N is chi(4 N^2 |x - x_N|) lam^(2d) f(|xbar - x_N|^2 / lam^2) H(x - x_N)
    with lam = 2^-N and chi the quintic smoothstep cutoff on [1, 2].
    """
    x = np.asarray(x, dtype=float)
    n = W.m + 1
    if x.shape != (n,):
        raise ValueError(f"point must have {n} coordinates")
    fc = np.asarray(f_coeffs, dtype=float)
    out = np.zeros((n, n))
    for N in active_bumps(x, N0):
        y = x - bump_center(N, n)
        chi = float(smooth_cutoff(4.0 * N * N * np.linalg.norm(y) - 1.0))
        yb = y[: n - 1]
        lam2 = 4.0**-N
        amp = lam2**d * _horner(fc, float(yb @ yb) / lam2)
        out[: n - 1, : n - 1] += chi * amp * H_field(W, yb)
    return out


def counterexample_metric_sample(W: WeylForm, f_coeffs: Sequence[float], d: int, N0: int, x) -> np.ndarray:
    if N0 < 3:
        raise ValueError("N0 >= 3 keeps every bump inside |x| < 1/2")
    return metric_exp(counterexample_h(W, f_coeffs, d, N0, x))


# -- smallness --------------------------------------------------------------


def smallness_diagnostic(cfg: PerturbationConfig):
    """mu^-2 lam^(n-4d-6) rho^(2-n); exact when the parameters are rationals."""
    vals = (cfg.mu, cfg.lam, cfg.rho)
    if all(isinstance(v, (int, Fraction)) for v in vals):
        mu, lam, rho = (as_fraction(v) for v in vals)
    else:
        mu, lam, rho = (float(v) for v in vals)
    return mu**-2 * lam ** (cfg.n - 4 * cfg.d - 6) * rho ** (2 - cfg.n)


def describe_smallness(value, threshold=Fraction(1)) -> str:
    tag = "small" if value < threshold else "NOT small"
    shown = fraction_str(value) if isinstance(value, Fraction) else repr(value)
    return f"{shown} ({tag}, threshold {threshold})"
