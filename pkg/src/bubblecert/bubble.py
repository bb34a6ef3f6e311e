"""The half-space bubble u_(xi, eps), its companions phi_a and the conformal map to the ball.

Points are arrays whose last axis has length n; the last coordinate is the
vertical one, x_n >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import REL_TOL, adaptive_quad, quad_semi_infinite, radial_beta, sphere_area


@dataclass(frozen=True)
class BubbleParams:
    xi: tuple
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    @property
    def n(self) -> int:
        return len(self.xi) + 1

    @property
    def xi_array(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=float)


def _split(p: BubbleParams, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.n:
        raise ValueError(f"points must have {p.n} coordinates")
    y = x[..., :-1] - p.xi_array
    xn = x[..., -1]
    return y, xn


def denominator(p: BubbleParams, x) -> np.ndarray:
    """(eps + x_n)^2 + |xbar - xi|^2."""
    y, xn = _split(p, x)
    return (p.eps + xn) ** 2 + np.einsum("...i,...i->...", y, y)


def u_eval(p: BubbleParams, x) -> np.ndarray:
    k = (p.n - 2) / 2
    return (p.eps / denominator(p, x)) ** k


def u_gradient(p: BubbleParams, x) -> np.ndarray:
    """du/dx_a = -k eps^k D^{-k-1} dD/dx_a, dD = 2(xbar - xi, eps + x_n)."""
    y, xn = _split(p, x)
    D = denominator(p, x)
    k = (p.n - 2) / 2
    dD = 2 * np.concatenate([y, (p.eps + xn)[..., None]], axis=-1)
    return (-k * u_eval(p, x) / D)[..., None] * dD


def u_hessian(p: BubbleParams, x) -> np.ndarray:
    """d2u/dx_a dx_b = eps^k [k(k+1) D^{-k-2} dD_a dD_b - 2k D^{-k-1} delta_ab]."""
    y, xn = _split(p, x)
    D = denominator(p, x)
    k = (p.n - 2) / 2
    u = u_eval(p, x)
    dD = 2 * np.concatenate([y, (p.eps + xn)[..., None]], axis=-1)
    outer = np.einsum("...a,...b->...ab", dD, dD)
    eye = np.eye(p.n)
    return (k * (k + 1) * u / D**2)[..., None, None] * outer - (2 * k * u / D)[..., None, None] * eye


def u_laplacian(p: BubbleParams, x) -> np.ndarray:
    return np.trace(u_hessian(p, x), axis1=-2, axis2=-1)


def u_pde_residual(p: BubbleParams, x) -> tuple[np.ndarray, np.ndarray]:
    """(|Delta u|, |du/dx_n + (n-2) u^{n/(n-2)}|) at x.

    The boundary residual is only meaningful where x_n = 0.
    """
    n = p.n
    interior = np.abs(u_laplacian(p, x))
    boundary = np.abs(u_gradient(p, x)[..., -1] + (n - 2) * u_eval(p, x) ** (n / (n - 2)))
    return interior, boundary


def scaled_residuals(p: BubbleParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Residuals in units of the terms they balance.

    Interior: |Delta u| D / u, since each Hessian term is of size u/D.
    Boundary: divided by (n-2) u^{n/(n-2)}.
    """
    interior, boundary = u_pde_residual(p, x)
    u = u_eval(p, x)
    D = denominator(p, x)
    return interior * D / u, boundary / ((p.n - 2) * u ** (p.n / (p.n - 2)))


def du_deps(p: BubbleParams, x) -> np.ndarray:
    """k eps^{k-1} D^{-k-1} (x_n^2 + |xbar - xi|^2 - eps^2)."""
    y, xn = _split(p, x)
    D = denominator(p, x)
    k = (p.n - 2) / 2
    return k * u_eval(p, x) / (p.eps * D) * (xn**2 + np.einsum("...i,...i->...", y, y) - p.eps**2)


def du_dxi(p: BubbleParams, x) -> np.ndarray:
    """du/dxi_k = 2k u (x_k - xi_k)/D, stacked on the last axis."""
    y, _ = _split(p, x)
    D = denominator(p, x)
    k = (p.n - 2) / 2
    return (2 * k * u_eval(p, x) / D)[..., None] * y


def phi_eval(p: BubbleParams, a: int, x) -> np.ndarray:
    """phi_(xi, eps, a) for a in 1..n (1-based, a = n the vertical one)."""
    n = p.n
    if not 1 <= a <= n:
        raise ValueError(f"index a must be in 1..{n}")
    y, xn = _split(p, x)
    D = denominator(p, x)
    lead = (p.eps / D) ** (n / 2)
    if a == n:
        return lead * (p.eps**2 - xn**2 - np.einsum("...i,...i->...", y, y)) / D
    return lead * 2 * p.eps * y[..., a - 1] / D


def phi_identity_rhs(p: BubbleParams, a: int, x) -> np.ndarray:
    """-(2 eps^2/(n-2)) du/deps for a = n, +(2 eps^2/(n-2)) du/dxi_a otherwise."""
    n = p.n
    c = 2 * p.eps**2 / (n - 2)
    if a == n:
        return -c * du_deps(p, x)
    return c * du_dxi(p, x)[..., a - 1]


def _abs_moment_sphere(m: int, power: float) -> float:
    """int_{S^{m-1}} |w_1|^power dw = 2 Gamma((power+1)/2) pi^{(m-1)/2} / Gamma((m+power)/2)."""
    return 2 * math.exp(
        math.lgamma((power + 1) / 2) + 0.5 * (m - 1) * math.log(math.pi) - math.lgamma((m + power) / 2)
    )


def phi_boundary_norm(p: BubbleParams, a: int, rel_tol: float = REL_TOL) -> float:
    """L^{2(n-1)/n} norm of phi_a over the boundary x_n = 0.

    phi_a on the boundary depends on |xbar - xi| and, for a < n, on one
    linear coordinate; the angular factor is an exact absolute moment and
    the radial integral is adaptive quadrature.
    """
    n = p.n
    m = n - 1
    pw = 2 * (n - 1) / n
    eps = p.eps

    if a == n:
        ang = float(sphere_area(m - 1))

        def g(r):
            D = eps**2 + r * r
            return r ** (m - 1) * np.abs((eps / D) ** (n / 2) * (eps**2 - r * r) / D) ** pw

    else:
        ang = _abs_moment_sphere(m, pw)

        def g(r):
            D = eps**2 + r * r
            return r ** (m - 1) * np.abs((eps / D) ** (n / 2) * 2 * eps * r / D) ** pw

    # phi_n has a kink in |.| at r = eps; split the radial range there
    val, _ = _quad_split(g, eps, rel_tol)
    return (ang * val) ** (1 / pw)


def _quad_split(g, eps: float, rel_tol: float):
    a, ea = adaptive_quad(g, 0.0, eps, abs_tol=0.0, rel_tol=rel_tol)
    b, eb = quad_semi_infinite(g, eps, eps, abs_tol=0.0, rel_tol=rel_tol)
    return a + b, ea + eb


def boundary_mass(n: int) -> dict:
    """int_{boundary} u^{2(n-1)/(n-2)} = sigma_{n-2} B((n-1)/2, (n-1)/2)/2 and the implied quotient."""
    if n < 3:
        raise ValueError("n must be >= 3")
    sigma = sphere_area(n - 2)
    radial = radial_beta(n - 2, n - 1)
    value = float(sigma) * float(radial)
    return {
        "sigma": sigma,
        "half_beta": radial,
        "value": value,
        "quotient": (n - 2) * value ** (1 / (n - 1)),
    }


def boundary_mass_quadrature(p: BubbleParams, rel_tol: float = 1e-12) -> float:
    """The same integral by radial quadrature of u^{2(n-1)/(n-2)} at x_n = 0."""
    n = p.n
    eps = p.eps

    def g(r):
        return r ** (n - 2) * (eps / (eps**2 + r * r)) ** (n - 1)

    val, _ = _quad_split(g, eps, rel_tol)
    return float(sphere_area(n - 2)) * val


# -- conformal map ----------------------------------------------------------


def conformal_map(p: BubbleParams, x) -> np.ndarray:
    """eps Y/|Y|^2 + (0,...,0,-1), Y = (xbar - xi, x_n + eps); lands in the ball of radius 1/2 about (0,...,0,-1/2)."""
    y, xn = _split(p, x)
    Y = np.concatenate([y, (xn + p.eps)[..., None]], axis=-1)
    out = p.eps * Y / np.einsum("...i,...i->...", Y, Y)[..., None]
    out[..., -1] -= 1.0
    return out


def ball_coordinates(p: BubbleParams, x) -> np.ndarray:
    """z = C(x) measured from the ball centre (0,...,0,-1/2)."""
    z = conformal_map(p, x)
    z[..., -1] += 0.5
    return z


def conformal_jacobian(p: BubbleParams, x) -> np.ndarray:
    """Analytic Jacobian eps (I - 2 Y Y^T/|Y|^2)/|Y|^2 at a single point."""
    y, xn = _split(p, x)
    Y = np.append(y, xn + p.eps)
    r2 = Y @ Y
    return p.eps * (np.eye(p.n) - 2 * np.outer(Y, Y) / r2) / r2


def numerical_jacobian(p: BubbleParams, x, step: float | None = None) -> np.ndarray:
    """Central differences with step 1e-6 (1 + |x|)."""
    x = np.asarray(x, dtype=float)
    h = step if step is not None else 1e-6 * (1 + np.linalg.norm(x))
    n = p.n
    J = np.empty((n, n))
    for b in range(n):
        e = np.zeros(n)
        e[b] = h
        J[:, b] = (conformal_map(p, x + e) - conformal_map(p, x - e)) / (2 * h)
    return J


def pullback_defect(p: BubbleParams, x, jacobian: np.ndarray | None = None) -> float:
    """|J^T J - u^{4/(n-2)} I| / u^{4/(n-2)} (max-entry norm)."""
    J = numerical_jacobian(p, x) if jacobian is None else jacobian
    c = float(u_eval(p, x)) ** (4 / (p.n - 2))
    return float(np.max(np.abs(J.T @ J - c * np.eye(p.n)))) / c


def z_identity_rhs(p: BubbleParams, a: int, x) -> np.ndarray:
    """(1/2) u^{-n/(n-2)} phi_a, the predicted z_a(C(x))."""
    n = p.n
    return 0.5 * u_eval(p, x) ** (-n / (n - 2)) * phi_eval(p, a, x)


def z_identity_param_form(p: BubbleParams, a: int, x) -> np.ndarray:
    """-(eps/(n-2)) u^{-1} du/deps for a = n, (eps/(n-2)) u^{-1} du/dxi_a otherwise."""
    n = p.n
    u = u_eval(p, x)
    if a == n:
        return -p.eps / (n - 2) * du_deps(p, x) / u
    return p.eps / (n - 2) * du_dxi(p, x)[..., a - 1] / u
