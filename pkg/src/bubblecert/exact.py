"""Exact arithmetic: rationals, quadratic surds and univariate polynomials.

Rationals are :class:`fractions.Fraction` throughout.  A :class:`Surd` is an
element ``a + b*sqrt(d)`` of a real quadratic extension of Q; arithmetic is
closed inside one extension and its sign is decided without floating point.
"""

from __future__ import annotations

import math
import operator
from fractions import Fraction
from typing import Callable, Iterable, Union

Number = Union[int, Fraction]


class SurdFieldError(ValueError):
    """Raised when two surds from different quadratic extensions meet."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


_RAT_OPS: dict[str, Callable[[Fraction, Fraction], Fraction]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
}


def rat_arith(x, y, op: str) -> Fraction:
    """Apply ``op`` (one of ``+ - * /``) to two rationals exactly."""
    x, y = as_fraction(x), as_fraction(y)
    op = {"×": "*", "÷": "/", "−": "-"}.get(op, op)
    if op not in _RAT_OPS:
        raise ValueError(f"unknown operator {op!r}")
    if op == "/" and y == 0:
        raise ZeroDivisionError("rational division by zero")
    return _RAT_OPS[op](x, y)


def fraction_str(x: Fraction) -> str:
    """Lossless ``p/q`` encoding (``p`` alone for integers)."""
    x = as_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


class Surd:
    """``a + b*sqrt(d)`` with rational ``a``, ``b`` and radicand ``d >= 0``.

    Values with ``b == 0`` behave as plain rationals and mix freely with any
    radicand.  Two irrational surds must share their radicand.
    """

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, a=0, b=0, d=0):
        a, b, d = as_fraction(a), as_fraction(b), as_fraction(d)
        if d < 0:
            raise ValueError(f"negative radicand {d}")
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_d", d)

    def __setattr__(self, name, value):
        raise AttributeError("Surd is immutable")

    def __reduce__(self):
        return (Surd, (self._a, self._b, self._d))

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @property
    def d(self) -> Fraction:
        return self._d

    @property
    def is_rational(self) -> bool:
        return self._b == 0 or self._d == 0 or _is_square(self._d)

    def rational_value(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is irrational")
        if self._b == 0 or self._d == 0:
            return self._a
        return self._a + self._b * _exact_sqrt(self._d)

    def conjugate(self) -> Surd:
        return Surd(self._a, -self._b, self._d)

    def norm(self) -> Fraction:
        """Field norm ``a^2 - b^2 d``."""
        return self._a * self._a - self._b * self._b * self._d

    def _common_radicand(self, other: Surd) -> Fraction:
        if self._b == 0 or self._d == 0:
            return other._d
        if other._b == 0 or other._d == 0 or other._d == self._d:
            return self._d
        raise SurdFieldError(
            f"radicands differ: {fraction_str(self._d)} vs {fraction_str(other._d)}"
        )

    @staticmethod
    def _coerce(other) -> Surd | None:
        if isinstance(other, Surd):
            return other
        if isinstance(other, (int, Fraction)):
            return Surd(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._common_radicand(o)
        return Surd(self._a + o._a, self._b + o._b, d)

    __radd__ = __add__

    def __neg__(self) -> Surd:
        return Surd(-self._a, -self._b, self._d)

    def __pos__(self) -> Surd:
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._common_radicand(o)
        return Surd(
            self._a * o._a + self._b * o._b * d,
            self._a * o._b + self._b * o._a,
            d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o._b == 0 or o._d == 0:
            if o._a == 0:
                raise ZeroDivisionError("surd division by zero")
            return Surd(self._a / o._a, self._b / o._a, self._d)
        nrm = o.norm()
        if nrm == 0:
            raise ZeroDivisionError("division by a surd of zero norm")
        num = self * o.conjugate()
        return Surd(num._a / nrm, num._b / nrm, num._d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int) -> Surd:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out, base = Surd(1, 0, self._d), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        """Exact sign of ``a + b*sqrt(d)``: -1, 0 or +1."""
        sa = _sign(self._a)
        sb = _sign(self._b) if self._d != 0 else 0
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with b^2 d
        return sa * _sign(self._a * self._a - self._b * self._b * self._d)

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        try:
            return (self - o).sign() == 0
        except SurdFieldError:
            return False

    def __hash__(self) -> int:
        if self.is_rational:
            return hash(self.rational_value())
        return hash((self._a, self._b, self._d))

    def __lt__(self, other) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - other).sign() >= 0

    def __bool__(self) -> bool:
        return self.sign() != 0

    def __float__(self) -> float:
        a = self._a
        t = self._b * self._b * self._d
        if _sign(a) * _sign(self._b) < 0 and t != 0:
            # a + b√d = (a² - b²d) / (a - b√d); avoids cancellation
            root = float(self._b) * math.sqrt(self._d)
            return float(a * a - t) / (float(a) - root)
        return float(a) + float(self._b) * math.sqrt(self._d)

    def __repr__(self) -> str:
        return f"Surd({fraction_str(self._a)!r}, {fraction_str(self._b)!r}, {fraction_str(self._d)!r})"

    def __str__(self) -> str:
        if self._b == 0 or self._d == 0:
            return fraction_str(self._a)
        return f"{fraction_str(self._a)} + ({fraction_str(self._b)})*sqrt({fraction_str(self._d)})"

    def to_json(self) -> dict[str, str]:
        return {
            "a": fraction_str(self._a),
            "b": fraction_str(self._b),
            "radicand": fraction_str(self._d),
        }

    @classmethod
    def from_json(cls, obj: dict[str, str]) -> Surd:
        return cls(Fraction(obj["a"]), Fraction(obj["b"]), Fraction(obj["radicand"]))


def surd_sign(s: Surd) -> int:
    return s.sign()


def exact_sign(x) -> int:
    if isinstance(x, Surd):
        return x.sign()
    return _sign(as_fraction(x))


def _exact_sqrt(x: Fraction) -> Fraction:
    p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if p * p != x.numerator or q * q != x.denominator:
        raise ValueError(f"{x} is not a rational square")
    return Fraction(p, q)


def _is_square(x: Fraction) -> bool:
    if x < 0:
        return False
    p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
    return p * p == x.numerator and q * q == x.denominator


def _is_zero(c) -> bool:
    if isinstance(c, Surd):
        return c.sign() == 0
    return c == 0


class RatPoly:
    """Univariate polynomial with exact coefficients, ascending degree.

    Coefficients are Fractions or Surds (one radicand per polynomial).  The
    zero polynomial has no coefficients and ``degree == -1``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [c if isinstance(c, Surd) else as_fraction(c) for c in coeffs]
        while cs and _is_zero(cs[-1]):
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("RatPoly is immutable")

    def __reduce__(self):
        return (RatPoly, (self.coeffs,))

    @classmethod
    def monomial(cls, k: int, c=1) -> RatPoly:
        return cls([0] * k + [c])

    @classmethod
    def linear_factor(cls, root) -> RatPoly:
        """``s - root``."""
        return cls([-as_fraction(root), 1])

    @classmethod
    def product(cls, factors: Iterable[RatPoly]) -> RatPoly:
        out = cls([1])
        for f in factors:
            out = out * f
        return out

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __call__(self, s):
        """Horner evaluation at a Fraction, int, Surd or float."""
        acc = 0 if isinstance(s, float) else Fraction(0)
        if isinstance(s, float):
            for c in reversed(self.coeffs):
                acc = acc * s + float(c)
            return acc
        if not isinstance(s, Surd):
            s = as_fraction(s)
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def derivative(self, k: int = 1) -> RatPoly:
        p = self
        for _ in range(k):
            p = RatPoly(i * c for i, c in enumerate(p.coeffs) if i > 0)
        return p

    def _lift(self, other) -> RatPoly | None:
        if isinstance(other, RatPoly):
            return other
        if isinstance(other, (int, Fraction, Surd)):
            return RatPoly([other])
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return RatPoly(self.coeff(i) + o.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> RatPoly:
        return RatPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return RatPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if _is_zero(a):
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return RatPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> RatPoly:
        out = RatPoly([1])
        for _ in range(k):
            out = out * self
        return out

    def shift(self, k: int) -> RatPoly:
        """Multiply by ``s**k``."""
        if self.is_zero():
            return self
        return RatPoly([0] * k + list(self.coeffs))

    def map_coeffs(self, fn) -> RatPoly:
        return RatPoly(fn(i, c) for i, c in enumerate(self.coeffs))

    def __eq__(self, other) -> bool:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero()

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"RatPoly([{', '.join(str(c) for c in self.coeffs)}])"

    def to_strings(self) -> list[str]:
        return [str(c) if isinstance(c, Surd) else fraction_str(c) for c in self.coeffs]


def poly_eval(p: RatPoly, s):
    return p(s)


def poly_derivative(p: RatPoly) -> RatPoly:
    return p.derivative()


def quadratic_discriminant(p: RatPoly):
    """``b^2 - 4ac`` of ``p = a s^2 + b s + c`` exactly as written (not monic)."""
    if p.degree != 2:
        raise ValueError(f"expected a quadratic, got degree {p.degree}")
    c, b, a = p.coeffs
    return b * b - 4 * a * c


def larger_root(p: RatPoly) -> Surd:
    """``(-b + sqrt(b^2 - 4ac)) / (2a)`` as a Surd; requires rational coefficients."""
    disc = quadratic_discriminant(p)
    if disc < 0:
        raise ValueError("negative discriminant")
    c, b, a = p.coeffs
    return Surd(-b / (2 * a), 1 / (2 * a), disc)


def positivity_ladder(p: RatPoly, start) -> dict:
    """Certify ``p(x) > 0`` for every real ``x >= start``.

    Succeeds when the top derivative is a positive constant (or has positive
    leading term and is positive at ``start``) and every lower derivative is
    positive at ``start``; then each derivative is increasing on the ray.
    A negative-side certificate is obtained by passing ``-p``.
    """
    start = as_fraction(start)
    k = p.degree
    if k < 0:
        return {"ok": False, "values": []}
    values = [p.derivative(j)(start) for j in range(k + 1)]
    ok = all(v > 0 for v in values)
    return {"ok": ok, "values": values}

