"""Exact scalars: rationals (gmpy2.mpq) and polynomials in a central parameter u."""

from __future__ import annotations

import re
from fractions import Fraction
from math import factorial
from typing import Iterable, Union

import gmpy2

Q = gmpy2.mpq

Scalar = Union[int, Fraction, "gmpy2.mpq", "UPoly"]

_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")


def q(x) -> gmpy2.mpq:
    """Coerce an int, Fraction, mpq or "p/q" string to an exact rational."""
    if isinstance(x, str):
        if not _RATIONAL_RE.match(x):
            raise ValueError(f"not a rational literal: {x!r}")
        num, _, den = x.replace(" ", "").partition("/")
        if den and int(den) == 0:
            raise ZeroDivisionError(f"zero denominator in {x!r}")
        return Q(int(num), int(den) if den else 1)
    if isinstance(x, Fraction):
        return Q(x.numerator, x.denominator)
    if isinstance(x, float):
        raise TypeError("floating point values are not accepted")
    return Q(x)


def fmt(x) -> str:
    """Lowest-terms "p/q" (or "p" when integral)."""
    x = q(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class UPoly:
    """Polynomial in u with rational coefficients; ``coeffs[k]`` multiplies u**k."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [q(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def u(cls) -> "UPoly":
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self):
        return bool(self.coeffs)

    def _lift(self, other):
        if isinstance(other, UPoly):
            return other
        if isinstance(other, (int, Fraction)) or type(other) is type(Q(0)):
            return UPoly((other,))
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        a, b = self.coeffs, o.coeffs
        if len(a) < len(b):
            a, b = b, a
        return UPoly([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    __radd__ = __add__

    def __neg__(self):
        return UPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if not self.coeffs or not o.coeffs:
            return UPoly()
        out = [Q(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(o.coeffs):
                out[i + j] += x * y
        return UPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        d = q(other)
        return UPoly([c / d for c in self.coeffs])

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        if len(self.coeffs) <= 1:
            return hash(self.coeffs[0] if self.coeffs else 0)
        return hash(self.coeffs)

    def __call__(self, value):
        v = q(value)
        acc = Q(0)
        for c in reversed(self.coeffs):
            acc = acc * v + c
        return acc

    def to_json(self) -> list[str]:
        return [fmt(c) for c in self.coeffs]

    def __repr__(self):
        if not self.coeffs:
            return "UPoly(0)"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                parts.append(fmt(c) + ("" if k == 0 else "*u" if k == 1 else f"*u^{k}"))
        return "UPoly(" + " + ".join(parts) + ")"


def evaluate(c, value):
    """Evaluate a scalar at u = value (rationals pass through unchanged)."""
    return c(value) if isinstance(c, UPoly) else c


def binom_u(k: int, sign: int = 1) -> UPoly:
    """binom(sign*u, k) as a polynomial in u."""
    acc = UPoly((1,))
    for j in range(k):
        acc = acc * UPoly((-j, sign))
    return acc / factorial(k)


def scalar_to_json(c):
    if isinstance(c, UPoly):
        return c.to_json()
    return fmt(c)


def scalar_from_json(obj):
    if isinstance(obj, list):
        return UPoly(q(s) for s in obj)
    return q(obj)
