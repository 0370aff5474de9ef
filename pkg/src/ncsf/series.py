"""Truncated power series in commuting z_1..z_n and a central parameter t.

The only truncation is the t-order T: terms with t-power above T are dropped.
Coefficients are exact rationals or UPoly (polynomials in u).

Monomials t^k z^e are stored as packed ints, 12 bits per exponent slot with
slot 0 holding k, so multiplying monomials is integer addition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

from .rational import Q, UPoly, evaluate, fmt, q, scalar_from_json, scalar_to_json

BITS = 12
MASK = (1 << BITS) - 1


class DimensionMismatch(ValueError):
    pass


class NotTAdicContraction(ValueError):
    pass


def pack(tpow: int, exps: Sequence[int]) -> int:
    if tpow < 0 or any(e < 0 for e in exps):
        raise ValueError(f"negative exponent in t^{tpow} z^{tuple(exps)}")
    key = tpow
    for i, e in enumerate(exps):
        if e > MASK:
            raise OverflowError(f"exponent {e} out of range")
        key |= e << (BITS * (i + 1))
    if tpow > MASK:
        raise OverflowError(f"t-power {tpow} out of range")
    return key


def unpack(key: int, n: int) -> tuple[int, tuple[int, ...]]:
    return key & MASK, tuple((key >> (BITS * (i + 1))) & MASK for i in range(n))


def _zdeg(key: int, n: int) -> int:
    return sum((key >> (BITS * (i + 1))) & MASK for i in range(n))


class MultiSeries:
    __slots__ = ("n", "t_cap", "terms")

    def __init__(self, n: int, t_cap: int, terms=None):
        self.n = n
        self.t_cap = t_cap
        out = {}
        for (tpow, exps), c in (terms or {}).items():
            if len(exps) != n:
                raise DimensionMismatch(f"exponent vector {exps} has wrong length for n={n}")
            if tpow > t_cap:
                continue
            c = c if isinstance(c, UPoly) else q(c)
            if c:
                k = pack(tpow, exps)
                v = out.get(k, 0) + c
                if v:
                    out[k] = v
                else:
                    out.pop(k, None)
        self.terms = out

    @classmethod
    def _raw(cls, n, t_cap, terms) -> "MultiSeries":
        obj = cls.__new__(cls)
        obj.n, obj.t_cap, obj.terms = n, t_cap, terms
        return obj

    @classmethod
    def zero(cls, n, t_cap) -> "MultiSeries":
        return cls._raw(n, t_cap, {})

    @classmethod
    def constant(cls, c, n, t_cap) -> "MultiSeries":
        return cls(n, t_cap, {(0, (0,) * n): c})

    @classmethod
    def variable(cls, i: int, n: int, t_cap: int) -> "MultiSeries":
        return cls(n, t_cap, {(0, tuple(int(j == i) for j in range(n))): 1})

    @classmethod
    def monomial(cls, exps, n, t_cap, coeff=1, tpow=0) -> "MultiSeries":
        return cls(n, t_cap, {(tpow, tuple(exps)): coeff})

    @classmethod
    def t_power(cls, k: int, n: int, t_cap: int) -> "MultiSeries":
        return cls(n, t_cap, {(k, (0,) * n): 1})

    # inspection

    def items(self) -> Iterator[tuple[int, tuple[int, ...], object]]:
        for k, c in self.terms.items():
            tpow, exps = unpack(k, self.n)
            yield tpow, exps, c

    def as_dict(self) -> dict:
        return {(tpow, exps): c for tpow, exps, c in self.items()}

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, MultiSeries):
            return self.n == other.n and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def t_order(self) -> int | None:
        """Lowest t-power present (None for zero)."""
        return min((k & MASK for k in self.terms), default=None)

    def t_degree(self) -> int | None:
        return max((k & MASK for k in self.terms), default=None)

    def z_degree(self) -> int:
        return max((_zdeg(k, self.n) for k in self.terms), default=-1)

    def coeff(self, tpow: int, exps) -> object:
        return self.terms.get(pack(tpow, exps), Q(0))

    def t_coefficient(self, m: int) -> "MultiSeries":
        """Coefficient of t^m, as a t-free series."""
        return MultiSeries._raw(
            self.n, self.t_cap, {k - m: c for k, c in self.terms.items() if k & MASK == m}
        )

    def is_t_free(self) -> bool:
        return all(k & MASK == 0 for k in self.terms)

    # arithmetic

    def _check(self, other: "MultiSeries"):
        if self.n != other.n:
            raise DimensionMismatch(f"variable counts differ: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, MultiSeries):
            other = MultiSeries.constant(other, self.n, self.t_cap)
        self._check(other)
        out = dict(self.terms)
        T = min(self.t_cap, other.t_cap)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                del out[k]
        if T < max(self.t_cap, other.t_cap):
            out = {k: c for k, c in out.items() if k & MASK <= T}
        return MultiSeries._raw(self.n, T, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiSeries._raw(self.n, self.t_cap, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "MultiSeries":
        if not c:
            return MultiSeries.zero(self.n, self.t_cap)
        out = {}
        for k, x in self.terms.items():
            v = x * c
            if v:
                out[k] = v
        return MultiSeries._raw(self.n, self.t_cap, out)

    def __mul__(self, other):
        if not isinstance(other, MultiSeries):
            return self.scale(other)
        self._check(other)
        T = min(self.t_cap, other.t_cap)
        if not self.terms or not other.terms:
            return MultiSeries.zero(self.n, T)
        out: dict = {}
        get = out.get
        b_items = sorted(other.terms.items(), key=lambda kv: kv[0] & MASK)
        for ka, ca in self.terms.items():
            room = T - (ka & MASK)
            if room < 0:
                continue
            for kb, cb in b_items:
                if kb & MASK > room:
                    break
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        return MultiSeries._raw(self.n, T, {k: c for k, c in out.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, e: int) -> "MultiSeries":
        out = MultiSeries.constant(1, self.n, self.t_cap)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def diff(self, i: int) -> "MultiSeries":
        """Partial derivative in z_i."""
        shift = BITS * (i + 1)
        step = 1 << shift
        out = {}
        for k, c in self.terms.items():
            e = (k >> shift) & MASK
            if e:
                out[k - step] = c * e
        return MultiSeries._raw(self.n, self.t_cap, out)

    def diff_multi(self, alpha: Sequence[int]) -> "MultiSeries":
        s = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                s = s.diff(i)
        return s

    def shift_t(self, k: int) -> "MultiSeries":
        """Multiply by t^k."""
        T = self.t_cap
        return MultiSeries._raw(
            self.n, T, {key + k: c for key, c in self.terms.items() if (key & MASK) + k <= T}
        )

    def t_derivative(self) -> "MultiSeries":
        out = {}
        for k, c in self.terms.items():
            tp = k & MASK
            if tp:
                out[k - 1] = c * tp
        return MultiSeries._raw(self.n, self.t_cap, out)

    def substitute_t(self, value) -> "MultiSeries":
        """Evaluate at t = value (the result is t-free)."""
        v = q(value)
        out: dict = {}
        for k, c in self.terms.items():
            tp = k & MASK
            key = k - tp
            out[key] = out.get(key, 0) + c * v ** tp
        return MultiSeries._raw(self.n, self.t_cap, {k: c for k, c in out.items() if c})

    def truncate(self, t_cap: int) -> "MultiSeries":
        return MultiSeries._raw(
            self.n, t_cap, {k: c for k, c in self.terms.items() if k & MASK <= t_cap}
        )

    def evaluate_u(self, value) -> "MultiSeries":
        out = {}
        for k, c in self.terms.items():
            v = evaluate(c, value)
            if v:
                out[k] = v
        return MultiSeries._raw(self.n, self.t_cap, out)

    def compose(self, F: "PolyMap") -> "MultiSeries":
        return compose(self, F)

    # serialization

    def to_json(self) -> list[dict]:
        rows = sorted(self.items(), key=lambda r: (r[0], sum(r[1]), [-e for e in r[1]]))
        return [{"coeff": scalar_to_json(c), "tpow": tp, "exps": list(e)} for tp, e, c in rows]

    @classmethod
    def from_json(cls, rows: list[dict], n: int, t_cap: int) -> "MultiSeries":
        terms: dict = {}
        for row in rows:
            exps = tuple(int(e) for e in row["exps"])
            if len(exps) != n or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {row['exps']!r} for n={n}")
            key = (int(row.get("tpow", 0)), exps)
            terms[key] = terms.get(key, 0) + scalar_from_json(row["coeff"])
        return cls(n, t_cap, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for tp, e, c in sorted(self.items(), key=lambda r: (r[0], sum(r[1]), r[1])):
            mono = "*".join(
                [f"t^{tp}" if tp > 1 else "t"] * (tp > 0)
                + [f"z{i + 1}" + (f"^{x}" if x > 1 else "") for i, x in enumerate(e) if x]
            )
            cs = str(c) if isinstance(c, UPoly) else fmt(c)
            parts.append(cs + ("*" + mono if mono else ""))
        return " + ".join(parts)


class Role(str, Enum):
    MAP = "map"
    INVERSE = "inverse"
    FIELD = "field"
    CORRECTION = "correction"


@dataclass
class PolyMap:
    components: list[MultiSeries]
    role: Role = Role.FIELD

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def t_cap(self) -> int:
        return min(c.t_cap for c in self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.components == other.components

    def __iter__(self):
        return iter(self.components)

    def map(self, fn, role=None) -> "PolyMap":
        return PolyMap([fn(c) for c in self.components], role or self.role)

    def with_cap(self, t_cap: int) -> "PolyMap":
        return PolyMap(
            [MultiSeries(c.n, t_cap, c.as_dict()) for c in self.components], self.role
        )

    def is_t_free(self) -> bool:
        return all(c.is_t_free() for c in self.components)

    def is_zero(self) -> bool:
        return not any(self.components)

    @classmethod
    def identity(cls, n: int, t_cap: int) -> "PolyMap":
        return cls([MultiSeries.variable(i, n, t_cap) for i in range(n)], Role.MAP)

    @classmethod
    def from_polys(cls, polys: Sequence[dict], n: int, t_cap: int, role=Role.FIELD) -> "PolyMap":
        """Build from one {exps: coeff} dict per component (t-free)."""
        return cls(
            [MultiSeries(n, t_cap, {(0, tuple(e)): c for e, c in p.items()}) for p in polys], role
        )

    def to_json(self) -> dict:
        return {"n": self.n, "components": [c.to_json() for c in self.components]}

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict, t_cap: int, role=Role.FIELD) -> "PolyMap":
        if not isinstance(data, dict) or "n" not in data or "components" not in data:
            raise ValueError('map JSON must be an object with "n" and "components"')
        n = int(data["n"])
        comps = data["components"]
        if len(comps) != n:
            raise ValueError(f"expected {n} components, got {len(comps)}")
        out = cls([MultiSeries.from_json(rows, n, t_cap) for rows in comps], role)
        if role is Role.FIELD and not out.is_t_free():
            raise ValueError("field components must not depend on t (tpow must be 0)")
        return out


def map_from_field(H: PolyMap) -> PolyMap:
    """F_t = z - t H."""
    n, T = H.n, H.t_cap
    return PolyMap(
        [MultiSeries.variable(i, n, T) - h.shift_t(1) for i, h in enumerate(H)], Role.MAP
    )


def compose(u: MultiSeries, F: PolyMap) -> MultiSeries:
    """u(F): substitute z_i -> F_i.  Each F_i - z_i must have t-order >= 1."""
    n = u.n
    if F.n != n:
        raise DimensionMismatch(f"series has {n} variables, map has {F.n} components")
    T = min(u.t_cap, F.t_cap)
    for i, f in enumerate(F):
        dev = f - MultiSeries.variable(i, n, f.t_cap)
        if any(k & MASK == 0 for k in dev.terms):
            raise NotTAdicContraction(f"component {i} differs from z_{i + 1} at t-order 0")
    F = [f.truncate(T) for f in F]
    powers: list[dict[int, MultiSeries]] = [
        {0: MultiSeries.constant(1, n, T), 1: f} for f in F
    ]

    def power(i, e):
        cache = powers[i]
        if e not in cache:
            cache[e] = power(i, e - 1) * F[i]
        return cache[e]

    out = MultiSeries.zero(n, T)
    for tpow, exps, c in u.items():
        if tpow > T:
            continue
        term = MultiSeries.t_power(tpow, n, T).scale(c)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        out = out + term
    return out


def compose_maps(outer: PolyMap, inner: PolyMap) -> PolyMap:
    """(outer o inner)(z) = outer(inner(z))."""
    return PolyMap([compose(c, inner) for c in outer], outer.role)


def field_of(F: PolyMap) -> PolyMap:
    """Recover H from F_t = z - tH."""
    n, T = F.n, F.t_cap
    comps = []
    for i, f in enumerate(F):
        dev = MultiSeries.variable(i, n, T) - f
        comps.append(dev.t_coefficient(1))
    return PolyMap(comps, Role.FIELD)


def invert_oracle(H: PolyMap, T: int) -> PolyMap:
    """G_t = F_t^{-1} by the fixed-point iteration G <- z + t H(G); each pass fixes one more t-order."""
    if not H.is_t_free():
        raise ValueError("field H must be t-free")
    n = H.n
    H = H.with_cap(T)
    z = PolyMap.identity(n, T)
    G = z
    for _ in range(T):
        G = PolyMap(
            [z[i] + compose(H[i], G).shift_t(1) for i in range(n)], Role.INVERSE
        )
    return PolyMap(G.components, Role.INVERSE)


def inverse_slices(G: PolyMap) -> dict[int, PolyMap]:
    """N_[m](z) for 1 <= m <= T: the t^m coefficient of G_t."""
    return {
        m: PolyMap([g.t_coefficient(m) for g in G], Role.CORRECTION)
        for m in range(1, G.t_cap + 1)
    }


def correction_series(G: PolyMap) -> PolyMap:
    """N_t with G_t = z + t N_t."""
    n, T = G.n, G.t_cap
    comps = []
    for i, g in enumerate(G):
        dev = g - MultiSeries.variable(i, n, T)
        comps.append(
            MultiSeries._raw(n, T, {k - 1: c for k, c in dev.terms.items()})
        )
    return PolyMap(comps, Role.CORRECTION)


def jacobian(H: PolyMap) -> list[list[MultiSeries]]:
    return [[h.diff(j) for j in range(H.n)] for h in H]


def mat_vec(M: list[list[MultiSeries]], v: Sequence[MultiSeries]) -> list[MultiSeries]:
    n = len(v)
    out = []
    for row in M:
        acc = MultiSeries.zero(v[0].n, v[0].t_cap)
        for j in range(n):
            if row[j] and v[j]:
                acc = acc + row[j] * v[j]
        out.append(acc)
    return out


def mat_mul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), MultiSeries.zero(A[0][0].n, A[0][0].t_cap))
             for j in range(n)] for i in range(n)]


def mat_is_zero(M) -> bool:
    return not any(e for row in M for e in row)
