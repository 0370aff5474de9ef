"""Normal-ordered differential operators on truncated series and the operator NCS system.

An operator is a finite sum  sum_alpha c_alpha(z, t) d^alpha  with every
derivative to the right of its coefficient.  ``HContext`` builds the five
operator families lambda, s, phi, psi, xi attached to F_t = z - tH and the
specialization from NSym that sends Lambda_m to lambda_m.
"""

from __future__ import annotations

import threading
from functools import reduce
from itertools import product
from math import comb, factorial, prod
from typing import Iterator, Optional, Sequence

from .compositions import Composition, enumerate_compositions, mirror, pi_u, sign
from .nsym import Kind, NSymElement, families
from .rational import Q
from .series import (
    DimensionMismatch,
    MultiSeries,
    PolyMap,
    inverse_slices,
    invert_oracle,
    jacobian,
    mat_vec,
)


class OrderExceedsCap(ValueError):
    pass


class CapMismatch(ValueError):
    pass


def multi_indices(n: int, total: int) -> Iterator[tuple[int, ...]]:
    """All alpha in N^n with |alpha| = total."""
    if n == 1:
        yield (total,)
        return
    for a in range(total, -1, -1):
        for rest in multi_indices(n - 1, total - a):
            yield (a,) + rest


def monomials_up_to(n: int, deg: int) -> Iterator[tuple[int, ...]]:
    for d in range(deg + 1):
        yield from multi_indices(n, d)


def _sub_indices(alpha):
    return product(*(range(a + 1) for a in alpha))


class DiffOperator:
    __slots__ = ("n", "t_cap", "terms")

    def __init__(self, n: int, t_cap: int, terms: Optional[dict] = None):
        self.n = n
        self.t_cap = t_cap
        self.terms = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != n:
                raise DimensionMismatch(f"multi-index {alpha} has wrong length for n={n}")
            if c:
                self.terms[alpha] = c.truncate(t_cap) if c.t_cap > t_cap else c

    @classmethod
    def identity(cls, n: int, t_cap: int) -> "DiffOperator":
        return cls(n, t_cap, {(0,) * n: MultiSeries.constant(1, n, t_cap)})

    @classmethod
    def zero(cls, n: int, t_cap: int) -> "DiffOperator":
        return cls(n, t_cap)

    @classmethod
    def partial(cls, i: int, n: int, t_cap: int) -> "DiffOperator":
        return cls(n, t_cap, {tuple(int(j == i) for j in range(n)): MultiSeries.constant(1, n, t_cap)})

    @classmethod
    def multiplication(cls, c: MultiSeries) -> "DiffOperator":
        return cls(c.n, c.t_cap, {(0,) * c.n: c})

    @property
    def max_order(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def _check(self, other: "DiffOperator"):
        if self.n != other.n:
            raise DimensionMismatch(f"operator dimensions differ: {self.n} vs {other.n}")
        if self.t_cap != other.t_cap:
            raise CapMismatch(f"t-caps differ: {self.t_cap} vs {other.t_cap}")

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            v = out[a] + c if a in out else c
            if v:
                out[a] = v
            else:
                out.pop(a, None)
        return _raw(self.n, self.t_cap, out)

    def __neg__(self):
        return _raw(self.n, self.t_cap, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "DiffOperator":
        if not c:
            return DiffOperator.zero(self.n, self.t_cap)
        return _raw(self.n, self.t_cap, {a: s.scale(c) for a, s in self.terms.items() if s.scale(c)})

    def times_series(self, c: MultiSeries) -> "DiffOperator":
        """Left multiplication by a series coefficient."""
        out = {}
        for a, s in self.terms.items():
            v = c * s
            if v:
                out[a] = v
        return _raw(self.n, self.t_cap, out)

    def shift_t(self, k: int) -> "DiffOperator":
        out = {}
        for a, s in self.terms.items():
            v = s.shift_t(k)
            if v:
                out[a] = v
        return _raw(self.n, self.t_cap, out)

    def t_coefficient(self, m: int) -> "DiffOperator":
        out = {}
        for a, s in self.terms.items():
            v = s.t_coefficient(m)
            if v:
                out[a] = v
        return _raw(self.n, self.t_cap, out)

    def apply(self, s: MultiSeries) -> MultiSeries:
        return op_apply(self, s)

    def __mul__(self, other):
        if isinstance(other, DiffOperator):
            return op_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __call__(self, s: MultiSeries) -> MultiSeries:
        return op_apply(self, s)

    def is_derivation_form(self) -> bool:
        """True when every term is first order (no constant term)."""
        return all(sum(a) == 1 for a in self.terms)

    def raises_degree_by_at_least(self, k: int) -> bool:
        """Filtration predicate: each coefficient c_alpha has z-order >= |alpha| + k."""
        for a, c in self.terms.items():
            for _, exps, _ in c.items():
                if sum(exps) < sum(a) + k:
                    return False
        return True

    def to_json(self) -> list[dict]:
        return [
            {"alpha": list(a), "coeff": c.to_json()}
            for a, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), [-x for x in kv[0]]))
        ]

    @classmethod
    def from_json(cls, rows, n: int, t_cap: int) -> "DiffOperator":
        return cls(n, t_cap, {tuple(r["alpha"]): MultiSeries.from_json(r["coeff"], n, t_cap) for r in rows})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for a, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            d = "".join(f"d{i + 1}" + (f"^{x}" if x > 1 else "") for i, x in enumerate(a) if x)
            parts.append(f"({c})" + (f"*{d}" if d else ""))
        return " + ".join(parts)


def _raw(n, t_cap, terms) -> DiffOperator:
    op = DiffOperator.__new__(DiffOperator)
    op.n, op.t_cap, op.terms = n, t_cap, terms
    return op


def _derivatives(s: MultiSeries, alphas) -> dict:
    """d^alpha s for every alpha in ``alphas``, sharing intermediate results."""
    cache = {(0,) * s.n: s}

    def get(alpha):
        if alpha in cache:
            return cache[alpha]
        i = next(j for j, a in enumerate(alpha) if a)
        lower = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
        cache[alpha] = get(lower).diff(i)
        return cache[alpha]

    return {a: get(a) for a in alphas}


def op_apply(op: DiffOperator, s: MultiSeries) -> MultiSeries:
    if op.n != s.n:
        raise DimensionMismatch(f"operator has n={op.n}, series has n={s.n}")
    T = min(op.t_cap, s.t_cap)
    ders = _derivatives(s, op.terms)
    out = MultiSeries.zero(s.n, T)
    for a, c in op.terms.items():
        d = ders[a]
        if d:
            out = out + c * d
    return out


def op_mul(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    """Normal-ordered a o b via the Leibniz rule."""
    a._check(b)
    n, T = a.n, a.t_cap
    out: dict = {}
    for beta, d in b.terms.items():
        gammas = set()
        for alpha in a.terms:
            gammas.update(_sub_indices(alpha))
        ders = _derivatives(d, gammas)
        for alpha, c in a.terms.items():
            for gamma in _sub_indices(alpha):
                dg = ders[gamma]
                if not dg:
                    continue
                mult = prod(comb(x, y) for x, y in zip(alpha, gamma))
                term = c * dg
                if not term:
                    continue
                if mult != 1:
                    term = term.scale(mult)
                key = tuple(x - y + z for x, y, z in zip(alpha, gamma, beta))
                out[key] = out[key] + term if key in out else term
    return _raw(n, T, {k: v for k, v in out.items() if v})


def derivation(field: Sequence[MultiSeries] | PolyMap) -> DiffOperator:
    """[u d/dz] = sum_i u_i d/dz_i."""
    comps = list(field)
    n = comps[0].n
    if len(comps) != n:
        raise DimensionMismatch(f"field has {len(comps)} components for n={n}")
    T = min(c.t_cap for c in comps)
    terms = {}
    for i, c in enumerate(comps):
        if c:
            terms[tuple(int(j == i) for j in range(n))] = c
    return DiffOperator(n, T, terms)


def op_equal_on_testspace(a: DiffOperator, b: DiffOperator, deg: int):
    """(equal, witness): compare actions on every monomial of total degree <= deg.

    An operator of order <= k vanishes iff it kills every monomial of degree
    <= k, so deg >= max order makes the comparison an exact equality test.
    """
    if a.n != b.n:
        raise DimensionMismatch("operators act on different variable sets")
    T = min(a.t_cap, b.t_cap)
    for exps in monomials_up_to(a.n, deg):
        m = MultiSeries.monomial(exps, a.n, T)
        if op_apply(a, m) != op_apply(b, m):
            return False, exps
    return True, None


def default_test_degree(H: PolyMap, T: int) -> int:
    d = max((c.z_degree() for c in H), default=1)
    return T * max(d - 1, 0) + 2


def lambda_closed_form(H: PolyMap, m: int, T: Optional[int] = None) -> DiffOperator:
    """sum over |alpha| = m of H^alpha / alpha! d^alpha (commuting z)."""
    n = H.n
    T = H.t_cap if T is None else T
    terms = {}
    pw = [[MultiSeries.constant(1, n, T)] for _ in range(n)]
    for i in range(n):
        for _ in range(m):
            pw[i].append(pw[i][-1] * H[i])
    for alpha in multi_indices(n, m):
        c = reduce(lambda x, y: x * y, (pw[i][a] for i, a in enumerate(alpha) if a),
                   MultiSeries.constant(1, n, T))
        if c:
            terms[alpha] = c.scale(Q(1, prod(factorial(a) for a in alpha)))
    return DiffOperator(n, T, terms)


class HContext:
    """Operator families for F_t = z - tH up to t-order T, with shared caches."""

    def __init__(self, H: PolyMap, T: int):
        if not H.is_t_free():
            raise ValueError("field H must be t-free")
        if T < 1:
            raise ValueError("T must be >= 1")
        self.H = H.with_cap(T)
        self.T = T
        self.n = H.n
        self._lock = threading.RLock()
        self._cache: dict = {}

    def _memo(self, key, build):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = build()
            return self._cache[key]

    def _check_order(self, m: int):
        if not 1 <= m <= self.T:
            raise OrderExceedsCap(f"order {m} outside 1..{self.T}")

    # vector fields

    def C(self, m: int) -> list[MultiSeries]:
        """C_1 = H, C_m = [C_{m-1} d/dz] H."""
        self._check_order(m)

        def build():
            if m == 1:
                return list(self.H)
            prev = derivation(self.C(m - 1))
            return [prev.apply(h) for h in self.H]

        return self._memo(("C", m), build)

    def C_closed(self, m: int) -> list[MultiSeries]:
        """(JH)^{m-1} H by repeated matrix-vector products."""
        J = self._memo(("JH",), lambda: jacobian(self.H))
        v = list(self.H)
        for _ in range(m - 1):
            v = mat_vec(J, v)
        return v

    def inverse(self) -> PolyMap:
        return self._memo(("G",), lambda: invert_oracle(self.H, self.T))

    def N(self, m: int) -> list[MultiSeries]:
        self._check_order(m)
        return self._memo(("N", m), lambda: list(inverse_slices(self.inverse())[m]))

    # operator families

    def lam(self, m: int) -> DiffOperator:
        self._check_order(m)
        return self._memo(("lambda", m), lambda: lambda_closed_form(self.H, m, self.T))

    def psi(self, m: int) -> DiffOperator:
        self._check_order(m)
        return self._memo(("psi", m), lambda: derivation(self.C(m)))

    def xi(self, m: int) -> DiffOperator:
        self._check_order(m)
        return self._memo(("xi", m), lambda: derivation(self.N(m)))

    def s(self, m: int) -> DiffOperator:
        self._check_order(m)
        return self._memo(("s", m), lambda: self.specialize(families(self.T)[Kind.S][m]))

    def phi(self, m: int) -> DiffOperator:
        self._check_order(m)
        return self._memo(("phi", m), lambda: self.specialize(families(self.T)[Kind.PHI][m]))

    def family(self, kind: str, m: int) -> DiffOperator:
        return {
            "lambda": self.lam, "s": self.s, "phi": self.phi, "psi": self.psi, "xi": self.xi,
        }[_kind_name(kind)](m)

    # specialization Lambda_m -> lambda_m

    def specialize(self, a: NSymElement) -> DiffOperator:
        if any(sum(w) > self.T for w in a.terms):
            raise CapMismatch(f"element has words heavier than T={self.T}")
        return self._specialize_terms(a.terms)

    def _specialize_terms(self, terms: dict) -> DiffOperator:
        # Horner scheme on the first letter; suffix elements are memoized up to scale
        if not terms:
            return DiffOperator.zero(self.n, self.T)
        lead_word = min(terms, key=lambda w: (len(w), w))
        lead = terms[lead_word]
        key = ("spec", frozenset((w, c / lead) for w, c in terms.items()))
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            buckets: dict = {}
            out = DiffOperator.zero(self.n, self.T)
            for w, c in terms.items():
                if not w:
                    out = out + DiffOperator.identity(self.n, self.T).scale(c / lead)
                else:
                    buckets.setdefault(w[0], {})[w[1:]] = c / lead
            for k in sorted(buckets):
                out = out + op_mul(self.lam(k), self._specialize_terms(buckets[k]))
            with self._lock:
                self._cache[key] = out
            hit = out
        return hit.scale(lead)

    def specialize_word(self, kind: str, word: Composition) -> DiffOperator:
        """Normal-ordered product of family operators w_{i1} o ... o w_{ik}."""
        kind = _kind_name(kind)

        def build():
            if not word:
                return DiffOperator.identity(self.n, self.T)
            return op_mul(self.specialize_word(kind, word[:-1]), self.family(kind, word[-1]))

        return self._memo(("word", kind, tuple(word)), build)

    # actions of words on the coordinate functions

    def word_on_z(self, kind: str, word: Composition) -> list[MultiSeries]:
        """w^I z = w_{i1}(w_{i2}(...w_{ik}(z))) componentwise."""
        kind = _kind_name(kind)

        def build():
            if not word:
                return [MultiSeries.variable(i, self.n, self.T) for i in range(self.n)]
            if len(word) == 1 and kind in ("psi", "xi"):
                return list(self.C(word[0]) if kind == "psi" else self.N(word[0]))
            inner = self.word_on_z(kind, word[1:])
            op = self.family(kind, word[0])
            return [op.apply(c) for c in inner]

        return self._memo(("wz", kind, tuple(word)), build)

    def word_on(self, kind: str, word: Composition, s: MultiSeries) -> MultiSeries:
        kind = _kind_name(kind)
        for k in reversed(word):
            s = self.family(kind, k).apply(s)
        return s


def _kind_name(kind) -> str:
    if isinstance(kind, Kind):
        kind = kind.value
    k = str(kind).lower()
    if k not in ("lambda", "s", "phi", "psi", "xi"):
        raise ValueError(f"unknown family {kind!r}")
    return k


def family_operator(H: PolyMap, kind: str, m: int, T: Optional[int] = None,
                    ctx: Optional[HContext] = None) -> DiffOperator:
    ctx = ctx or HContext(H, T if T is not None else max(m, 1))
    if _kind_name(kind) == "psi" and ctx.C(m) != ctx.C_closed(m):
        raise AssertionError(f"C_{m}: recursion and (JH)^(m-1)H disagree")
    return ctx.family(kind, m)


def specialize(a: NSymElement, H: PolyMap, T: Optional[int] = None,
               ctx: Optional[HContext] = None) -> DiffOperator:
    ctx = ctx or HContext(H, T if T is not None else a.cap)
    return ctx.specialize(a)


def lambda_psi_rhs(ctx: HContext, m: int) -> DiffOperator:
    """(-1)^m sum over |I| = m of (-1)^l(I) / pi_u(bar I) psi^I."""
    out = DiffOperator.zero(ctx.n, ctx.T)
    for I in enumerate_compositions(m):
        c = Q(sign(m + len(I)), pi_u(mirror(I)))
        out = out + ctx.specialize_word("psi", I).scale(c)
    return out


def verify_lambda_psi_identity(H: PolyMap, m: int, deg: Optional[int] = None,
                               ctx: Optional[HContext] = None) -> bool:
    """(1/m!)[H(w) d/dz]^m |_{w=z} equals the signed psi-word sum, on the test space."""
    ctx = ctx or HContext(H, m)
    deg = default_test_degree(H, m) if deg is None else deg
    lhs = lambda_closed_form(ctx.H, m, ctx.T)
    rhs = lambda_psi_rhs(ctx, m)
    equal, _ = op_equal_on_testspace(lhs, rhs, deg)
    return equal


def ncs_axioms(ctx: HContext, T: Optional[int] = None) -> dict[str, bool]:
    """The five defining relations of the operator system, slice by slice up to T.

    Operators are compared in normal-ordered form, which is canonical.
    """
    T = ctx.T if T is None else T
    one = DiffOperator.identity(ctx.n, ctx.T)

    def lam(k):
        return one if k == 0 else ctx.lam(k)

    def s(k):
        return one if k == 0 else ctx.s(k)

    zero = DiffOperator.zero(ctx.n, ctx.T)
    ok = {"f(-t)g(t)=1": True, "g(t)f(-t)=1": True, "exp(d(t))=g(t)": True,
          "g'(t)=g(t)h(t)": True, "g'(t)=m(t)g(t)": True}
    # P[k][m]: sum over |I| = m, l(I) = k of prod phi_i / i
    P = {0: {0: one}}
    for m in range(1, T + 1):
        left = reduce(lambda a, k: a + op_mul(lam(k), s(m - k)).scale(sign(k)), range(m + 1), zero)
        right = reduce(lambda a, k: a + op_mul(s(m - k), lam(k)).scale(sign(k)), range(m + 1), zero)
        ok["f(-t)g(t)=1"] &= not left
        ok["g(t)f(-t)=1"] &= not right
        for k in range(1, m + 1):
            acc = zero
            for j in range(1, m - k + 2):
                prev = P.get(k - 1, {}).get(m - j)
                if prev is not None and prev:
                    acc = acc + op_mul(ctx.phi(j), prev).scale(Q(1, j))
            P.setdefault(k, {})[m] = acc
        expo = reduce(lambda a, k: a + P[k][m].scale(Q(1, factorial(k))), range(1, m + 1), zero)
        ok["exp(d(t))=g(t)"] &= expo == ctx.s(m)
        target = ctx.s(m).scale(m)
        gh = reduce(lambda a, k: a + op_mul(s(k), ctx.psi(m - k)), range(m), zero)
        mg = reduce(lambda a, k: a + op_mul(ctx.xi(m - k), s(k)), range(m), zero)
        ok["g'(t)=g(t)h(t)"] &= gh == target
        ok["g'(t)=m(t)g(t)"] &= mg == target
    return ok


def action_semantics(ctx: HContext, u: MultiSeries) -> dict[str, bool]:
    """f(-t)u = u(F_t) and g(t)u = u(G_t), against direct composition."""
    from .series import compose, map_from_field

    T = ctx.T
    u = u.truncate(T)
    f_u, g_u = u, u
    for m in range(1, T + 1):
        f_u = f_u + ctx.lam(m).apply(u).shift_t(m).scale(sign(m))
        g_u = g_u + ctx.s(m).apply(u).shift_t(m)
    return {
        "f(-t)u=u(F_t)": f_u == compose(u, map_from_field(ctx.H)),
        "g(t)u=u(G_t)": g_u == compose(u, ctx.inverse()),
    }
