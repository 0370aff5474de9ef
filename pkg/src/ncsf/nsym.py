"""The free algebra NSym on generators Lambda_1, Lambda_2, ... and its NCSF families.

Elements are sparse maps from words (compositions) to coefficients, which are
rationals or polynomials in a central parameter u.  Every element carries a
weight cap N; words heavier than N are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import factorial

from .compositions import Composition
from .rational import Q, UPoly, evaluate, q, scalar_from_json, scalar_to_json


class CapMismatch(ValueError):
    pass


class Kind(str, Enum):
    LAMBDA = "Lambda"
    S = "S"
    PHI = "Phi"
    PSI = "Psi"
    XI = "Xi"


def _coerce(c):
    return c if isinstance(c, UPoly) else q(c)


class NSymElement:
    __slots__ = ("terms", "cap")

    def __init__(self, terms=None, cap: int = 7):
        self.cap = cap
        out = {}
        for word, c in (terms or {}).items():
            word = tuple(word)
            if sum(word) > cap:
                continue
            c = _coerce(c)
            if c:
                out[word] = c
        self.terms = out

    @classmethod
    def _raw(cls, terms: dict, cap: int) -> "NSymElement":
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.cap = cap
        return obj

    @classmethod
    def one(cls, cap: int) -> "NSymElement":
        return cls._raw({(): Q(1)}, cap)

    @classmethod
    def zero(cls, cap: int) -> "NSymElement":
        return cls._raw({}, cap)

    @classmethod
    def word(cls, word, cap: int, coeff=1) -> "NSymElement":
        return cls({tuple(word): coeff}, cap)

    @classmethod
    def generator(cls, m: int, cap: int) -> "NSymElement":
        return cls.word((m,), cap)

    def _check(self, other: "NSymElement"):
        if self.cap != other.cap:
            raise CapMismatch(f"weight caps differ: {self.cap} vs {other.cap}")

    def __add__(self, other):
        if not isinstance(other, NSymElement):
            other = NSymElement({(): other}, self.cap)
        self._check(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            v = out.get(w, 0) + c
            if v:
                out[w] = v
            else:
                out.pop(w, None)
        return NSymElement._raw(out, self.cap)

    __radd__ = __add__

    def __neg__(self):
        return NSymElement._raw({w: -c for w, c in self.terms.items()}, self.cap)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "NSymElement":
        c = _coerce(c)
        if not c:
            return NSymElement.zero(self.cap)
        out = {}
        for w, x in self.terms.items():
            v = x * c
            if v:
                out[w] = v
        return NSymElement._raw(out, self.cap)

    def __mul__(self, other):
        if not isinstance(other, NSymElement):
            return self.scale(other)
        self._check(other)
        cap = self.cap
        out: dict = {}
        for wa, ca in self.terms.items():
            room = cap - sum(wa)
            for wb, cb in other.terms.items():
                if sum(wb) > room:
                    continue
                w = wa + wb
                v = out.get(w, 0) + ca * cb
                if v:
                    out[w] = v
                else:
                    out.pop(w, None)
        return NSymElement._raw(out, cap)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, NSymElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, word):
        return self.terms.get(tuple(word), Q(0))

    def homogeneous(self, m: int) -> "NSymElement":
        return NSymElement._raw({w: c for w, c in self.terms.items() if sum(w) == m}, self.cap)

    def with_cap(self, cap: int) -> "NSymElement":
        return NSymElement(self.terms, cap)

    def evaluate_u(self, value) -> "NSymElement":
        return NSymElement({w: evaluate(c, value) for w, c in self.terms.items()}, self.cap)

    def to_json(self) -> list[dict]:
        return [
            {"word": list(w), "coeff": scalar_to_json(c)}
            for w, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))
        ]

    @classmethod
    def from_json(cls, data: list[dict], cap: int) -> "NSymElement":
        return cls({tuple(d["word"]): scalar_from_json(d["coeff"]) for d in data}, cap)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            parts.append(f"{c}*L{list(w)}" if w else f"{c}")
        return " + ".join(parts)


def omega_lambda(a: NSymElement) -> NSymElement:
    """Anti-involution fixing every Lambda_m: reverses each word."""
    return NSymElement._raw({w[::-1]: c for w, c in a.terms.items()}, a.cap)


def tau(a: NSymElement) -> NSymElement:
    """Algebra involution with Lambda_m -> (-1)^m S_m."""
    fam = families(a.cap)
    images = {m: fam[Kind.S][m].scale(-1 if m % 2 else 1) for m in range(1, a.cap + 1)}
    out = NSymElement.zero(a.cap)
    for w, c in a.terms.items():
        term = NSymElement.one(a.cap)
        for letter in w:
            term = term * images[letter]
        out = out + term.scale(c)
    return out


# NCSF families

@dataclass(frozen=True)
class NcsfFamily:
    kind: Kind
    elements: dict  # m -> NSymElement

    def __getitem__(self, m: int) -> NSymElement:
        return self.elements[m]


@lru_cache(maxsize=None)
def families(N: int) -> dict:
    """Solve the five defining equations in NSym up to weight N.

    S from lambda(-t) sigma(t) = 1, Phi from Phi(t) = log sigma(t),
    Psi from sigma' = sigma psi and Xi from sigma' = xi sigma.
    """
    if N < 1:
        raise ValueError("weight cap must be >= 1")
    one = NSymElement.one(N)
    lam = {m: NSymElement.generator(m, N) for m in range(1, N + 1)}

    S = {0: one}
    for m in range(1, N + 1):
        acc = NSymElement.zero(N)
        for k in range(1, m + 1):
            term = lam[k] * S[m - k]
            acc = acc + (term if k % 2 else -term)
        S[m] = acc

    # log sigma(t) = sum_j (-1)^(j-1) (sigma - 1)^j / j, read off weight by weight
    sigma_minus_one = NSymElement.zero(N)
    for m in range(1, N + 1):
        sigma_minus_one = sigma_minus_one + S[m]
    log_sigma = NSymElement.zero(N)
    power = one
    for j in range(1, N + 1):
        power = power * sigma_minus_one
        log_sigma = log_sigma + power.scale(Q(1 if j % 2 else -1, j))
    Phi = {m: log_sigma.homogeneous(m).scale(m) for m in range(1, N + 1)}

    Psi, Xi = {}, {}
    for m in range(1, N + 1):
        acc = S[m].scale(m)
        for k in range(1, m):
            acc = acc - S[m - k] * Psi[k]
        Psi[m] = acc
        acc = S[m].scale(m)
        for k in range(1, m):
            acc = acc - Xi[k] * S[m - k]
        Xi[m] = acc

    S.pop(0)
    return {
        Kind.LAMBDA: NcsfFamily(Kind.LAMBDA, lam),
        Kind.S: NcsfFamily(Kind.S, S),
        Kind.PHI: NcsfFamily(Kind.PHI, Phi),
        Kind.PSI: NcsfFamily(Kind.PSI, Psi),
        Kind.XI: NcsfFamily(Kind.XI, Xi),
    }


def compute_family(kind, N: int) -> NcsfFamily:
    return families(N)[Kind(kind)]


@lru_cache(maxsize=None)
def family_word(kind, word: Composition, N: int) -> NSymElement:
    """The product F_{i1} F_{i2} ... F_{ik} of family members, in the Lambda basis."""
    kind = Kind(kind)
    if not word:
        return NSymElement.one(N)
    return family_word(kind, word[:-1], N) * families(N)[kind][word[-1]]


def generating_series(kind, N: int) -> NSymElement:
    """The family's generating function with t absorbed into word weight.

    lambda(t), sigma(t) include the constant 1; Phi(t) = sum Phi_m/m;
    psi(t), xi(t) are returned as t * psi(t), t * xi(t).
    """
    kind = Kind(kind)
    fam = families(N)[kind]
    acc = NSymElement.zero(N)
    for m in range(1, N + 1):
        term = fam[m]
        if kind is Kind.PHI:
            term = term.scale(Q(1, m))
        acc = acc + term
    if kind in (Kind.LAMBDA, Kind.S):
        acc = acc + NSymElement.one(N)
    return acc


def exp_series(x: NSymElement) -> NSymElement:
    """exp(x) for x without constant term, truncated at x.cap."""
    if () in x.terms:
        raise ValueError("exponential needs an element without constant term")
    out = NSymElement.one(x.cap)
    power = NSymElement.one(x.cap)
    for j in range(1, x.cap + 1):
        power = power * x
        if not power:
            break
        out = out + power.scale(Q(1, factorial(j)))
    return out


def t_derivative(a: NSymElement) -> NSymElement:
    """d/dt when t-power equals word weight, result shifted back by one weight."""
    return NSymElement._raw({w: c * sum(w) for w, c in a.terms.items() if w}, a.cap)


def defining_residuals(N: int) -> dict[str, NSymElement]:
    """Residuals of the five defining equations; all must vanish.

    Weights encode t-powers, so an equation in t becomes an equation between
    elements; derivative identities are compared after multiplying by t.
    """
    lam = generating_series(Kind.LAMBDA, N)
    sigma = generating_series(Kind.S, N)
    lam_neg = NSymElement._raw(
        {w: (c if sum(w) % 2 == 0 else -c) for w, c in lam.terms.items()}, N
    )
    phi = generating_series(Kind.PHI, N)
    t_psi = generating_series(Kind.PSI, N)
    t_xi = generating_series(Kind.XI, N)
    one = NSymElement.one(N)
    t_dsigma = t_derivative(sigma)
    return {
        "lambda(-t)sigma(t)-1": lam_neg * sigma - one,
        "sigma(t)lambda(-t)-1": sigma * lam_neg - one,
        "exp(Phi(t))-sigma(t)": exp_series(phi) - sigma,
        "sigma'(t)-sigma(t)psi(t)": t_dsigma - sigma * t_psi,
        "sigma'(t)-xi(t)sigma(t)": t_dsigma - t_xi * sigma,
    }
