"""Closed forms for exp(-u Phi(t)) in each NCSF basis, checked against direct exponentiation.

Word weight carries the t-power, so the coefficient of t^m is the weight-m
component of a single NSymElement.  ``u`` is either symbolic (UPoly
coefficients) or a rational value.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

from .compositions import (
    Composition,
    EmptyComposition,
    coarsenings,
    compositions_up_to,
    mirror,
    rel_length,
    rel_pi_u,
    sign,
    sp,
)
from .nsym import Kind, NSymElement, exp_series, families, family_word
from .rational import Q, UPoly, binom_u, q

SYMBOLIC = "symbolic"


def _u_power(k: int) -> UPoly:
    return UPoly([0] * k + [1])


def _coarse_sum(I: Composition, term: Callable[[Composition], object]):
    acc = UPoly()
    for J in coarsenings(I):
        acc = acc + term(J)
    return acc


# coefficient of the basis word I, as a polynomial in u

def _phi_form(I):
    return UPoly([0] * len(I) + [Q(sign(len(I)), sp(I))])


def _lambda_lemma(I):
    inner = _coarse_sum(I, lambda J: _u_power(len(J)) * Q(sign(len(J)), factorial(len(J)) * rel_length(I, J)))
    return inner * sign(sum(I) - len(I))


def _s_lemma(I):
    inner = _coarse_sum(I, lambda J: _u_power(len(J)) * Q(1, factorial(len(J)) * rel_length(I, J)))
    return inner * sign(len(I))


def _double_sum(I, pi_u_of):
    acc = UPoly()
    for K in coarsenings(I):
        for J in coarsenings(K):
            c = Q(sign(len(K)), pi_u_of(I, K) * rel_length(K, J) * factorial(len(J)))
            acc = acc + _u_power(len(J)) * c
    return acc


def _psi_lemma(I):
    return _double_sum(I, rel_pi_u)


def _xi_lemma(I):
    return _double_sum(I, lambda I_, K: rel_pi_u(mirror(I_), mirror(K)))


def _lambda_binom(I):
    return binom_u(len(I)) * sign(sum(I))


def _s_binom(I):
    return binom_u(len(I), -1)


def _psi_binom(I):
    return _coarse_sum(I, lambda J: binom_u(len(J), -1) / rel_pi_u(I, J))


def _xi_binom(I):
    # image of the Psi form under tau; the printed form with mirrored pi_u
    # (kept as _xi_binom_printed) already disagrees at I = (1, 2)
    return _coarse_sum(I, lambda J: binom_u(len(J)) / rel_pi_u(I, J)) * sign(len(I))


def _xi_binom_printed(I):
    return _coarse_sum(I, lambda J: binom_u(len(J)) / rel_pi_u(mirror(I), mirror(J))) * sign(len(I))


# form id -> (basis, coefficient function)
FORMS: dict[str, tuple[Kind, Callable]] = {
    "lemma-phi": (Kind.PHI, _phi_form),
    "lemma-lambda": (Kind.LAMBDA, _lambda_lemma),
    "lemma-s": (Kind.S, _s_lemma),
    "lemma-psi": (Kind.PSI, _psi_lemma),
    "lemma-xi": (Kind.XI, _xi_lemma),
    "binomial-lambda": (Kind.LAMBDA, _lambda_binom),
    "binomial-s": (Kind.S, _s_binom),
    "binomial-psi": (Kind.PSI, _psi_binom),
    "binomial-xi": (Kind.XI, _xi_binom),
}


def form_coefficient(form: str, I: Composition, u_mode=SYMBOLIC):
    """Coefficient of t^|I| F^I in the named closed form, at the given u."""
    c = FORMS[form][1](I)
    return c if u_mode == SYMBOLIC else c(u_mode)


def _scalar(c, u_mode):
    return c if u_mode == SYMBOLIC else c(u_mode)


def exp_phi_direct(u_mode, N: int) -> NSymElement:
    """exp(-u Phi(t)) by exponentiating the Phi series."""
    phi = families(N)[Kind.PHI]
    minus_u = UPoly((0, -1)) if u_mode == SYMBOLIC else -q(u_mode)
    x = NSymElement.zero(N)
    for m in range(1, N + 1):
        x = x + phi[m].scale(minus_u * Q(1, m))
    return exp_series(x)


def exp_phi_form(form: str, u_mode, N: int) -> NSymElement:
    kind, coeff = FORMS[form]
    out = NSymElement.one(N)
    for I in compositions_up_to(N):
        c = _scalar(coeff(I), u_mode)
        if c:
            out = out + family_word(kind, I, N).scale(c)
    return out


@dataclass
class ExpPhiReport:
    N: int
    u_mode: object
    direct: NSymElement
    agreement: dict[str, bool]

    @property
    def slices(self) -> list[NSymElement]:
        return [self.direct.homogeneous(m) for m in range(self.N + 1)]

    @property
    def ok(self) -> bool:
        return all(self.agreement.values())


def exp_phi_series(u_mode, N: int) -> ExpPhiReport:
    if N < 1:
        raise ValueError("N must be >= 1")
    if u_mode != SYMBOLIC:
        u_mode = q(u_mode)
    direct = exp_phi_direct(u_mode, N)
    agreement = {form: exp_phi_form(form, u_mode, N) == direct for form in FORMS}
    return ExpPhiReport(N, u_mode, direct, agreement)


def binomial_identity_sides(I: Composition) -> tuple[UPoly, UPoly]:
    if not I:
        raise EmptyComposition("binomial identity needs a nonempty composition")
    lhs = _coarse_sum(
        I, lambda J: _u_power(len(J)) * Q(sign(len(J)), factorial(len(J)) * rel_length(I, J))
    )
    rhs = binom_u(len(I)) * sign(len(I))
    return lhs, rhs


def binomial_identity_check(I: Composition) -> bool:
    lhs, rhs = binomial_identity_sides(tuple(I))
    return lhs == rhs


def group_law_holds(N: int, u1, u2) -> bool:
    """exp(-u1 Phi) exp(-u2 Phi) == exp(-(u1+u2) Phi) at rational u1, u2."""
    a = exp_phi_direct(q(u1), N)
    b = exp_phi_direct(q(u2), N)
    return a * b == exp_phi_direct(q(u1) + q(u2), N)


def group_law_grid(N: int) -> bool:
    """Group law on an (N+1)x(N+1) grid; u-degree at weight m is <= m, so the grid decides it."""
    sym = exp_phi_direct(SYMBOLIC, N)
    grid = range(N + 1)
    cache = {k: sym.evaluate_u(k) for k in range(2 * N + 1)}
    return all(cache[a] * cache[b] == cache[a + b] for a in grid for b in grid)
