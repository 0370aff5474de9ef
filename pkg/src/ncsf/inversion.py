"""Inversion formulas, Taylor expansions, D-Log, formal flows and C_m, all for F_t = z - tH.

Every formula is evaluated through the operator families of ``HContext`` and
checked against the fixed-point oracle.  Coefficient tables are kept as plain
functions of compositions so the same tables can be checked in NSym.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import permutations
from math import comb
from typing import Callable, Optional, Sequence

from .compositions import (
    c_single,
    coarsenings,
    compositions_up_to,
    enumerate_compositions,
    fp,
    lp,
    mirror,
    pi_u,
    rel_pi_u,
    rel_sp,
    sign,
)
from .diffops import HContext, derivation
from .exp_phi import SYMBOLIC, form_coefficient
from .nsym import Kind, NSymElement, families, family_word
from .rational import Q, UPoly, fmt, q
from .series import (
    MultiSeries,
    PolyMap,
    Role,
    compose,
    compose_maps,
    map_from_field,
)


class DepthTooLarge(ValueError):
    pass


class UnknownMethod(ValueError):
    pass


def _context(H: PolyMap, T: int, ctx: Optional[HContext]) -> HContext:
    if ctx is not None:
        if ctx.T < T:
            raise ValueError(f"context has t-order {ctx.T} < {T}")
        return ctx
    return HContext(H, T)


def _zero_vec(ctx: HContext) -> list[MultiSeries]:
    return [MultiSeries.zero(ctx.n, ctx.T) for _ in range(ctx.n)]


def _add_scaled(acc: list[MultiSeries], vec: Sequence[MultiSeries], c) -> list[MultiSeries]:
    return [a + v.scale(c) for a, v in zip(acc, vec)]


def _word_sum_on_z(ctx: HContext, kind: str, words, coeff: Callable) -> list[MultiSeries]:
    acc = _zero_vec(ctx)
    for I in words:
        c = coeff(I)
        if c:
            acc = _add_scaled(acc, ctx.word_on_z(kind, I), c)
    return acc


# inversion

@dataclass
class InversionReport:
    method: str
    T: int
    slices: dict  # m -> PolyMap of t-free series
    agreement: dict  # m -> bool against the oracle
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.agreement.values()) and all(v for v in self.extra.values() if isinstance(v, bool))

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "T": self.T,
            "ok": self.ok,
            "agreement": {str(m): v for m, v in sorted(self.agreement.items())},
            "slices": [
                {"m": m, "components": [c.to_json() for c in self.slices[m]]}
                for m in sorted(self.slices)
            ],
            **({"checks": dict(sorted(self.extra.items()))} if self.extra else {}),
        }


def _report(method: str, ctx: HContext, slices: dict, t0: float, extra=None) -> InversionReport:
    oracle = {m: list(ctx.N(m)) for m in range(1, ctx.T + 1)}
    agreement = {m: slices[m] == oracle[m] for m in slices}
    pm = {m: PolyMap(v, Role.CORRECTION) for m, v in slices.items()}
    return InversionReport(method, ctx.T, pm, agreement, time.perf_counter() - t0, extra or {})


def invert_oracle_report(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> InversionReport:
    t0 = time.perf_counter()
    ctx = _context(H, T, ctx)
    return _report("oracle", ctx, {m: list(ctx.N(m)) for m in range(1, T + 1)}, t0)


def invert_via_lambda(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> InversionReport:
    """N_[m] = (-1)^m sum over |I| = m of (-1)^l(I) lambda^I z."""
    t0 = time.perf_counter()
    ctx = _context(H, T, ctx)
    slices = {
        m: _word_sum_on_z(ctx, "lambda", enumerate_compositions(m), lambda I, m=m: sign(m + len(I)))
        for m in range(1, T + 1)
    }
    return _report("lambda", ctx, slices, t0)


def invert_via_psi(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> InversionReport:
    """N_[m] = sum over |I| = m of psi^I z / pi_u(I); also reports the (JH)^(m-1)H route."""
    t0 = time.perf_counter()
    ctx = _context(H, T, ctx)
    slices = {
        m: _word_sum_on_z(ctx, "psi", enumerate_compositions(m), lambda I: Q(1, pi_u(I)))
        for m in range(1, T + 1)
    }
    # psi_m as [(JH)^(m-1) H d/dz], applied word by word
    closed = {k: derivation(ctx.C_closed(k)) for k in range(1, T + 1)}
    memo: dict = {}

    def on_z(I):
        if I not in memo:
            if len(I) == 1:
                memo[I] = ctx.C_closed(I[0])
            else:
                memo[I] = [closed[I[0]].apply(c) for c in on_z(I[1:])]
        return memo[I]

    closed_route = {}
    for m in range(1, T + 1):
        acc = _zero_vec(ctx)
        for I in enumerate_compositions(m):
            acc = _add_scaled(acc, on_z(I), Q(1, pi_u(I)))
        closed_route[m] = acc
    extra = {"closed_form_route_agrees": closed_route == slices}
    return _report("psi", ctx, slices, t0, extra)


def invert_via_cI(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> InversionReport:
    """N_[m] = sum over |I| = m of c_I psi^I z."""
    t0 = time.perf_counter()
    ctx = _context(H, T, ctx)
    slices = {
        m: _word_sum_on_z(ctx, "psi", enumerate_compositions(m), c_single)
        for m in range(1, T + 1)
    }
    return _report("ci", ctx, slices, t0)


def invert_recurrent(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> InversionReport:
    """N_[1] = H and N_[m] = m/(m-1) sum over l(I) >= 2 of [N_i1 d]...[N_ik-1 d] N_ik / pi_u(bar I)."""
    t0 = time.perf_counter()
    ctx = _context(H, T, ctx)
    N = {1: list(ctx.H)}
    ders: dict = {}
    memo: dict = {}

    def value(I):
        if I not in memo:
            if len(I) == 1:
                memo[I] = N[I[0]]
            else:
                if I[0] not in ders:
                    ders[I[0]] = derivation(N[I[0]])
                memo[I] = [ders[I[0]].apply(c) for c in value(I[1:])]
        return memo[I]

    for m in range(2, T + 1):
        acc = _zero_vec(ctx)
        for I in enumerate_compositions(m):
            if len(I) >= 2:
                acc = _add_scaled(acc, value(I), Q(1, pi_u(mirror(I))))
        N[m] = [c.scale(Q(m, m - 1)) for c in acc]
    return _report("recurrent", ctx, N, t0)


INVERSION_METHODS = {
    "oracle": invert_oracle_report,
    "lambda": invert_via_lambda,
    "psi": invert_via_psi,
    "ci": invert_via_cI,
    "recurrent": invert_recurrent,
}


def invert(H: PolyMap, T: int, method: str, ctx: Optional[HContext] = None) -> InversionReport:
    if method not in INVERSION_METHODS:
        raise UnknownMethod(f"unknown inversion method {method!r}")
    return INVERSION_METHODS[method](H, T, ctx)


# Taylor expansions

FORWARD, BACKWARD = "forward", "backward"


def taylor_expansion(u: MultiSeries, H: PolyMap, direction: str, basis: str,
                     T: Optional[int] = None, ctx: Optional[HContext] = None) -> MultiSeries:
    """u(F_t) or u(G_t) from lambda or psi words applied to u."""
    if not u.is_t_free():
        raise ValueError("u must be t-free")
    T = T if T is not None else H.t_cap
    ctx = _context(H, T, ctx)
    if direction not in (FORWARD, BACKWARD) or basis not in ("lambda", "psi"):
        raise UnknownMethod(f"unsupported expansion {direction}/{basis}")
    u = u.truncate(T)
    memo = {(): u}

    def act(I):
        if I not in memo:
            memo[I] = ctx.family(basis, I[0]).apply(act(I[1:]))
        return memo[I]

    out = u
    for m in range(1, T + 1):
        if basis == "lambda" and direction == FORWARD:
            slice_ = act((m,)).scale(sign(m))
        else:
            slice_ = MultiSeries.zero(ctx.n, T)
            for I in enumerate_compositions(m):
                if basis == "lambda":
                    c = Q(sign(len(I) - m))
                elif direction == FORWARD:
                    c = Q(sign(len(I)), pi_u(mirror(I)))
                else:
                    c = Q(1, pi_u(I))
                slice_ = slice_ + act(I).scale(c)
        out = out + slice_.shift_t(m)
    return out


# D-Log

def _dlog_lambda(I):
    return Q(sign(len(I) - sum(I) + 1), len(I))


def _dlog_s(I):
    return Q(sign(len(I)), len(I))


def _dlog_psi(I):
    # inner sign follows l(J); the outer (-1)^l(I) reading fails already at I = (1, 1)
    return sum((Q(sign(len(J)), rel_pi_u(I, J) * len(J)) for J in coarsenings(I)), Q(0))


def _dlog_psi_printed(I):
    return sum((Q(sign(len(I)), rel_pi_u(I, J) * len(J)) for J in coarsenings(I)), Q(0))


def _dlog_xi(I):
    return sum(
        (Q(sign(len(J)), rel_pi_u(mirror(I), mirror(J)) * len(J)) for J in coarsenings(I)), Q(0)
    )


DLOG_BASES: dict[str, tuple[Kind, Callable]] = {
    "lambda": (Kind.LAMBDA, _dlog_lambda),
    "s": (Kind.S, _dlog_s),
    "psi": (Kind.PSI, _dlog_psi),
    "xi": (Kind.XI, _dlog_xi),
}


def dlog_nsym(coeff: Callable, kind: Kind, N: int) -> NSymElement:
    """sum over |I| <= N of coeff(I) F^I, in the Lambda basis."""
    out = NSymElement.zero(N)
    for I in compositions_up_to(N):
        c = coeff(I)
        if c:
            out = out + family_word(kind, I, N).scale(c)
    return out


def dlog_nsym_target(N: int) -> NSymElement:
    """-sum Phi_m / m: the NSym element whose image applied to z is a_t."""
    phi = families(N)[Kind.PHI]
    out = NSymElement.zero(N)
    for m in range(1, N + 1):
        out = out - phi[m].scale(Q(1, m))
    return out


@dataclass
class DLogResult:
    a: list  # n MultiSeries with t-order >= 1
    basis: str
    T: int
    bch_depth: Optional[int] = None
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = {"basis": self.basis, "T": self.T, "a_t": [c.to_json() for c in self.a]}
        if self.bch_depth is not None:
            out["bch_depth"] = self.bch_depth
        if self.checks:
            out["checks"] = dict(sorted(self.checks.items()))
        return out


def dlog(H: PolyMap, T: int, basis: str, ctx: Optional[HContext] = None) -> DLogResult:
    if basis not in DLOG_BASES:
        raise UnknownMethod(f"unknown D-Log basis {basis!r}")
    ctx = _context(H, T, ctx)
    kind, coeff = DLOG_BASES[basis]
    a = _zero_vec(ctx)
    for I in compositions_up_to(T):
        c = coeff(I)
        if c:
            a = _add_scaled(a, [v.shift_t(sum(I)) for v in ctx.word_on_z(kind.value, I)], c)
    res = DLogResult(a, basis, T)
    res.checks["exp_matches_inverse"] = exp_of_dlog(res.a, T) == list(ctx.inverse())
    return res


def exp_of_dlog(a: Sequence[MultiSeries], T: int, u: Optional[Sequence[MultiSeries]] = None,
                scale=1) -> list[MultiSeries]:
    """exp(scale * d(t)) applied to u (default z), with d(t) = -[a_t d/dz]."""
    n = len(a)
    d = derivation([c.truncate(T) for c in a]).scale(-q(scale) if not isinstance(scale, UPoly) else -scale)
    targets = list(u) if u is not None else [MultiSeries.variable(i, n, T) for i in range(n)]
    out = []
    for s in targets:
        term, acc = s.truncate(T), s.truncate(T)
        for k in range(1, T + 1):
            term = d.apply(term).scale(Q(1, k))
            if not term:
                break
            acc = acc + term
        out.append(acc)
    return out


# continuous BCH

def descents(sigma: Sequence[int]) -> int:
    return sum(1 for a, b in zip(sigma, sigma[1:]) if a > b)


def bch_weight(sigma: Sequence[int]):
    """(-1)^d(sigma) / (r * binom(r-1, d(sigma)))."""
    r, d = len(sigma), descents(sigma)
    return Q(sign(d), r * comb(r - 1, d))


def bch_psi_coefficients(r_max: int) -> dict:
    """Coefficients of Psi-words in d(t), through weight r_max.

    The parts K = (m_1..m_r) sit on the simplex t >= t_1 >= ... >= t_r and
    the integral of prod t_j^(m_j - 1) is t^|K| / pi_u(bar K); the factor for
    sigma is the word (m_sigma(r), ..., m_sigma(1)).
    """
    if not 1 <= r_max <= 6:
        raise DepthTooLarge(f"BCH depth must be in 1..6, got {r_max}")
    out: dict = {}
    for r in range(1, r_max + 1):
        perms = [(p, bch_weight(p)) for p in permutations(range(1, r + 1))]
        for K in compositions_up_to(r_max):
            if len(K) != r:
                continue
            base = Q(1, pi_u(mirror(K)))
            for p, w in perms:
                word = tuple(K[p[j] - 1] for j in range(r - 1, -1, -1))
                out[word] = out.get(word, Q(0)) + w * base
    return {w: c for w, c in out.items() if c}


def bch_nsym(r_max: int) -> NSymElement:
    out = NSymElement.zero(r_max)
    for w, c in bch_psi_coefficients(r_max).items():
        out = out + family_word(Kind.PSI, w, r_max).scale(c)
    return out


def bch_nsym_holds(r_max: int) -> bool:
    """d(t) from the BCH sum equals sum Phi_m / m through weight r_max."""
    return bch_nsym(r_max) == -dlog_nsym_target(r_max)


def dlog_bch(H: PolyMap, T: int, r_max: int = 4, ctx: Optional[HContext] = None) -> DLogResult:
    coeffs = bch_psi_coefficients(r_max)
    ctx = _context(H, T, ctx)
    depth = min(T, r_max)
    a = [MultiSeries.zero(ctx.n, depth) for _ in range(ctx.n)]
    for w, c in sorted(coeffs.items()):
        if sum(w) > depth:
            continue
        vec = ctx.word_on_z("psi", w)
        a = [x + v.truncate(depth).shift_t(sum(w)).scale(-c) for x, v in zip(a, vec)]
    res = DLogResult(a, "bch", T, bch_depth=r_max)
    ref = dlog(H, T, "lambda", ctx).a
    res.checks["nsym_identity"] = bch_nsym_holds(r_max)
    res.checks["matches_dlog"] = a == [c.truncate(depth) for c in ref]
    return res


# formal flow

FLOW_FORMS = {
    "phi": "lemma-phi",
    "lambda": "binomial-lambda",
    "s": "binomial-s",
    "psi": "binomial-psi",
    "xi": "binomial-xi",
}


@dataclass
class FlowResult:
    components: list
    basis: str
    T: int
    u_mode: object

    def at(self, value) -> list[MultiSeries]:
        return [c.evaluate_u(q(value)) for c in self.components]

    def to_json(self) -> dict:
        u = self.u_mode if self.u_mode == SYMBOLIC else fmt(self.u_mode)
        return {"basis": self.basis, "T": self.T, "u": u, "F": [c.to_json() for c in self.components]}


def flow(H: PolyMap, T: int, basis: str, u_mode=SYMBOLIC, ctx: Optional[HContext] = None) -> FlowResult:
    """F_t(z, u) = z + sum over I of c_I(u) t^|I| w^I z in the chosen basis."""
    if basis not in FLOW_FORMS:
        raise UnknownMethod(f"unknown flow basis {basis!r}")
    if u_mode != SYMBOLIC:
        u_mode = q(u_mode)
    ctx = _context(H, T, ctx)
    out = [MultiSeries.variable(i, ctx.n, T) for i in range(ctx.n)]
    for I in compositions_up_to(T):
        c = form_coefficient(FLOW_FORMS[basis], I, u_mode)
        if c:
            out = _add_scaled(out, [v.shift_t(sum(I)) for v in ctx.word_on_z(basis, I)], c)
    return FlowResult(out, basis, T, u_mode)


def flow_power(H: PolyMap, T: int, k: int, ctx: Optional[HContext] = None) -> list[MultiSeries]:
    """The k-fold composition power of F_t (negative k uses the inverse)."""
    ctx = _context(H, T, ctx)
    n = ctx.n
    base = map_from_field(ctx.H) if k >= 0 else ctx.inverse()
    out = PolyMap.identity(n, T)
    for _ in range(abs(k)):
        out = compose_maps(out, base)
    return list(out)


def flow_group_law(res: FlowResult, grid: Optional[Sequence[int]] = None) -> bool:
    """F(F(z, u2), u1) == F(z, u1 + u2) on a grid of integer u values.

    At t-order m the u-degree is <= m, so a (T+1) x (T+1) grid decides the
    polynomial identity.
    """
    if res.u_mode != SYMBOLIC:
        raise ValueError("group law needs a symbolic flow")
    grid = list(range(res.T + 1)) if grid is None else list(grid)
    cache: dict = {}

    def at(v):
        if v not in cache:
            cache[v] = res.at(v)
        return cache[v]

    for u1 in grid:
        outer = at(u1)
        for u2 in grid:
            inner = PolyMap(at(u2), Role.MAP)
            lhs = [compose(c, inner) for c in outer]
            if lhs != at(u1 + u2):
                return False
    return True


def flow_checks(H: PolyMap, T: int, ctx: Optional[HContext] = None) -> dict:
    """Basis agreement, special values, composition powers and the group law."""
    ctx = _context(H, T, ctx)
    results = {b: flow(H, T, b, SYMBOLIC, ctx) for b in FLOW_FORMS}
    ref = results["phi"]
    checks = {f"agrees_{b}": r.components == ref.components for b, r in results.items()}
    z = [MultiSeries.variable(i, ctx.n, T) for i in range(ctx.n)]
    checks["u=0_is_identity"] = ref.at(0) == z
    checks["u=1_is_F"] = ref.at(1) == list(map_from_field(ctx.H))
    checks["u=-1_is_inverse"] = ref.at(-1) == list(ctx.inverse())
    for k in (-2, -1, 0, 1, 2, 3):
        checks[f"u={k}_is_power"] = ref.at(k) == flow_power(H, T, k, ctx)
    checks["group_law"] = flow_group_law(ref)
    return checks


# C_m in other bases

def _cm_lambda(I):
    return Q(sign(sum(I) + len(I)) * fp(I))


def _cm_s(I):
    # overall sign is -1 for every m; the printed (-1)^m fails at m = 2
    return Q(sign(1 + len(I)) * lp(I))


def _cm_s_printed(I):
    return Q(sign(sum(I) + len(I)) * lp(I))


def _cm_phi_inner(I):
    return sum((Q(sign(len(J)) * lp(J), rel_sp(I, J)) for J in coarsenings(I)), Q(0))


def _cm_phi(I):
    return -_cm_phi_inner(I)


def _cm_phi_printed(I):
    return sign(sum(I)) * _cm_phi_inner(I)


def _cm_xi(I):
    return sum(
        (Q(sign(len(J) - 1) * lp(J), rel_pi_u(mirror(I), mirror(J))) for J in coarsenings(I)), Q(0)
    )


CM_BASES: dict[str, tuple[Kind, Callable]] = {
    "lambda": (Kind.LAMBDA, _cm_lambda),
    "s": (Kind.S, _cm_s),
    "phi": (Kind.PHI, _cm_phi),
    "xi": (Kind.XI, _cm_xi),
}


def cm_nsym_holds(coeff: Callable, kind: Kind, m: int) -> bool:
    """Psi_m == sum over |I| = m of coeff(I) F^I in NSym."""
    rhs = NSymElement.zero(m)
    for I in enumerate_compositions(m):
        c = coeff(I)
        if c:
            rhs = rhs + family_word(kind, I, m).scale(c)
    return rhs == families(m)[Kind.PSI][m]


def cm_via_bases(H: PolyMap, m: int, basis: str, ctx: Optional[HContext] = None) -> PolyMap:
    if basis not in CM_BASES:
        raise UnknownMethod(f"unknown basis {basis!r} for C_m")
    ctx = _context(H, m, ctx)
    kind, coeff = CM_BASES[basis]
    vec = _word_sum_on_z(ctx, kind.value, enumerate_compositions(m), coeff)
    return PolyMap(vec, Role.FIELD)
