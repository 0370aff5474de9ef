"""Change-of-basis identities between the NCSF families, and a mechanical verifier.

Each identity has the shape  A^I = sum_{J >= I} coeff(I, J) B^J  with A, B two
families.  Both sides are expanded in the Lambda-word basis and compared exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .compositions import (
    Composition,
    c_coefficient,
    compositions_up_to,
    interval,
    mirror,
    pi,
    refinements,
    rel_fp,
    rel_length,
    rel_lp,
    rel_pi_u,
    rel_sp,
    sign,
)
from .nsym import Kind, NSymElement, family_word
from .rational import Q


class UnknownIdentity(KeyError):
    pass


@dataclass(frozen=True)
class Identity:
    name: str
    lhs: Kind
    rhs: Kind
    coeff: Callable[[Composition, Composition], object]


def _w(I):
    return sum(I)


def _psi_phi(I, J):
    return sign(len(I)) * sum(
        (sign(len(K)) * Q(pi(I), rel_pi_u(J, K) * rel_length(K, I)) for K in interval(J, I)), Q(0)
    )


def _phi_psi(I, J):
    return sign(len(I)) * sum(
        (sign(len(K)) * Q(rel_lp(K, I), rel_sp(J, K)) for K in interval(J, I)), Q(0)
    )


def _xi_phi(I, J):
    return sign(len(I)) * sum(
        (
            sign(len(K)) * Q(pi(I), rel_pi_u(mirror(J), mirror(K)) * rel_length(K, I))
            for K in interval(J, I)
        ),
        Q(0),
    )


def _phi_xi(I, J):
    return sign(len(I)) * sum(
        (sign(len(K)) * Q(rel_fp(K, I), rel_sp(J, K)) for K in interval(J, I)), Q(0)
    )


L, S, PHI, PSI, XI = Kind.LAMBDA, Kind.S, Kind.PHI, Kind.PSI, Kind.XI

IDENTITIES: dict[str, Identity] = {
    i.name: i
    for i in [
        Identity("Lambda-S", S, L, lambda I, J: Q(sign(len(J) - _w(I)))),
        Identity("S-Lambda", L, S, lambda I, J: Q(sign(len(J) - _w(I)))),
        Identity(
            "Psi-Lambda", L, PSI,
            lambda I, J: sign(_w(I) + len(J)) * Q(1, rel_pi_u(mirror(J), mirror(I))),
        ),
        Identity("Lambda-Psi", PSI, L, lambda I, J: Q(sign(_w(I) + len(J)) * rel_fp(J, I))),
        Identity("Psi-S", S, PSI, lambda I, J: Q(1, rel_pi_u(J, I))),
        Identity("S-Psi", PSI, S, lambda I, J: Q(sign(len(I) + len(J)) * rel_lp(J, I))),
        Identity("Phi-Lambda", L, PHI, lambda I, J: sign(_w(I) + len(J)) * Q(1, rel_sp(J, I))),
        Identity(
            "Lambda-Phi", PHI, L,
            lambda I, J: sign(_w(I) + len(J)) * Q(pi(I), rel_length(J, I)),
        ),
        Identity("Phi-S", S, PHI, lambda I, J: Q(1, rel_sp(J, I))),
        Identity(
            "S-Phi", PHI, S,
            lambda I, J: sign(len(I) + len(J)) * Q(pi(I), rel_length(J, I)),
        ),
        Identity("Psi-Phi", PHI, PSI, _psi_phi),
        Identity("Phi-Psi", PSI, PHI, _phi_psi),
        Identity("Xi-Lambda", L, XI, lambda I, J: sign(_w(I) + len(J)) * Q(1, rel_pi_u(J, I))),
        Identity("Lambda-Xi", XI, L, lambda I, J: Q(sign(_w(I) + len(J)) * rel_lp(J, I))),
        Identity("Xi-S", S, XI, lambda I, J: Q(1, rel_pi_u(mirror(J), mirror(I)))),
        Identity("S-Xi", XI, S, lambda I, J: Q(sign(len(I) + len(J)) * rel_fp(J, I))),
        Identity("Xi-Phi", PHI, XI, _xi_phi),
        Identity("Phi-Xi", XI, PHI, _phi_xi),
        Identity("Psi-Xi", XI, PSI, lambda I, K: c_coefficient(I, K)),
        Identity("Xi-Psi", PSI, XI, lambda I, K: c_coefficient(mirror(I), mirror(K))),
        Identity(
            "Xi-Psi-2", PSI, XI,
            lambda I, K: sign(len(I) - len(K)) * c_coefficient(I, K),
        ),
    ]
}


def expand_identity(identity: Identity, I: Composition, N: int) -> tuple[NSymElement, NSymElement]:
    lhs = family_word(identity.lhs, I, N)
    rhs = NSymElement.zero(N)
    for J in refinements(I):
        c = identity.coeff(I, J)
        if c:
            rhs = rhs + family_word(identity.rhs, J, N).scale(c)
    return lhs, rhs


@dataclass
class IdentityReport:
    identity: str
    N: int
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "pass" if not self.failures else "fail"

    @property
    def counterexample(self) -> Optional[Composition]:
        return self.failures[0] if self.failures else None

    def to_json(self) -> dict:
        out = {"identity": self.identity, "N": self.N, "status": self.status, "checked": self.checked}
        if self.failures:
            out["counterexample"] = list(self.failures[0])
        return out


def verify_identity(identity_id: str, N: int) -> IdentityReport:
    if identity_id not in IDENTITIES:
        raise UnknownIdentity(identity_id)
    if N < 1:
        raise ValueError("N must be >= 1")
    ident = IDENTITIES[identity_id]
    report = IdentityReport(identity_id, N)
    for I in compositions_up_to(N):
        lhs, rhs = expand_identity(ident, I, N)
        report.checked += 1
        if lhs != rhs:
            report.failures.append(I)
    return report


def verify_c_symmetry(N: int) -> list[tuple[Composition, Composition]]:
    """Pairs K >= I violating c_{bar I, bar K} = (-1)^(l(I)-l(K)) c_{I,K}."""
    bad = []
    for I in compositions_up_to(N):
        for K in refinements(I):
            if c_coefficient(mirror(I), mirror(K)) != sign(len(I) - len(K)) * c_coefficient(I, K):
                bad.append((I, K))
    return bad
