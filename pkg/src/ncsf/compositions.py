"""Compositions, the refinement order, and the coefficient functionals built on it.

A composition is a plain tuple of positive integers.  ``J`` *refines* ``I``
(written J >= I) when J splits into consecutive blocks whose sums are the
parts of I, e.g. (4,2,5,2,1) >= (6,5,3).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate, combinations, product
from math import factorial, prod
from typing import Iterator, Sequence

from .rational import Q

Composition = tuple[int, ...]


class NotARefinement(ValueError):
    pass


class EmptyComposition(ValueError):
    pass


def composition(parts: Sequence[int]) -> Composition:
    c = tuple(int(p) for p in parts)
    if any(p < 1 for p in c):
        raise ValueError(f"composition parts must be positive: {c}")
    return c


@lru_cache(maxsize=None)
def enumerate_compositions(m: int) -> tuple[Composition, ...]:
    """All compositions of weight m, lexicographic on parts."""
    if m < 0:
        raise ValueError("weight must be non-negative")
    if m == 0:
        return ((),)
    out = []
    for first in range(1, m + 1):
        for rest in enumerate_compositions(m - first):
            out.append((first,) + rest)
    return tuple(out)


def compositions_up_to(n: int, start: int = 1) -> Iterator[Composition]:
    for m in range(start, n + 1):
        yield from enumerate_compositions(m)


def weight(I: Composition) -> int:
    return sum(I)


def length(I: Composition) -> int:
    return len(I)


def mirror(I: Composition) -> Composition:
    return tuple(reversed(I))


def concat(I: Composition, J: Composition) -> Composition:
    return tuple(I) + tuple(J)


def _cuts(I: Composition) -> frozenset[int]:
    return frozenset(accumulate(I))


def is_refinement(fine: Composition, coarse: Composition) -> bool:
    """True iff ``fine`` >= ``coarse`` in the refinement order."""
    if sum(fine) != sum(coarse):
        return False
    return _cuts(coarse) <= _cuts(fine)


@dataclass(frozen=True)
class RefinementDecomposition:
    coarse: Composition
    fine: Composition
    blocks: tuple[Composition, ...]


def _blocks(fine: Composition, coarse: Composition) -> tuple[Composition, ...]:
    blocks = []
    pos = 0
    for part in coarse:
        acc = 0
        start = pos
        while acc < part and pos < len(fine):
            acc += fine[pos]
            pos += 1
        if acc != part:
            raise NotARefinement(f"{fine} does not refine {coarse}")
        blocks.append(tuple(fine[start:pos]))
    if pos != len(fine):
        raise NotARefinement(f"{fine} does not refine {coarse}")
    return tuple(blocks)


def refinement_blocks(fine: Composition, coarse: Composition) -> RefinementDecomposition:
    return RefinementDecomposition(tuple(coarse), tuple(fine), _blocks(tuple(fine), tuple(coarse)))


@lru_cache(maxsize=None)
def refinements(I: Composition) -> tuple[Composition, ...]:
    """All J with J >= I (J finer), built blockwise."""
    return tuple(sum(choice, ()) for choice in product(*(enumerate_compositions(p) for p in I)))


@lru_cache(maxsize=None)
def coarsenings(J: Composition) -> tuple[Composition, ...]:
    """All I with J >= I (I coarser), obtained by merging adjacent parts."""
    k = len(J)
    if k == 0:
        return ((),)
    prefix = list(accumulate(J))
    out = []
    for r in range(k):
        for kept in combinations(range(k - 1), r):
            cuts = [0] + [prefix[i] for i in kept] + [prefix[-1]]
            out.append(tuple(b - a for a, b in zip(cuts, cuts[1:])))
    return tuple(sorted(out))


def interval(fine: Composition, coarse: Composition) -> tuple[Composition, ...]:
    """All K with fine >= K >= coarse."""
    return tuple(K for K in coarsenings(fine) if is_refinement(K, coarse))


# single-composition functionals

def pi(I: Composition) -> int:
    return prod(I)


def pi_u(I: Composition) -> int:
    return prod(accumulate(I))


def sp(I: Composition) -> int:
    return factorial(len(I)) * prod(I)


def fp(I: Composition) -> int:
    return I[0]


def lp(I: Composition) -> int:
    return I[-1]


@dataclass(frozen=True)
class CompositionStats:
    length: int
    weight: int
    pi: int
    pi_u: int
    sp: int
    fp: int
    lp: int


def stats(I: Composition) -> CompositionStats:
    if not I:
        raise EmptyComposition("statistics are undefined for the empty composition")
    return CompositionStats(len(I), sum(I), pi(I), pi_u(I), sp(I), fp(I), lp(I))


# relative functionals: products of the block functionals over J's blocks

@lru_cache(maxsize=None)
def _rel(fine: Composition, coarse: Composition) -> tuple[int, int, int, int, int]:
    blocks = _blocks(fine, coarse)
    return (
        prod(len(b) for b in blocks),
        prod(pi_u(b) for b in blocks),
        prod(sp(b) for b in blocks),
        prod(lp(b) for b in blocks),
        prod(fp(b) for b in blocks),
    )


@dataclass(frozen=True)
class RelativeStats:
    length: int
    pi_u: int
    sp: int
    lp: int
    fp: int


def relative_stats(fine: Composition, coarse: Composition) -> RelativeStats:
    return RelativeStats(*_rel(tuple(fine), tuple(coarse)))


def rel_length(J: Composition, I: Composition) -> int:
    return _rel(J, I)[0]


def rel_pi_u(J: Composition, I: Composition) -> int:
    return _rel(J, I)[1]


def rel_sp(J: Composition, I: Composition) -> int:
    return _rel(J, I)[2]


def rel_lp(J: Composition, I: Composition) -> int:
    return _rel(J, I)[3]


def rel_fp(J: Composition, I: Composition) -> int:
    return _rel(J, I)[4]


def sign(k: int) -> int:
    return -1 if k % 2 else 1


@lru_cache(maxsize=None)
def c_coefficient(I: Composition, K: Composition):
    """c_{I,K} = sum over K >= J >= I of (-1)^(l(J)-l(I)) fp(J,I) / pi_u(K,J)."""
    if not is_refinement(K, I):
        raise NotARefinement(f"{K} does not refine {I}")
    total = Q(0)
    for J in interval(K, I):
        total += sign(len(J) - len(I)) * Q(rel_fp(J, I), rel_pi_u(K, J))
    return total


@lru_cache(maxsize=None)
def c_single(I: Composition):
    """c_I = sum over I >= J of (-1)^(l(J)-1) fp(J) / pi_u(I,J); equals c_{(m),I}."""
    total = Q(0)
    for J in coarsenings(I):
        total += sign(len(J) - 1) * Q(fp(J), rel_pi_u(I, J))
    return total
