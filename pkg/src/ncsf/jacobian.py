"""Experiments around nilpotent Jacobians: psi-vanishing, xi-vanishing and polynomial inverses.

For F_t = z - tH, psi_m = [C_m d/dz] with C_m = (JH)^(m-1) H and
xi_m = [N_[m] d/dz] with N_[m] the t^m slice of the inverse.  Vanishing of
C_m and N_[m] is read off directly; it can only be certified up to the
truncation order T.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .diffops import HContext, multi_indices
from .rational import Q
from .series import (
    MultiSeries,
    PolyMap,
    Role,
    compose,
    jacobian,
    map_from_field,
    mat_is_zero,
    mat_mul,
    mat_vec,
)


class BadDimensions(ValueError):
    pass


class NotHomogeneous(ValueError):
    pass


COEFF_RANGE = (-3, 3)


def generate_triangular_H(n: int, d: int, seed: int, T: int = 1) -> PolyMap:
    """Homogeneous degree-d H where H_i only involves z_(i+1)..z_n; H_n = 0.

    Every monomial of degree d in the allowed variables gets an independent
    uniform integer coefficient in [-3, 3]; a component that comes out all
    zero is redrawn.
    """
    if n < 2 or d < 2:
        raise BadDimensions(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    rng = random.Random(seed)
    polys = []
    for i in range(n):
        free = n - i - 1
        if free == 0:
            polys.append({})
            continue
        while True:
            p = {}
            for e in multi_indices(free, d):
                c = rng.randint(*COEFF_RANGE)
                if c:
                    p[(0,) * (i + 1) + e] = c
            if p:
                break
        polys.append(p)
    return PolyMap.from_polys(polys, n, T)


def homogeneous_degree(H: PolyMap) -> Optional[int]:
    """Common total degree of every nonzero term of H, or None."""
    degs = {sum(e) for c in H for tp, e, _ in c.items()}
    if len(degs) == 1:
        return degs.pop()
    return None


def check_nilpotency(H: PolyMap) -> Optional[int]:
    """Smallest k <= n with (JH)^k = 0, or None when JH is not nilpotent."""
    J = jacobian(H)
    P = J
    for k in range(1, H.n + 1):
        if mat_is_zero(P):
            return k
        P = mat_mul(P, J)
    return None


def gradient_field(P: MultiSeries, n: Optional[int] = None, T: int = 1) -> PolyMap:
    """H_i = dP/dz_i for a homogeneous, t-free P."""
    if n is not None and n != P.n:
        raise ValueError(f"P has {P.n} variables, expected {n}")
    if not P.is_t_free():
        raise NotHomogeneous("P must not depend on t")
    degs = {sum(e) for _, e, _ in P.items()}
    if len(degs) > 1:
        raise NotHomogeneous(f"P mixes degrees {sorted(degs)}")
    comps = [MultiSeries(P.n, T, {(0, e): c for _, e, c in P.diff(i).items()}) for i in range(P.n)]
    return PolyMap(comps, Role.FIELD)


def _first_vanishing(values: dict) -> Optional[int]:
    """Smallest m with values[j] zero for every observed j >= m, or None if the last is nonzero."""
    ms = sorted(values)
    if not ms or values[ms[-1]]:
        return None
    m = ms[-1]
    while m - 1 in values and not values[m - 1]:
        m -= 1
    return m


@dataclass
class JcExperiment:
    H: PolyMap
    T: int
    degree: Optional[int]
    nilpotency_index: Optional[int]
    psi_vanish_from: Optional[int]
    xi_vanish_from: Optional[int]
    inverse_is_polynomial_up_to_T: bool
    inverse: Optional[PolyMap] = None
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        out = {
            "H": self.H.to_json(),
            "T": self.T,
            "degree": self.degree,
            "nilpotency_index": self.nilpotency_index,
            "psi_vanish_from": self.psi_vanish_from,
            "xi_vanish_from": self.xi_vanish_from,
            "inverse_is_polynomial_up_to_T": self.inverse_is_polynomial_up_to_T,
            "checks": dict(sorted(self.checks.items())),
        }
        if self.inverse is not None:
            out["inverse"] = self.inverse.to_json()
        return out


def run_jc_experiment(H: PolyMap, T: int) -> JcExperiment:
    if T < 1:
        raise ValueError("T must be >= 1")
    H = H.with_cap(T)
    ctx = HContext(H, T)
    n = H.n
    d = homogeneous_degree(H)
    k = check_nilpotency(H)
    C = {m: any(ctx.C(m)) for m in range(1, T + 1)}
    N = {m: any(ctx.N(m)) for m in range(1, T + 1)}
    psi_from = _first_vanishing(C)
    xi_from = _first_vanishing(N)
    checks: dict = {}

    if k is not None:
        checks["psi_vanishes_beyond_nilpotency_index"] = all(not C[m] for m in C if m > k)
        if psi_from is not None:
            checks["psi_vanish_from_le_index_plus_one"] = psi_from <= k + 1
    if d is not None and d >= 1:
        # Euler: (JH)^(m-1) H = (1/d) (JH)^m z for homogeneous H of degree d
        J = jacobian(H)
        v = [MultiSeries.variable(i, n, T) for i in range(n)]
        euler = True
        for m in range(1, T + 1):
            v = mat_vec(J, v)
            euler &= [c.scale(Q(1, d)) for c in v] == list(ctx.C(m))
        checks["euler_identity"] = euler
        if k is not None:
            checks["psi_vanishes_from_n"] = all(not C[m] for m in C if m >= n)

    inverse = None
    polynomial = xi_from is not None
    if polynomial:
        # certify: the t-polynomial G of degree < xi_from inverts F with no truncation at all
        tdeg = xi_from - 1
        cap = 1 + max(d or 1, max((c.z_degree() for c in H), default=1)) * max(tdeg, 1) + 1
        G = ctx.inverse()
        G_exact = PolyMap([MultiSeries(n, cap, g.as_dict()) for g in G], Role.INVERSE)
        F = map_from_field(H.with_cap(cap))
        z = [MultiSeries.variable(i, n, cap) for i in range(n)]
        checks["polynomial_inverse_exact"] = (
            [compose(f, G_exact) for f in F] == z
            and [compose(g, PolyMap(F.components, Role.MAP)) for g in G_exact] == z
        )
        inverse = PolyMap(list(G), Role.INVERSE)
    return JcExperiment(H, T, d, k, psi_from, xi_from, polynomial, inverse, checks)


def parse_generator(text: str) -> tuple[int, int, int]:
    """"n,d,seed" -> (n, d, seed)."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise ValueError(f"generator descriptor must be n,d,seed; got {text!r}")
    try:
        n, d, seed = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"generator descriptor must be three integers; got {text!r}") from None
    return n, d, seed


def field_from_spec(spec, T: int) -> PolyMap:
    """A batch item: either {"n", "d", "seed"} or a map {"n", "components"}."""
    if isinstance(spec, dict) and "components" in spec:
        return PolyMap.from_json(spec, T)
    if isinstance(spec, dict) and {"n", "d", "seed"} <= spec.keys():
        return generate_triangular_H(int(spec["n"]), int(spec["d"]), int(spec["seed"]), T)
    raise ValueError(f"batch item is neither a map nor a generator descriptor: {json.dumps(spec)[:80]}")


def _run_spec(args) -> dict:
    spec, T = args
    return run_jc_experiment(field_from_spec(spec, T), T).to_json()


def run_batch(specs: Sequence, T: int, workers: int = 1) -> list[dict]:
    """Run every experiment; results keep input order regardless of workers."""
    jobs = [(s, T) for s in specs]
    for s, _ in jobs:
        field_from_spec(s, T)  # validate before spawning anything
    if workers <= 1 or len(jobs) <= 1:
        return [_run_spec(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_spec, jobs))
