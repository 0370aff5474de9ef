from fractions import Fraction
from math import comb

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from _corpus import corpus, nilpotent_pair, random_field, random_poly, z2_field
from ncsf.rational import Q, UPoly
from ncsf.series import (
    DimensionMismatch,
    MultiSeries,
    NotTAdicContraction,
    PolyMap,
    Role,
    compose,
    compose_maps,
    inverse_slices,
    invert_oracle,
    jacobian,
    map_from_field,
    mat_mul,
    mat_vec,
)


def catalan(k):
    return comb(2 * k, k) // (k + 1)


# sympy bridge: an independent polynomial arithmetic

def to_sympy(s: MultiSeries, zs, t):
    out = sympy.S(0)
    for tp, e, c in s.items():
        term = sympy.Rational(int(c.numerator), int(c.denominator)) * t ** tp
        for z, k in zip(zs, e):
            term *= z ** k
        out += term
    return sympy.expand(out)


def from_sympy(expr, zs, t, T):
    poly = sympy.Poly(sympy.expand(expr), t, *zs)
    terms = {}
    for monom, c in poly.terms():
        if monom[0] <= T:
            terms[(monom[0], tuple(monom[1:]))] = Fraction(int(c.p), int(c.q))
    return MultiSeries(len(zs), T, terms)


def lagrange_inverse(H_expr, z, t, T):
    """G = z + sum_m t^m/m! d^(m-1)/dz^(m-1) H(z)^m, for G = z + t H(G)."""
    G = z
    for m in range(1, T + 1):
        G += t ** m * sympy.diff(H_expr ** m, z, m - 1) / sympy.factorial(m)
    return sympy.expand(G)


# arithmetic

def test_arith_examples():
    z1, z2 = MultiSeries.variable(0, 2, 3), MultiSeries.variable(1, 2, 3)
    assert (z1 * z1 * z2).diff(0) == (z1 * z2).scale(2)
    z = MultiSeries.variable(0, 1, 2)
    t = MultiSeries.t_power(1, 1, 2)
    assert (z - t * z * z).t_coefficient(0) == z
    z, t = MultiSeries.variable(0, 1, 1), MultiSeries.t_power(1, 1, 1)
    one = MultiSeries.constant(1, 1, 1)
    assert (one + t * z) * (one - t * z) == one


def test_no_zero_coefficients_and_cap():
    s = MultiSeries(1, 2, {(0, (1,)): 1, (1, (1,)): 0, (3, (2,)): 5})
    assert s.as_dict() == {(0, (1,)): 1}
    z = MultiSeries.variable(0, 1, 2)
    assert not (z - z)
    with pytest.raises(ValueError):
        MultiSeries(1, 2, {(0, (-1,)): 1})


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        MultiSeries.variable(0, 1, 2) + MultiSeries.variable(0, 2, 2)
    with pytest.raises(DimensionMismatch):
        compose(MultiSeries.variable(0, 2, 2), PolyMap.identity(1, 2))


@given(st.integers(0, 50), st.integers(0, 50))
def test_ring_laws_against_sympy(s1, s2):
    T = 4
    zs = sympy.symbols("z1:3")
    t = sympy.Symbol("t")
    a = random_poly(s1, 2, 3, T) + random_poly(s1 + 1, 2, 2, T).shift_t(1)
    b = random_poly(s2, 2, 3, T).shift_t(1) + random_poly(s2 + 7, 2, 2, T)
    assert a * b == b * a
    assert from_sympy(to_sympy(a, zs, t) * to_sympy(b, zs, t), zs, t, T) == a * b
    assert (a * b).diff(1) == a.diff(1) * b + a * b.diff(1)


def test_json_round_trip():
    H = random_field(3, 3, 3, 5)
    assert PolyMap.from_json(H.to_json(), 5) == H
    G = invert_oracle(H, 5)
    assert PolyMap.from_json(G.to_json(), 5, Role.INVERSE) == G
    with pytest.raises(ValueError):
        PolyMap.from_json(G.to_json(), 5)  # t-dependent field rejected
    with pytest.raises(ValueError):
        PolyMap.from_json({"n": 2, "components": [[]]}, 5)
    data = {"n": 1, "components": [[{"coeff": "3/4", "exps": [2]}]]}
    assert PolyMap.from_json(data, 3)[0].coeff(0, (2,)) == Q(3, 4)


def test_u_polynomial_coefficients():
    z = MultiSeries.variable(0, 1, 2)
    s = z.scale(UPoly((1, 2)))
    assert s.evaluate_u(Q(3)) == z.scale(7)


# composition

def test_compose_examples():
    z1 = MultiSeries.variable(0, 2, 3)
    assert compose(z1, PolyMap.identity(2, 3)) == z1
    H = z2_field(2)
    u = MultiSeries.monomial((2,), 1, 2)
    expected = MultiSeries(1, 2, {(0, (2,)): 1, (1, (3,)): -2, (2, (4,)): 1})
    assert compose(u, map_from_field(H)) == expected


def test_compose_rejects_non_contraction():
    bad = PolyMap([MultiSeries.variable(0, 1, 2) + MultiSeries.constant(1, 1, 2)], Role.MAP)
    with pytest.raises(NotTAdicContraction):
        compose(MultiSeries.variable(0, 1, 2), bad)


@pytest.mark.parametrize("seed", range(6))
def test_compose_matches_sympy_substitution(seed):
    T = 4
    n = 2
    zs = sympy.symbols("z1:3")
    t = sympy.Symbol("t")
    H = random_field(seed, n, 3, T)
    F = map_from_field(H)
    u = random_poly(seed + 100, n, 3, T)
    subs = {z: to_sympy(f, zs, t) for z, f in zip(zs, F)}
    expected = from_sympy(to_sympy(u, zs, t).subs(subs, simultaneous=True), zs, t, T)
    assert compose(u, F) == expected


@given(st.integers(0, 30), st.integers(-3, 3), st.integers(-3, 3))
def test_compose_is_linear(seed, a, b):
    T = 4
    F = map_from_field(random_field(seed, 2, 3, T))
    u, v = random_poly(seed, 2, 3, T), random_poly(seed + 1, 2, 3, T)
    assert compose(u.scale(a) + v.scale(b), F) == compose(u, F).scale(a) + compose(v, F).scale(b)


# inversion oracle

def test_zero_field_inverse_is_identity():
    H = PolyMap.from_polys([{}, {}], 2, 5)
    assert invert_oracle(H, 5) == PolyMap.identity(2, 5)


def test_catalan_slices():
    T = 8
    slices = inverse_slices(invert_oracle(z2_field(T), T))
    for m in range(1, T + 1):
        assert slices[m][0] == MultiSeries.monomial((m + 1,), 1, T, catalan(m))
    assert [slices[m][0].coeff(0, (m + 1,)) for m in range(1, 5)] == [1, 2, 5, 14]


@pytest.mark.parametrize("seed", range(8))
def test_oracle_matches_lagrange_inversion_n1(seed):
    T = 6
    z, t = sympy.Symbol("z1"), sympy.Symbol("t")
    H = random_field(seed, 1, 3, T, terms=(1, 3))
    G = invert_oracle(H, T)
    expected = from_sympy(lagrange_inverse(to_sympy(H[0], [z], t), z, t, T), [z], t, T)
    assert G[0] == expected


def test_nilpotent_pair_inverse_is_polynomial():
    T = 6
    G = invert_oracle(nilpotent_pair(T), T)
    z1, z2 = MultiSeries.variable(0, 2, T), MultiSeries.variable(1, 2, T)
    assert list(G) == [z1 + (z2 * z2).shift_t(1), z2]


@pytest.mark.parametrize("key,H", corpus(12, 8))
def test_two_sided_inverse(key, H):
    T = 8
    F = map_from_field(H)
    G = invert_oracle(H, T)
    ident = PolyMap.identity(H.n, T)
    assert compose_maps(F, G).components == ident.components
    assert compose_maps(G, F).components == ident.components
    u = random_poly(key[2], H.n, 2, T)
    assert compose(compose(u, F), G) == u


@pytest.mark.parametrize("n,d,seed", [(1, 2, 0), (2, 2, 1), (2, 3, 2), (3, 3, 3)])
def test_degree_bound_for_homogeneous_fields(n, d, seed):
    import random

    T = 6
    rng = random.Random(seed)
    polys = []
    for _ in range(n):
        e = [0] * n
        for _ in range(d):
            e[rng.randrange(n)] += 1
        polys.append({tuple(e): rng.choice((-2, -1, 1, 3))})
    H = PolyMap.from_polys(polys, n, T)
    for m, Nm in inverse_slices(invert_oracle(H, T)).items():
        for c in Nm:
            assert c.z_degree() <= m * (d - 1) + 1


def test_jacobian_helpers():
    H = nilpotent_pair(3)
    J = jacobian(H)
    assert J[0][1] == MultiSeries.variable(1, 2, 3).scale(2)
    assert not J[0][0] and not J[1][0] and not J[1][1]
    assert all(not x for row in mat_mul(J, J) for x in row)
    v = mat_vec(J, [MultiSeries.variable(i, 2, 3) for i in range(2)])
    assert v[0] == (MultiSeries.variable(1, 2, 3) ** 2).scale(2)
