from math import comb

import pytest

from _corpus import corpus, nilpotent_pair, random_field, random_poly, z2_field
from ncsf.diffops import DiffOperator, HContext, op_mul
from ncsf.inversion import (
    CM_BASES,
    DLOG_BASES,
    FLOW_FORMS,
    INVERSION_METHODS,
    DepthTooLarge,
    UnknownMethod,
    _cm_phi_printed,
    _cm_s_printed,
    _dlog_psi_printed,
    bch_nsym_holds,
    bch_psi_coefficients,
    bch_weight,
    cm_nsym_holds,
    cm_via_bases,
    descents,
    dlog,
    dlog_bch,
    dlog_nsym,
    dlog_nsym_target,
    exp_of_dlog,
    flow,
    flow_checks,
    flow_group_law,
    flow_power,
    invert,
    invert_recurrent,
    invert_via_cI,
    invert_via_lambda,
    invert_via_psi,
    taylor_expansion,
)
from ncsf.nsym import Kind
from ncsf.rational import Q, UPoly
from ncsf.series import MultiSeries, PolyMap, compose, invert_oracle, inverse_slices, map_from_field


def catalan(k):
    return comb(2 * k, k) // (k + 1)


def zs(n, T):
    return [MultiSeries.variable(i, n, T) for i in range(n)]


# inversion formulas

@pytest.mark.parametrize("key,H", corpus(9, 6))
def test_all_methods_agree_with_oracle(key, H):
    T = 6
    ctx = HContext(H, T)
    oracle = inverse_slices(invert_oracle(H, T))
    for name in INVERSION_METHODS:
        rep = invert(H, T, name, ctx)
        assert rep.ok, (name, rep.agreement)
        for m in range(1, T + 1):
            assert list(rep.slices[m]) == list(oracle[m])


@pytest.mark.parametrize("method", [invert_via_lambda, invert_via_psi, invert_via_cI, invert_recurrent])
def test_catalan_slices(method):
    T = 6
    rep = method(z2_field(T), T)
    assert rep.ok
    for m in range(1, T + 1):
        assert rep.slices[m][0] == MultiSeries.monomial((m + 1,), 1, T, catalan(m))


@pytest.mark.parametrize("method", list(INVERSION_METHODS))
def test_zero_field(method):
    T = 4
    H = PolyMap.from_polys([{}, {}], 2, T)
    rep = invert(H, T, method)
    assert rep.ok
    assert all(not c for m in rep.slices for c in rep.slices[m])


def test_psi_route_cross_check_and_json():
    T = 4
    rep = invert_via_psi(random_field(2, 2, 3, T), T)
    assert rep.extra["closed_form_route_agrees"] is True
    data = rep.to_json()
    assert data["ok"] and data["method"] == "psi" and "seconds" not in data
    with pytest.raises(UnknownMethod):
        invert(z2_field(2), 2, "newton")


def test_second_slice_by_hand():
    # N_[2] = [H d/dz] H; for H = z^2 that is 2z^3
    T = 2
    rep = invert_recurrent(z2_field(T), T)
    assert rep.slices[2][0] == MultiSeries.monomial((3,), 1, T, 2)


# Taylor expansions

@pytest.mark.parametrize("n,seed", [(1, 0), (2, 1), (3, 2)])
def test_taylor_against_compose(n, seed):
    T = 5
    H = random_field(seed, n, 3, T)
    ctx = HContext(H, T)
    F = map_from_field(ctx.H)
    G = invert_oracle(H, T)
    u = random_poly(seed + 50, n, 4, T)
    for basis in ("lambda", "psi"):
        assert taylor_expansion(u, H, "forward", basis, T, ctx) == compose(u, F)
        assert taylor_expansion(u, H, "backward", basis, T, ctx) == compose(u, G)


def test_taylor_examples():
    T = 2
    H = z2_field(T)
    u = MultiSeries.monomial((2,), 1, T)
    expected = MultiSeries(1, T, {(0, (2,)): 1, (1, (3,)): -2, (2, (4,)): 1})
    assert taylor_expansion(u, H, "forward", "lambda", T) == expected
    z = MultiSeries.variable(0, 1, T)
    assert taylor_expansion(z, H, "backward", "psi", T) == invert_oracle(H, T)[0]
    with pytest.raises(ValueError):
        taylor_expansion(z.shift_t(1), H, "forward", "psi", T)
    with pytest.raises(UnknownMethod):
        taylor_expansion(z, H, "sideways", "psi", T)


# D-Log

def _dlog_oracle(H, T):
    """-(log g(t)) z, with g(t) = 1 + sum t^m s_m composed as operator series."""
    ctx = HContext(H, T)
    n = H.n
    one = DiffOperator.identity(n, T)
    x = DiffOperator.zero(n, T)
    for m in range(1, T + 1):
        x = x + ctx.s(m).shift_t(m)
    log_g, power = DiffOperator.zero(n, T), one
    for k in range(1, T + 1):
        power = op_mul(power, x)
        log_g = log_g + power.scale(Q((-1) ** (k - 1), k))
    return [-log_g(z) for z in zs(n, T)]


@pytest.mark.parametrize("n,seed", [(1, 0), (2, 1), (2, 4), (3, 2)])
def test_dlog_bases_match_log_of_g(n, seed):
    T = 5
    H = random_field(seed, n, 3, T)
    ctx = HContext(H, T)
    oracle = _dlog_oracle(H, T)
    for basis in DLOG_BASES:
        res = dlog(H, T, basis, ctx)
        assert res.a == oracle, basis
        assert res.ok


def test_dlog_leading_term_is_minus_tH():
    T = 4
    H = random_field(9, 2, 3, T)
    a = dlog(H, T, "psi").a
    for c, h in zip(a, H):
        assert c.t_coefficient(0) == MultiSeries.zero(2, T)
        assert c.t_coefficient(1) == -h


def test_dlog_exponential_reproduces_inverse():
    T = 6
    H = random_field(11, 2, 3, T)
    a = dlog(H, T, "xi").a
    assert exp_of_dlog(a, T) == list(invert_oracle(H, T))
    # exp(-d) undoes it: the forward map
    assert exp_of_dlog(a, T, scale=-1) == list(map_from_field(H))


def test_dlog_nsym_forms():
    N = 6
    target = dlog_nsym_target(N)
    for basis, (kind, coeff) in DLOG_BASES.items():
        assert dlog_nsym(coeff, kind, N) == target, basis
    printed = dlog_nsym(_dlog_psi_printed, Kind.PSI, 2)
    assert printed != dlog_nsym_target(2)
    assert printed.homogeneous(1) == dlog_nsym_target(2).homogeneous(1)
    with pytest.raises(UnknownMethod):
        dlog(z2_field(2), 2, "phi")


# BCH

def test_descent_weights_r2():
    assert descents((1, 2)) == 0 and descents((2, 1)) == 1
    assert bch_weight((1, 2)) == Q(1, 2)
    assert bch_weight((2, 1)) == Q(-1, 2)
    assert descents((3, 1, 2)) == 1 and bch_weight((3, 1, 2)) == Q(-1, 6)


def test_bch_coefficients_low_weight():
    # d(t) = t Psi_1 + t^2 Psi_2 / 2 + ...; the two (1,1) contributions cancel
    assert bch_psi_coefficients(2) == {(1,): 1, (2,): Q(1, 2)}
    with pytest.raises(DepthTooLarge):
        bch_psi_coefficients(7)
    with pytest.raises(DepthTooLarge):
        bch_psi_coefficients(0)


@pytest.mark.parametrize("r", range(1, 6))
def test_bch_nsym(r):
    assert bch_nsym_holds(r)


@pytest.mark.parametrize("H,T,r", [(z2_field(3), 3, 3), (random_field(5, 2, 3, 5), 5, 4)])
def test_dlog_bch_operator(H, T, r):
    res = dlog_bch(H, T, r)
    assert res.ok, res.checks
    assert res.bch_depth == r


# flows

def test_flow_special_values_z_squared():
    T = 5
    H = z2_field(T)
    res = flow(H, T, "phi")
    z = zs(1, T)
    assert res.at(0) == z
    assert res.at(1) == list(map_from_field(H))
    assert res.at(-1) == list(invert_oracle(H, T))
    assert res.at(2) == flow_power(H, T, 2)


@pytest.mark.parametrize("n,seed", [(1, 3), (2, 6), (3, 7)])
def test_flow_checks(n, seed):
    T = 4
    checks = flow_checks(random_field(seed, n, 3, T), T)
    assert all(checks.values()), checks
    assert {"agrees_" + b for b in FLOW_FORMS} <= checks.keys()


def test_flow_at_fixed_rational_u():
    T = 4
    H = random_field(2, 2, 2, T)
    sym = flow(H, T, "psi")
    half = flow(H, T, "lambda", Q(1, 2))
    assert half.components == sym.at(Q(1, 2))
    # half-step twice is the full step
    inner = PolyMap(half.components, map_from_field(H).role)
    assert [compose(c, inner) for c in half.components] == list(map_from_field(H))


def test_flow_group_law_rejects_a_corrupted_flow():
    T = 3
    res = flow(z2_field(T), T, "phi")
    assert flow_group_law(res)
    bad = res.components[0] + MultiSeries(1, T, {(2, (3,)): UPoly((0, 0, 1))})
    res.components = [bad]
    assert not flow_group_law(res)
    with pytest.raises(ValueError):
        flow_group_law(flow(z2_field(T), T, "phi", Q(1)))


# C_m in other bases

@pytest.mark.parametrize("basis", list(CM_BASES))
def test_cm_nsym(basis):
    kind, coeff = CM_BASES[basis]
    for m in range(1, 7):
        assert cm_nsym_holds(coeff, kind, m)


def test_printed_cm_variants_fail_exactly_at_even_m():
    for m in range(1, 7):
        assert cm_nsym_holds(_cm_s_printed, Kind.S, m) == (m % 2 == 1)
        assert cm_nsym_holds(_cm_phi_printed, Kind.PHI, m) == (m % 2 == 1)


@pytest.mark.parametrize("n,seed", [(1, 1), (2, 2), (3, 3)])
def test_cm_operator(n, seed):
    T = 5
    H = random_field(seed, n, 3, T)
    ctx = HContext(H, T)
    for m in range(1, T + 1):
        closed = ctx.C_closed(m)
        for basis in CM_BASES:
            assert list(cm_via_bases(H, m, basis, ctx)) == closed


def test_cm_examples():
    T = 3
    H = z2_field(T)
    for basis in CM_BASES:
        assert list(cm_via_bases(H, 1, basis)) == list(H)
        assert cm_via_bases(H, 2, basis, HContext(H, T))[0] == MultiSeries.monomial((3,), 1, T, 2)
        assert cm_via_bases(nilpotent_pair(T), 2, basis).is_zero()
