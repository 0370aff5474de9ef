"""Acceptance suite: eight end-to-end criteria, each checked with exact equality.

Every criterion prints one line "CRITERION k: PASS|FAIL  <detail>".  Run
directly with ``python tests/test_acceptance.py`` for just the summary.
"""

import sys
from math import comb
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _corpus import corpus, random_field, random_poly, z2_field  # noqa: E402
from ncsf.diffops import HContext, action_semantics, ncs_axioms, verify_lambda_psi_identity  # noqa: E402
from ncsf.compositions import compositions_up_to  # noqa: E402
from ncsf.exp_phi import SYMBOLIC, binomial_identity_check, exp_phi_series  # noqa: E402
from ncsf.identities import IDENTITIES, verify_c_symmetry, verify_identity  # noqa: E402
from ncsf.inversion import DLOG_BASES, bch_nsym_holds, dlog, dlog_bch, flow_checks, invert  # noqa: E402
from ncsf.jacobian import check_nilpotency, generate_triangular_H, run_jc_experiment  # noqa: E402
from ncsf.nsym import defining_residuals  # noqa: E402
from ncsf.series import MultiSeries  # noqa: E402


def criterion_1():
    failing = [name for name in IDENTITIES if verify_identity(name, 7).status != "pass"]
    bad_c = verify_c_symmetry(7)
    ok = not failing and not bad_c and len(IDENTITIES) == 21
    return ok, f"21 identities at weight <= 7, failing={failing}, c-symmetry violations={len(bad_c)}"


def criterion_2():
    T = 8
    residual_ok = all(not r for r in defining_residuals(T).values())
    fields = [H for _, H in corpus(21, T, n_values=(1, 2, 3), d_values=(2, 3), base_seed=2000)]
    bad = []
    for k, H in enumerate(fields):
        ctx = HContext(H, T)
        axioms = ncs_axioms(ctx)
        semantics = action_semantics(ctx, random_poly(k, H.n, 3, T))
        if not (all(axioms.values()) and all(semantics.values())):
            bad.append(k)
    return residual_ok and not bad, f"NSym residuals to 8: {residual_ok}; {len(fields)} operator systems, failing={bad}"


def criterion_3():
    T = 8
    bad = []
    for key, H in corpus(24, T, base_seed=3000):
        ctx = HContext(H, T)
        for method in ("lambda", "psi", "ci", "recurrent"):
            if not invert(H, T, method, ctx).ok:
                bad.append((key, method))
    rep = invert(z2_field(T), T, "oracle")
    catalan = all(
        rep.slices[m][0] == MultiSeries.monomial((m + 1,), 1, T, comb(2 * m, m) // (m + 1))
        for m in range(1, 5)
    )
    return not bad and catalan, f"24 fields x 4 methods to t^8, failing={bad}; Catalan z^2,2z^3,5z^4,14z^5: {catalan}"


def criterion_4():
    report = exp_phi_series(SYMBOLIC, 7)
    binom = [I for I in compositions_up_to(7) if not binomial_identity_check(I)]
    return report.ok and not binom, f"forms={report.agreement}; binomial identity failures={binom}"


def criterion_5():
    T = 6
    bad = []
    fields = [z2_field(T)] + [random_field(5000 + k, 1 + k % 3, 3, T) for k in range(6)]
    for k, H in enumerate(fields):
        ctx = HContext(H, T)
        results = [dlog(H, T, b, ctx) for b in DLOG_BASES]
        if not all(r.ok for r in results) or any(r.a != results[0].a for r in results):
            bad.append(("dlog", k))
        if not dlog_bch(H, T, 4, ctx).ok:
            bad.append(("bch", k))
    nsym = bch_nsym_holds(4)
    return not bad and nsym, f"{len(fields)} fields, 4 bases + exp check to t^6, BCH r_max=4; failing={bad}; NSym BCH: {nsym}"


def criterion_6():
    T = 5
    bad = []
    fields = [z2_field(T)] + [random_field(6000 + k, 1 + k % 3, 3, T) for k in range(4)]
    for k, H in enumerate(fields):
        checks = flow_checks(H, T)
        needed = ("group_law", "u=-1_is_inverse", "u=2_is_power")
        if not all(checks.values()) or not all(checks[c] for c in needed):
            bad.append((k, [c for c, v in checks.items() if not v]))
    return not bad, f"{len(fields)} fields, 6x6 grid at T=5, u=-1 and u=2; failing={bad}"


def criterion_7():
    bad = []
    for k in range(6):
        n = 1 + k % 3
        H = random_field(7000 + k, n, 3, 5)
        ctx = HContext(H, 5)
        for m in range(1, 6):
            if not verify_lambda_psi_identity(H, m, 8, ctx):
                bad.append((k, m))
    return not bad, f"6 fields (n<=3), m<=5, monomials of degree <=8; failing={bad}"


def criterion_8():
    T = 10
    failures = []
    for n in (2, 3, 4):
        for d in (2, 3):
            for seed in range(10):
                H = generate_triangular_H(n, d, seed, T)
                exp = run_jc_experiment(H, T)
                k = check_nilpotency(H)
                ok = (
                    k is not None and k <= n
                    and all(not any(exp_c) for exp_c in (HContext(H, T).C(m) for m in range(n, T + 1)))
                    and exp.xi_vanish_from is not None
                    and exp.inverse_is_polynomial_up_to_T
                    and exp.ok
                )
                if not ok:
                    failures.append((n, d, seed))
    control = run_jc_experiment(z2_field(T), T)
    control_ok = control.psi_vanish_from is None and control.xi_vanish_from is None
    detail = f"60 triangular maps at T=10, failing (n,d,seed)={failures}; control z^2 shows no vanishing: {control_ok}"
    return not failures and control_ok, detail


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


def _line(k, ok, detail):
    return f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", range(1, 9))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [CRITERIA[k - 1]() for k in range(1, 9)]
    for k, (ok, detail) in enumerate(results, 1):
        print(_line(k, ok, detail))
    sys.exit(0 if all(ok for ok, _ in results) else 1)
