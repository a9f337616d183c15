"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
one PASS/FAIL line per criterion.
"""

import importlib
import random
from fractions import Fraction

import mpmath
import pytest

from etaops.arith import divisors, gauss_sum_bruteforce, gauss_sum_formula, is_square
from etaops.characters import EtaCharacter, EtaExponents, RealDirichlet, compatible_closed_form, compatible_sample_oracle
from etaops.express import ExpressProblem, build_identity, certify_identity
from etaops.heckeops import (
    OperatorSpec,
    eta_order_function,
    newman_admissible,
    newman_check,
    tl_order_bound,
    tl_rad_case,
)
from etaops.qseries import CoefficientCache, eta_power_coeffs, eta_quotient_series, ord_at_cusp, series_scale, valence_terms
from etaops.search import (
    admissible_pairs,
    dimension_candidates,
    enumerate_holomorphic_etaquotients,
    findl,
    nk_rows,
)

F = Fraction
PAIR1 = (EtaExponents(2, {1: -3, 2: 7}), EtaExponents(2, {1: 1, 2: 3}))
PAIR2 = (EtaExponents(4, {1: -6, 2: 15, 4: -6}), EtaExponents(4, {1: -3, 2: 6}))


# 1 ----------------------------------------------------------------------------

# C(3998 + 13709 n), n = 0..9, with C from eta^-3(tau) eta^7(2 tau) = q^{11/24} sum C(n) q^n
C_TABLE = [-201, 201, 804, -603, -603, -201, -1005, 1407, 1005, 603]


@pytest.mark.criterion(1)
def test_criterion_1_coefficient_table():
    top = 3998 + 13709 * 9
    s = eta_quotient_series(PAIR1[0], top)
    assert s.offset24 == 11
    got = [s.coeffs[3998 + 13709 * n] for n in range(10)]
    assert got == C_TABLE
    for n, c in enumerate(got):
        m = n - 6283
        rhs = 41 * s.coeffs[m // 13709] if m % 13709 == 0 and m >= 0 else 0
        assert (c - rhs) % 201 == 0, n


# 2 ----------------------------------------------------------------------------


def _oracle_grid():
    """(N, r, r', l) combinations: the two named pairs at l = 1..24 and at
    some admissible l, plus pairs from small spaces at both admissible and
    random l."""
    grid = []
    for r, r2 in (PAIR1, PAIR2):
        N = r.level
        for l in list(range(1, 25)) + [29, 53, 32, 50, 72, 98]:
            grid.append((N, r, r2, l))
    rng = random.Random(2)
    for N, k in [(3, F(1)), (4, F(1, 2)), (6, F(1, 2)), (5, F(1)), (8, F(1, 2)), (4, F(1))]:
        rows = admissible_pairs([(N, k)])
        for _, _, r, r2, adm in rng.sample(rows, 4):
            good = adm.members(200)[:6]
            for l in good + rng.sample(range(1, 49), 10 - len(good)):
                grid.append((N, r, r2, l))
    return grid


@pytest.mark.criterion(2)
def test_criterion_2_compatibility():
    problems = []
    adm1 = findl(2, 2, *PAIR1)
    if adm1.describe() != "l = 5 (mod 24)":
        problems.append(f"pair 1: {adm1.describe()}")
    grid = _oracle_grid()
    assert len(grid) >= 200
    seen = {True: 0, False: 0}
    for i, (N, r, r2, l) in enumerate(grid):
        triv = RealDirichlet.trivial(N)
        closed = compatible_closed_form(N, triv, r, triv, r2, l)
        seen[closed] += 1
        verdict = compatible_sample_oracle(N, EtaCharacter(r), EtaCharacter(r2), l, 1000, seed=i)
        if closed and verdict.found:
            problems.append(f"oracle contradiction at N={N} {r.vector} {r2.vector} l={l}")
    assert seen[True] and seen[False]
    adm2 = findl(4, F(3, 2), *PAIR2)
    if adm2.kind != "half_integral" or adm2.l0 != 2 or adm2.m2_residues != frozenset({0, 2, 4, 16}):
        problems.append(f"pair 2: {adm2.describe()}")
    assert not problems, problems


# 3 ----------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_criterion_3_enumeration_tables(tables):
    strict = {str(N): [str(min(ks)), str(max(ks))] for N, ks in nk_rows(True)}
    assert strict == tables["nk_strict"]
    assert sorted([N, str(k)] for N, k in dimension_candidates(strict=False)) == sorted(tables["nk_equal"])
    for p in (2, 3, 5, 7):
        for N, k in dimension_candidates(strict=True):
            if N != p:
                continue
            # r_1 + r_p = 2k, 24 ord at infinity = r_1 + p r_p >= 0, 24 ord at 0 = p r_1 + r_p >= 0
            twok = int(2 * k)
            lo, hi = -(-(-twok) // (p - 1)), (p * twok) // (p - 1)
            want = {(x, twok - x) for x in range(lo, hi + 1)}
            assert {q.vector for q in enumerate_holomorphic_etaquotients(p, k)} == want, (p, k)
    for key, rows in tables["eta_quotients_nonprime"].items():
        N, k = key.split(",")
        got = [list(q.vector) for q in enumerate_holomorphic_etaquotients(int(N), F(k))]
        assert got == rows, key
    assert len(tables["eta_quotients_nonprime"]["4,1/2"]) == 10
    assert len(tables["eta_quotients_nonprime"]["9,1/2"]) == 3


# 4 ----------------------------------------------------------------------------


@pytest.mark.criterion(4)
@pytest.mark.slow
def test_criterion_4_generalized_newman():
    cache = CoefficientCache()
    grid = [(r, l) for r in range(25) for l in range(1, 51) if newman_admissible(r, l)]
    assert (24, 35) in grid and (1, 25) in grid and (3, 49) in grid
    # odd r needs a square l; r = 3 (mod 6) also admits l = 9
    assert all((r, l) in grid for r in range(1, 25, 2) for l in (1, 25, 49))
    assert {(r, l) for r, l in grid if r % 2 and l not in (1, 25, 49)} == {(3, 9), (9, 9), (15, 9), (21, 9)}
    failures = []
    for r, l in grid:
        rep = newman_check(r, l, 2000, cache)
        if not rep.passed:
            failures.append((r, l, rep.discrepancy))
    assert not failures, failures


# 5 ----------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_criterion_5_gauss_sums():
    rng = random.Random(5)
    tol = mpmath.mpf(10) ** -20
    pairs = 0
    worst = mpmath.mpf(0)
    for m in range(1, 2001, 2):
        ts = {-2 * m, 2 * m, 0, m} | {rng.randint(-2 * m, 2 * m) for _ in range(16)}
        for t in ts:
            err = abs(gauss_sum_formula(m, t).to_mpc() - gauss_sum_bruteforce(m, t))
            worst = max(worst, err)
            pairs += 1
    assert pairs >= 10_000
    assert worst < tol, worst


# 6 ----------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_criterion_6_level_p_identities(identities):
    cache = CoefficientCache()
    families = {"r2": 0, "rn1": 0, "p19": 0}
    for fx in identities:
        prob = ExpressProblem(fx["r"], fx["p"], fx["beta"])
        ident = certify_identity(build_identity(prob, cache), 5, cache)
        assert ident.status == "verified", fx
        got = sorted((tuple(sorted(prob.block(y).nonzero().items())), c) for y, c in ident.terms)
        want = sorted((tuple(sorted((int(n), e) for n, e in t["exps"].items())), F(t["c"])) for t in fx["terms"])
        assert got == want, fx
        fam = "p19" if fx["p"] == 19 else "rn1" if fx["r"] == -1 else "r2"
        families[fam] += 1
    assert families == {"r2": 15, "rn1": 4, "p19": 11}
    lengths = {(fx["p"], fx["beta"]): len(fx["terms"]) for fx in identities if fx["r"] == -1}
    assert lengths == {(5, 2): 5, (5, 3): 26, (7, 2): 14, (13, 1): 7}


# 7 ----------------------------------------------------------------------------

LEVEL8_L2 = [
    (2, 0, F(1), {1: 1, 2: -2, 4: 5, 8: -2}),
    (2, 1, F(-1, 2), {1: 1, 4: -1, 8: 2}),
    (-2, 0, F(1), {1: -5, 4: 5, 8: -2}),
    (-2, 1, F(1, 2), {1: -5, 2: 2, 4: -1, 8: 2}),
    (4, 0, F(1), {1: -2, 2: 10, 4: -4}),
    (4, 1, F(-1, 4), {1: 2, 2: -2, 4: 4}),
    (-4, 0, F(1), {1: -14, 2: 14, 4: -4}),
    (-4, 1, F(1, 4), {1: -10, 2: 2, 4: 4}),
]
LEVEL8_L4 = [
    (4, 0, F(1), {1: 5, 2: -4, 4: 5, 8: -2}),
    (4, 1, F(-1, 4), {1: -1, 2: 2, 4: 5, 8: -2}),
    (4, 2, F(1, 2), {1: 5, 2: -2, 4: -1, 8: 2}),
    (4, 3, F(1, 8), {1: -1, 2: 4, 4: -1, 8: 2}),
]


def _check_level8(l, r, j, c, exps):
    src = EtaExponents(8, {1: r})
    lhs = EtaExponents(8, exps)
    assert lhs.weight == F(r, 2)
    op = OperatorSpec(l, EtaCharacter(src), EtaCharacter(lhs))
    lower = {
        d: min(ord_at_cusp(lhs, d), tl_order_bound(op, eta_order_function(src), 1, d)) for d in (1, 2, 4)
    }
    budget = valence_terms(8, F(r, 2), F(lhs.offset24, 24), lower) + 5
    f = eta_quotient_series(src, l * (budget + 2) + 1)
    filt = tl_rad_case(op, f).series
    g = eta_quotient_series(lhs, budget)
    assert g.truncate(budget) == series_scale(filt, c).truncate(budget), (l, r, j)
    # the filter is the progression P_r(l n + j)
    P = eta_power_coeffs(r, l * budget + j)
    assert filt.offset24 * l == r + 24 * j, (l, r, j)
    assert list(filt.coeffs[:budget]) == [P[l * n + j] for n in range(budget)], (l, r, j)
    return budget


@pytest.mark.criterion(7)
def test_criterion_7_level8_identities():
    budgets = [_check_level8(2, *row) for row in LEVEL8_L2] + [_check_level8(4, *row) for row in LEVEL8_L4]
    assert min(budgets) > 5
    # eta^4(tau/4) = sum over j of (1/c_j) * (j-th identity), exponent by exponent
    nmax = 60
    P4 = eta_power_coeffs(4, 4 * nmax + 4)
    total = {}
    for r, j, c, exps in LEVEL8_L4:
        s = eta_quotient_series(EtaExponents(8, exps), nmax)
        assert s.offset24 == 1 + 6 * j
        for n, x in enumerate(s.coeffs[:nmax]):
            e = s.offset24 + 24 * n
            total[e] = total.get(e, 0) + x / c
    want = {1 + 6 * m: P4[m] for m in range(4 * nmax)}
    assert total == want
    # the two products below are the same eta-quotient, which gives the convolution
    prod03 = {n: LEVEL8_L4[0][3].get(n, 0) + LEVEL8_L4[3][3].get(n, 0) for n in divisors(8)}
    prod12 = {n: LEVEL8_L4[1][3].get(n, 0) + LEVEL8_L4[2][3].get(n, 0) for n in divisors(8)}
    assert prod03 == prod12
    for n in range(51):
        a = sum(P4[4 * i] * P4[4 * (n - i) + 3] for i in range(n + 1))
        b = sum(P4[4 * i + 1] * P4[4 * (n - i) + 2] for i in range(n + 1))
        assert a == -b, n


# 8 ----------------------------------------------------------------------------


def _r3_direct(n):
    count = 0
    top = int(n**0.5) + 1
    for x in range(-top, top + 1):
        for y in range(-top, top + 1):
            z2 = n - x * x - y * y
            if z2 >= 0 and is_square(z2):
                count += 1 if z2 == 0 else 2
    return count


@pytest.mark.criterion(8)
def test_criterion_8_three_squares():
    theta3, target = PAIR2
    t = eta_quotient_series(theta3, 300)
    assert t.offset24 == 0 and list(t.coeffs[:300]) == [_r3_direct(n) for n in range(300)]
    r3p = eta_quotient_series(target, 501)
    assert r3p.offset24 == 9
    for beta in (1, 2, 3):
        l = 2 ** (2 * beta + 1)
        first = 3 * 4 ** (beta - 1)
        f = eta_quotient_series(theta3, first + l * 502)
        out = tl_rad_case(OperatorSpec(l, EtaCharacter(theta3), EtaCharacter(target)), f).series
        assert out.offset24 * l == 24 * first
        r3 = out.coeffs
        assert r3[0] == f.coeffs[first] == 8
        for n in range(501):
            assert r3[n] == f.coeffs[first + l * n]
            assert r3[n] == r3[0] * r3p.coeffs[n], (beta, n)


# 9 ----------------------------------------------------------------------------

PROPERTY_SUITES = [
    ("test_metaplectic", "test_cocycle_identity", ()),
    ("test_metaplectic", "test_meta_compose_associative", ()),
    ("test_characters", "test_multiplicativity", ()),
    ("test_characters", "test_adjoint_symmetry", ()),
    ("test_characters", "test_fricke_involution", ()),
    ("test_heckeops", "test_general_matches_rad_case_when_both_apply", ()),
    ("test_heckeops", "test_rad_case_representative_independence", ()),
]


@pytest.mark.criterion(9)
def test_criterion_9_property_suites():
    for mod, name, args in PROPERTY_SUITES:
        getattr(importlib.import_module(mod), name)(*args)
    # two-path equality over the whole admissible grid
    from etaops.heckeops import R_value, tl_level1_etapower

    cache = CoefficientCache()
    for r in range(-6, 25):
        for l in range(1, 50):
            if not newman_admissible(r, l):
                continue
            s = tl_level1_etapower(r, l, 600, cache)
            for i, c in enumerate(s.coeffs):
                assert c == R_value(s.offset24 + 24 * i, r, l, cache), (r, l, i)
    search_tests = importlib.import_module("test_search")
    for N in range(2, 11):
        search_tests.test_completeness_against_box(N)
