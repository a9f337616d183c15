import random
from fractions import Fraction

import mpmath
import pytest

from etaops.arith import divisors
from etaops.characters import EtaCharacter, EtaExponents
from etaops.express import ExpressProblem
from etaops.metaplectic import T_MAT, MetaElem
from etaops.heckeops import (
    IncompatibleCharacters,
    OperatorSpec,
    R_even,
    R_odd,
    R_value,
    _tletar_internal_coeff,
    eta_order_function,
    newman_admissible,
    newman_check,
    tl_general,
    tl_level1_etapower,
    tl_order_bound,
    tl_rad_case,
)
from etaops.qseries import QExp24, cusp_classes, eta_power_coeffs, eta_quotient_series, ord_at_cusp, series_add, series_scale

THETA3 = EtaExponents(4, {1: -6, 2: 15, 4: -6})
TARGET3 = EtaExponents(4, {1: -3, 2: 6})
ETA2_8 = EtaExponents(8, {1: 2})
LEVEL8_P2_EVEN = EtaExponents(8, {1: 1, 2: -2, 4: 5, 8: -2})
ETA8_2 = EtaExponents(2, {1: 8})


def op_for(l, src, tgt):
    return OperatorSpec(l, EtaCharacter(src), EtaCharacter(tgt))


def admissible_grid(rs, lmax):
    return [(r, l) for r in rs for l in range(1, lmax + 1) if newman_admissible(r, l)]


def test_operator_rejects_incompatible():
    with pytest.raises(IncompatibleCharacters):
        op_for(7, EtaExponents(2, {1: -3, 2: 7}), EtaExponents(2, {1: 1, 2: 3}))


def test_rad_case_identity_for_l1():
    f = eta_quotient_series(THETA3, 40)
    out = tl_rad_case(op_for(1, THETA3, THETA3), f)
    assert out.series == f and out.exponent == Fraction(1, 4)


def _squares3(n):
    count = 0
    r = int(n**0.5) + 1
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            z2 = n - x * x - y * y
            if z2 < 0:
                continue
            z = int(z2**0.5)
            if z * z == z2:
                count += 1 if z == 0 else 2
    return count


@pytest.mark.parametrize("beta", [1, 2])
def test_rad_case_picks_r3_progression(beta):
    l = 2 ** (2 * beta + 1)
    f = eta_quotient_series(THETA3, 3 * 4 ** (beta - 1) + 40 * l)
    out = tl_rad_case(op_for(l, THETA3, TARGET3), f).series
    first = 3 * 4 ** (beta - 1)
    assert out.offset24 * l == 24 * first
    for n, c in enumerate(out.coeffs[:40]):
        assert c == _squares3(first + l * n)


def _explicit_coset_sum(f, l, t, shifts):
    """sum_b e(-t b / 24) f((tau + b) / l) with b running over shifted residues, as a
    dict e24l -> complex coefficient where the exponent is e24l / (24 l)."""
    out = {}
    for i, c in enumerate(f.coeffs):
        e = f.offset24 + 24 * i
        acc = 0
        for b0 in range(l):
            b = b0 + l * shifts[b0]
            acc += mpmath.expjpi(2 * mpmath.mpf(b * (e - t * l)) / (24 * l))
        out[e] = c * acc
    return out


def test_rad_case_representative_independence():
    rng = random.Random(3)
    cases = [(8, 2, ETA2_8, LEVEL8_P2_EVEN), (4, 8, THETA3, TARGET3), (2, 4, ETA8_2, ETA8_2)]
    for N, l, src, tgt in cases:
        op = op_for(l, src, tgt)
        f = eta_quotient_series(src, 30)
        t = EtaCharacter(tgt)(MetaElem(T_MAT)).exponent
        filt = tl_rad_case(op, f).series
        for _ in range(3):
            shifts = [rng.randint(-3, 3) for _ in range(l)]
            with mpmath.workdps(40):
                explicit = _explicit_coset_sum(f, l, t, shifts)
            for e, val in explicit.items():
                want = l * filt.coeff(e // l) if e % l == 0 and e // l < filt.prec24 else 0
                assert abs(val - want) < 1e-20, (N, l, e)


def test_rad_case_linear():
    src = ETA8_2
    other = EtaExponents(2, {1: 4, 2: 2})
    op = op_for(4, src, src)
    f, g = eta_quotient_series(src, 40), eta_quotient_series(other, 40)
    # both share the T-class of the source when sum n r_n agrees mod 24
    assert (f.offset24 - g.offset24) % 24 == 0
    lhs = tl_rad_case(op, series_add(series_scale(f, 3), series_scale(g, -5))).series
    rhs = series_add(series_scale(tl_rad_case(op, f).series, 3), series_scale(tl_rad_case(op, g).series, -5))
    assert lhs == rhs


def test_general_matches_rad_case_when_both_apply():
    op = op_for(8, THETA3, TARGET3)
    f = eta_quotient_series(THETA3, 8 * 30)
    gen = tl_general(op, f)
    rad = tl_rad_case(op, f)
    # T f = l^{-k/2} S and T f = l^{1-k/2} filter, so S = l * filter
    n = min(gen.series.trunc, rad.series.trunc)
    assert gen.series.truncate(n) == series_scale(rad.series, 8).truncate(n)


@pytest.mark.parametrize("r,l", [(2, 13), (24, 2), (1, 25), (8, 4)])
def test_general_matches_level1_formula(cache, r, l):
    ch = EtaCharacter(EtaExponents(1, {1: r}))
    f = QExp24(r, eta_power_coeffs(r, 40 * l, cache))
    s = tl_general(OperatorSpec(l, ch, ch), f).series
    g = tl_level1_etapower(r, l, 24 * 30, cache)
    n = min(s.trunc, g.trunc)
    assert s.offset24 == g.offset24
    assert s.coeffs[:n] == g.coeffs[:n]


def test_level1_identity_and_delta(cache):
    for r in (1, 2, 3, 24):
        s = tl_level1_etapower(r, 1, 24 * 50 + r, cache)
        assert list(s.coeffs) == eta_power_coeffs(r, 50, cache)
    s = tl_level1_etapower(24, 2, 24 * 60 + 24, cache)
    P = eta_power_coeffs(24, 60, cache)
    lam = s.coeffs[0]
    assert all(c == lam * p for c, p in zip(s.coeffs, P))
    # l^{r/4} T_2 Delta with the weight-12 normalization: 2^6 * 2^{-5} * tau(2)
    assert lam == 2 * -24


def test_two_path_level1(cache):
    for r, l in admissible_grid(range(-6, 25), 49):
        if l > 25 and r not in (1, 2, 3, 12, 24):
            continue  # the full grid runs in the acceptance suite
        s = tl_level1_etapower(r, l, 600, cache)
        for i, c in enumerate(s.coeffs):
            assert c == R_value(s.offset24 + 24 * i, r, l, cache), (r, l, i)


def test_R_examples(cache):
    assert R_even(2, 2, 1, cache) == 1
    assert R_odd(1, 1, 1, cache) == 1
    lam = R_even(2, 2, 25, cache)
    assert R_even(50, 2, 25, cache) == lam * -1  # P_2(2) = -1
    with pytest.raises(ValueError):
        R_odd(1, 1, 2, cache)


def test_R_negative_r_is_rational(cache):
    v = R_even(-30, -6, 5, cache)
    assert v == Fraction(1, 125)


def test_newman_examples(cache):
    assert newman_check(0, 7, 500, cache).passed
    assert newman_check(2, 13, 2000, cache).passed
    assert newman_check(1, 49, 2000, cache).passed
    assert newman_check(1, 25, 1000, cache).passed


def test_vanishing(cache):
    for r, l in [(3, 49), (2, 13), (4, 7), (-2, 13), (6, 5)]:
        for n in range(-300, 3000):
            if n % l == 0 and (n // l - r) % 24 == 0:
                continue
            assert _tletar_internal_coeff(r, l, n, cache) == 0, (r, l, n)


def test_divisor_guard_holds_on_grid():
    for r, l in admissible_grid(range(-6, 25), 49):
        for d in divisors(l):
            assert (r * (d * d - 1)) % 24 == 0


def test_order_bound_trivial_l():
    op = op_for(1, THETA3, THETA3)
    order = eta_order_function(THETA3)
    for c, _, _ in cusp_classes(4):
        assert tl_order_bound(op, order, 1, c) == ord_at_cusp(THETA3, c)


@pytest.mark.parametrize("r,p,beta", [(2, 5, 1), (2, 13, 1), (4, 19, 1), (2, 5, 2), (8, 19, 1)])
def test_order_bound_prime_level(r, p, beta):
    prob = ExpressProblem(r, p, beta)
    src = EtaExponents(p, {1: r})
    op = op_for(p**beta, src, prob.block(0))
    assert tl_order_bound(op, eta_order_function(src), 1, 1) == Fraction(r, 24 * p**beta)


def test_order_bound_below_actual_at_infinity():
    cases = [(8, THETA3, TARGET3), (2, ETA2_8, LEVEL8_P2_EVEN), (4, ETA8_2, ETA8_2), (16, ETA8_2, ETA8_2)]
    for l, src, tgt in cases:
        op = op_for(l, src, tgt)
        N = src.level
        out = tl_rad_case(op, eta_quotient_series(src, 60 * l)).series
        bound = tl_order_bound(op, eta_order_function(src), 1, N)
        assert bound <= Fraction(out.offset24, 24)
