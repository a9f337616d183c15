"""The operator T_l on q-expansions: the rad(l) | rad(N) filter, the general
coset sum, the level-one eta-power expansion and its closed-form
coefficients R(n; r, l)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable

import mpmath

from .arith import divisors, factorize, is_square, kronecker, moebius, rad_family
from .characters import EtaCharacter, EtaExponents, compatibility_conditions, v1v2_on_coset
from .metaplectic import T_MAT, MetaElem, coset_reps_doubledecomp
from .qseries import CoefficientCache, QExp24, ord_at_cusp

__all__ = [
    "IncompatibleCharacters",
    "OperatorSpec",
    "ScaledSeries",
    "radical",
    "tl_rad_case",
    "tl_general",
    "tl_level1_etapower",
    "R_even",
    "R_odd",
    "R_value",
    "NewmanReport",
    "newman_check",
    "newman_admissible",
    "tl_order_bound",
    "eta_order_function",
]


class IncompatibleCharacters(ValueError):
    """The source and target characters are not compatible for this l."""


def radical(n: int) -> int:
    out = 1
    for p in factorize(n):
        out *= p
    return out


@dataclass(frozen=True)
class OperatorSpec:
    """T_l from forms with character ``source`` to forms with ``target``."""

    l: int
    source: EtaCharacter
    target: EtaCharacter

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("l must be positive")
        if self.source.level != self.target.level:
            raise ValueError("characters live on different levels")
        if self.source.eta.weight != self.target.eta.weight:
            raise ValueError("characters have different weights")
        rep = compatibility_conditions(
            self.level, self.source.chi, self.source.eta, self.target.chi, self.target.eta, self.l
        )
        if not rep.compatible:
            raise IncompatibleCharacters(f"l={self.l} is not admissible for {self.source.eta} -> {self.target.eta}: {rep}")

    @property
    def level(self) -> int:
        return self.source.level

    @property
    def weight(self) -> Fraction:
        return self.source.eta.weight

    @property
    def rad_case(self) -> bool:
        return self.level % radical(self.l) == 0


@dataclass(frozen=True)
class ScaledSeries:
    """The value l**exponent * series, with the power of l kept symbolic."""

    series: QExp24
    l: int
    exponent: Fraction

    def prefactor_mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            return mpmath.mpf(self.l) ** (mpmath.mpf(self.exponent.numerator) / self.exponent.denominator)


def _t_exponent(ch: EtaCharacter) -> int:
    return ch(MetaElem(T_MAT)).exponent


def _check_source_class(op: OperatorSpec, f: QExp24):
    if f.is_zero:
        return
    want = _t_exponent(op.source)
    if (f.offset24 - want) % 24:
        raise ValueError(f"series offset {f.offset24}/24 does not match the source character e({want}/24) at T")


def tl_rad_case(op: OperatorSpec, f: QExp24) -> ScaledSeries:
    """T_l f when rad(l) | rad(N): keep the terms with e(n/l) = v2(T) and
    rescale exponents by 1/l. The returned series omits the factor l^{1-k/2}."""
    if not op.rad_case:
        raise ValueError(f"rad({op.l}) does not divide rad({op.level}); use tl_general")
    _check_source_class(op, f)
    l = op.l
    exponent = 1 - op.weight / 2
    if f.is_zero:
        return ScaledSeries(QExp24.zero(f.prec24 // l), l, exponent)
    t = _t_exponent(op.target)
    o = f.offset24
    mod = 24 * l
    first = next((i for i in range(min(l, f.trunc)) if (o + 24 * i - t * l) % mod == 0), None)
    if first is None:
        return ScaledSeries(QExp24.zero(-(-f.prec24 // l)), l, exponent)
    kept = f.coeffs[first::l]
    trunc = len(range(first, f.trunc, l))
    return ScaledSeries(QExp24((o + 24 * first) // l, kept, trunc), l, exponent)


def _snap(x, den: int, tol) -> Fraction:
    """Round a numerically computed value to the nearest rational with the given denominator."""
    if abs(mpmath.im(x)) > tol:
        raise ArithmeticError(f"expected a real value, got {x}")
    v = mpmath.re(x) * den
    n = int(mpmath.nint(v))
    if abs(v - n) > tol * den:
        raise ArithmeticError(f"value {x} is not within tolerance of a rational with denominator {den}")
    return Fraction(n, den)


def _digits(coeffs) -> int:
    m = max((abs(Fraction(c).numerator) for c in coeffs), default=1)
    return len(str(m))


def tl_general(op: OperatorSpec, f: QExp24, nterms: int | None = None) -> ScaledSeries:
    """T_l f from the full coset sum, valid without the rad condition.

    The returned series S satisfies T_l f = l^{-k/2} S. The a = 1 cosets are
    summed exactly; the remaining cosets use high-precision numerics and are
    rounded to rationals with the denominator of f.
    """
    _check_source_class(op, f)
    l, N, k = op.l, op.level, op.weight
    exponent = -k / 2
    if f.is_zero:
        raise ValueError("T_l of a zero series is zero; nothing to compute")
    o = f.offset24
    t = _t_exponent(op.target)
    den = 1
    for c in f.coeffs:
        if isinstance(c, Fraction):
            den = den * c.denominator // gcd(den, c.denominator)
    # the output is known below 24-exponent prec/l (a = 1 cosets are the coarsest)
    out_prec = -(-f.prec24 // l)
    if nterms is not None:
        out_prec = min(out_prec, o // l + 24 * nterms + 24)
    acc: dict[int, object] = {}
    # a = 1: the exact filter, multiplied by l
    for i, c in enumerate(f.coeffs):
        e = o + 24 * i
        if e >= out_prec * l:
            break
        if c and (e - t * l) % (24 * l) == 0:
            acc[e // l] = acc.get(e // l, 0) + l * c
    dps = _digits(f.coeffs) + 40
    with mpmath.workdps(dps):
        numeric: dict[int, object] = {}
        for a in divisors(l):
            if a == 1 or gcd(N, a) != 1:
                continue
            d = l // a
            ak = mpmath.mpf(a) ** (mpmath.mpf(k.numerator) / k.denominator)
            reps = [m for m in coset_reps_doubledecomp(l, N, 1) if m.a == a]
            mus = [(m.b, v1v2_on_coset(N, op.source, op.target, l, m).exponent) for m in reps]
            for i, c in enumerate(f.coeffs):
                if not c:
                    continue
                e = o + 24 * i
                # f((a tau + b)/d) contributes c e(e b/(24 d)) q^{e a^2/(24 l)}
                num = e * a * a
                if num >= out_prec * l:
                    break
                s = mpmath.mpc(0)
                for b, mu in mus:
                    s += mpmath.expjpi(mpmath.mpf(mu) / 12 + mpmath.mpf(e * b) / (12 * d))
                val = ak * s * mpmath.mpf(Fraction(c).numerator) / Fraction(c).denominator
                numeric[num] = numeric.get(num, 0) + val
        tol = mpmath.mpf(10) ** (-(dps // 2))
        for num, val in numeric.items():
            if num % l:
                if abs(val) > tol * max(1, abs(val)):
                    raise ArithmeticError(f"nonzero coefficient off the q^(1/24) lattice at {num}/{24 * l}")
                continue
            scale = max(mpmath.mpf(1), abs(val))
            acc[num // l] = acc.get(num // l, 0) + _snap(val, den, tol * scale)
    keys = [e for e, v in acc.items() if v]
    if not keys:
        return ScaledSeries(QExp24.zero(out_prec), l, exponent)
    start = min(keys)
    if any((e - start) % 24 for e in keys):
        raise ArithmeticError("T_l output mixes residue classes; characters are not compatible")
    n = (out_prec - start + 23) // 24
    coeffs = [0] * n
    for e, v in acc.items():
        j = (e - start) // 24
        if 0 <= j < n:
            coeffs[j] += v
    return ScaledSeries(QExp24(start, coeffs, n), l, exponent)


# level one eta powers ---------------------------------------------------


def _check_rl(r: int, l: int):
    if l < 1:
        raise ValueError("l must be positive")
    if (r * (l - 1)) % 24:
        raise ValueError(f"24 does not divide r(l-1) for r={r}, l={l}")
    if r % 2 and not is_square(l):
        raise ValueError(f"odd r={r} needs a perfect square l, got {l}")


def _cache(cache):
    return cache if cache is not None else CoefficientCache()


def _tletar_internal_coeff(r: int, l: int, nprime: int, cache: CoefficientCache) -> Fraction:
    """Coefficient of q^{nprime/(24 l)} in l^{r/4} T_l eta^r, summed directly
    over the cosets (a, b; 0, l/a)."""
    terms = []
    for a in divisors(l):
        arg = Fraction(Fraction(nprime, a * a) - r, 24)
        if arg.denominator != 1 or arg < 0:
            continue
        P = cache.P(r, arg)
        if P:
            terms.append((a, P))
    if not terms:
        return Fraction(0)
    dps = max(len(str(abs(P))) for _, P in terms) + 40
    with mpmath.workdps(dps):
        total = mpmath.mpc(0)
        for a, P in terms:
            d = l // a
            g = gcd(a, d)
            s = mpmath.mpc(0)
            x = Fraction(nprime - r * l * l, 24 * a * l)
            for b in range(d):
                if gcd(gcd(b, a), d) != 1:
                    continue
                psi = 1 if r % 2 == 0 else kronecker(-b, g)
                if psi:
                    frac = (x * b) % 1
                    s += psi * mpmath.expjpi(2 * mpmath.mpf(frac.numerator) / frac.denominator)
            pre = mpmath.mpf(a) ** (mpmath.mpf(r) / 2) * mpmath.expjpi(-mpmath.mpf(r * (d - 1)) / 4)
            total += pre * s * P
        tol = mpmath.mpf(10) ** (-20)
        # negative r brings powers of a | l into the denominator
        den = l ** ((1 - r) // 2) if r < 0 else 1
        return _snap(total, den, tol * max(1, abs(total)))


def _public_start(r: int, l: int) -> int:
    # smallest n = r mod 24 that can carry a nonzero coefficient
    low = min(Fraction(a * a * r, l) for a in divisors(l))
    n = r - 24 * ((r - low) // 24)
    while n - 24 >= low:
        n -= 24
    while n < low:
        n += 24
    return n


def tl_level1_etapower(r: int, l: int, nmax: int, cache: CoefficientCache | None = None) -> QExp24:
    """Expansion of l^{r/4} T_l eta^r up to q^{nmax/24}, summed coset by coset."""
    _check_rl(r, l)
    cache = _cache(cache)
    start = _public_start(r, l)
    if nmax < start:
        return QExp24.zero(start)
    ns = range(start, nmax + 1, 24)
    coeffs = [_tletar_internal_coeff(r, l, n * l, cache) for n in ns]
    return QExp24(start, coeffs, len(ns))


def R_even(n: int, r: int, l: int, cache: CoefficientCache | None = None) -> Fraction:
    """R(n; r, l) for even r: the coefficient of q^{n/24} in l^{r/4} T_l eta^r."""
    if r % 2:
        raise ValueError("R_even needs even r")
    _check_rl(r, l)
    cache = _cache(cache)
    total = Fraction(0)
    for a in divisors(l):
        d = l // a
        assert (r * (d * d - 1)) % 24 == 0
        arg = Fraction(n * l, a * a) - r
        if arg.denominator != 1 or arg.numerator % 24:
            continue
        P = cache.P(r, arg / 24)
        if not P:
            continue
        assert (r * (d - 1)) % 4 == 0
        sign = -1 if (r * (d - 1) // 4) % 2 else 1
        g24 = gcd(24 * a, n - r * l)
        inner = Fraction(0)
        for t in divisors(gcd(a, d)):
            if (g24 * t) % (24 * a) == 0:
                inner += moebius(t) * Fraction(d, t)
        total += Fraction(a) ** (r // 2) * sign * inner * P
    if r >= 0 and total.denominator != 1:
        raise ArithmeticError(f"R({n}; {r}, {l}) = {total} is not integral")
    return total


def R_odd(n: int, r: int, l: int, cache: CoefficientCache | None = None) -> Fraction:
    """R(n; r, l) for odd r and square l."""
    if r % 2 == 0:
        raise ValueError("R_odd needs odd r")
    _check_rl(r, l)
    cache = _cache(cache)
    eps = 2 if (r - 1) // 2 % 2 == 0 else -2
    total = Fraction(0)
    for a in divisors(l):
        d = l // a
        assert (r * (d * d - 1)) % 24 == 0
        fam = rad_family(gcd(a, d))
        if (fam.rad * (n - r * l)) % (24 * a):
            continue
        arg = Fraction(n * l, a * a) - r
        if arg.denominator != 1 or arg.numerator % 24:
            continue
        P = cache.P(r, arg / 24)
        if not P:
            continue
        X = fam.rad * (n - r * l) // (24 * a)
        # a^{r/2} / sqrt(radp) = a^{(r-1)/2} * sqrt(a / radp), a rational square
        ratio = Fraction(a, fam.radp)
        if not (is_square(ratio.numerator) and is_square(ratio.denominator)):
            raise ArithmeticError(f"a/radp(a,d) = {ratio} is not a square")
        root = Fraction(isqrt(ratio.numerator), isqrt(ratio.denominator))
        term = Fraction(a) ** ((r - 1) // 2) * root * d * P
        term *= kronecker(eps, d) * kronecker(fam.radE, fam.radO) * kronecker(X, fam.radO)
        for p in factorize(fam.radE):
            term *= p - 1 - p * kronecker(X, p) ** 2
        total += term
    return total


def R_value(n: int, r: int, l: int, cache: CoefficientCache | None = None) -> Fraction:
    return R_even(n, r, l, cache) if r % 2 == 0 else R_odd(n, r, l, cache)


@dataclass(frozen=True)
class NewmanReport:
    r: int
    l: int
    nmax: int
    passed: bool
    checked: int
    eigenvalue: Fraction
    discrepancy: tuple[int, Fraction, Fraction] | None = None


def newman_admissible(r: int, l: int) -> bool:
    return (r * (l - 1)) % 24 == 0 and (r % 2 == 0 or is_square(l))


def newman_check(r: int, l: int, nmax: int, cache: CoefficientCache | None = None) -> NewmanReport:
    """Check R(n; r, l) = R(r; r, l) P_r((n - r)/24) for every integer n up
    to nmax, starting below the first possibly nonzero term."""
    _check_rl(r, l)
    cache = _cache(cache)
    lam = R_value(r, r, l, cache)
    start = min(0, r, l * r) - 24
    checked = 0
    for n in range(start, nmax + 1):
        lhs = R_value(n, r, l, cache)
        rhs = lam * cache.P(r, Fraction(n - r, 24))
        checked += 1
        if lhs != rhs:
            return NewmanReport(r, l, nmax, False, checked, lam, (n, lhs, rhs))
    return NewmanReport(r, l, nmax, True, checked, lam)


# cusp orders --------------------------------------------------------------

OrderFunction = Callable[[int, int], Fraction]


def eta_order_function(spec: EtaExponents) -> OrderFunction:
    """(numerator, denominator) of a cusp -> order of the eta-quotient there."""
    return lambda x, y: ord_at_cusp(spec, y, x)


def tl_order_bound(op: OperatorSpec, order: OrderFunction, a: int, c: int) -> Fraction:
    """Lower bound for the order of T_l f at the cusp a/c, from the orders of f."""
    if c < 1 or gcd(a, c) != 1:
        raise ValueError(f"cusp {a}/{c} needs c > 0 and gcd(a, c) = 1")
    if not op.rad_case:
        raise ValueError("the bound is only available when rad(l) | rad(N)")
    l = op.l
    best = None
    for lam in range(l):
        x, y = a + c * lam, c * l
        g = gcd(x, y)
        val = Fraction(g * g, l) * order(x // g, y // g)
        best = val if best is None or val < best else best
    return best
