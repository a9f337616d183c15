"""Number-theoretic primitives: Kronecker symbol, Moebius, divisor sums,
the rad family, 24th roots of unity and quadratic Gauss sums."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import NamedTuple

import gmpy2
import mpmath
from sympy import divisors as _sympy_divisors
from sympy import factorint as _sympy_factorint

__all__ = [
    "Mu24",
    "GaussValue",
    "RadFamily",
    "factorize",
    "divisors",
    "kronecker",
    "moebius",
    "sigma_divisors",
    "rad_family",
    "squarefree_part",
    "is_square",
    "gauss_sum_bruteforce",
    "gauss_sum_formula",
]


@lru_cache(maxsize=65536)
def _factor_cached(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(_sympy_factorint(n).items()))


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer as {p: e}."""
    if n < 1:
        raise ValueError(f"factorize needs a positive integer, got {n}")
    return dict(_factor_cached(n))


@lru_cache(maxsize=16384)
def _divisors_cached(n: int) -> tuple[int, ...]:
    return tuple(_sympy_divisors(n))


def divisors(n: int) -> tuple[int, ...]:
    """Positive divisors of n in increasing order."""
    if n < 1:
        raise ValueError(f"divisors needs a positive integer, got {n}")
    return _divisors_cached(n)


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def squarefree_part(n: int) -> int:
    """The square-free integer s with n = s * (square); sign is kept."""
    if n == 0:
        raise ValueError("squarefree part of 0 is undefined")
    s = -1 if n < 0 else 1
    for p, e in factorize(abs(n)).items():
        if e % 2:
            s *= p
    return s


def _jacobi(m: int, n: int) -> int:
    # n odd and positive
    m %= n
    result = 1
    while m:
        while m % 2 == 0:
            m //= 2
            if n % 8 in (3, 5):
                result = -result
        m, n = n, m
        if m % 4 == 3 and n % 4 == 3:
            result = -result
        m %= n
    return result if n == 1 else 0


def kronecker(m: int, n: int) -> int:
    """Kronecker-Jacobi symbol (m/n) on all of Z x Z."""
    if n == 0:
        return 1 if m in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if m < 0:
            result = -1
    if n % 2 == 0:
        if m % 2 == 0:
            return 0
        v = 1 if m % 8 in (1, 7) else -1
        while n % 2 == 0:
            n //= 2
            result *= v
    if n == 1:
        return result
    return result * _jacobi(m, n)


def moebius(n: int) -> int:
    if n < 1:
        raise ValueError(f"moebius needs n >= 1, got {n}")
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def sigma_divisors(k) -> int:
    """Sum of positive divisors of k, or 0 when k is not a positive integer."""
    k = Fraction(k)
    if k.denominator != 1 or k <= 0:
        return 0
    n = int(k)
    return sum(divisors(n))


class RadFamily(NamedTuple):
    rad: int
    radE: int
    radO: int
    radp: int
    irad: int
    iradp: int


def rad_family(m: int) -> RadFamily:
    """Radicals split by exponent parity, and the matching cofactors."""
    if m < 1:
        raise ValueError(f"rad_family needs m >= 1, got {m}")
    radE = radO = 1
    for p, e in factorize(m).items():
        if e % 2:
            radO *= p
        else:
            radE *= p
    rad = radE * radO
    radp = radE * radE * radO
    return RadFamily(rad, radE, radO, radp, m // rad, m // radp)


@dataclass(frozen=True)
class Mu24:
    """The root of unity e(exponent/24)."""

    exponent: int = 0

    def __post_init__(self):
        object.__setattr__(self, "exponent", self.exponent % 24)

    @classmethod
    def from_sign(cls, s: int) -> "Mu24":
        if s not in (1, -1):
            raise ValueError(f"not a sign: {s}")
        return cls(0 if s == 1 else 12)

    def __mul__(self, other: "Mu24") -> "Mu24":
        return Mu24(self.exponent + other.exponent)

    def __truediv__(self, other: "Mu24") -> "Mu24":
        return Mu24(self.exponent - other.exponent)

    def __pow__(self, k: int) -> "Mu24":
        return Mu24(self.exponent * k)

    def inverse(self) -> "Mu24":
        return Mu24(-self.exponent)

    def is_sign(self) -> bool:
        return self.exponent in (0, 12)

    def sign(self) -> int:
        if not self.is_sign():
            raise ValueError(f"e({self.exponent}/24) is not real")
        return 1 if self.exponent == 0 else -1

    def value(self) -> complex:
        return complex(mpmath.expjpi(mpmath.mpf(self.exponent) / 12))

    def __repr__(self):
        return f"Mu24({self.exponent})"


@dataclass(frozen=True)
class GaussValue:
    """coeff * i**i_power * sqrt(sqrt_part), kept in canonical form."""

    coeff: Fraction
    sqrt_part: int = 1
    i_power: int = 0

    def __post_init__(self):
        coeff = Fraction(self.coeff)
        s = self.sqrt_part
        if s < 1:
            raise ValueError("sqrt_part must be positive")
        if coeff == 0:
            object.__setattr__(self, "coeff", Fraction(0))
            object.__setattr__(self, "sqrt_part", 1)
            object.__setattr__(self, "i_power", 0)
            return
        free = 1
        for p, e in factorize(s).items():
            coeff *= p ** (e // 2)
            if e % 2:
                free *= p
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "sqrt_part", free)
        object.__setattr__(self, "i_power", self.i_power % 4)

    def to_mpc(self, dps: int = 50) -> mpmath.mpc:
        with mpmath.workdps(dps):
            unit = (1, 1j, -1, -1j)[self.i_power]
            return mpmath.mpc(unit) * mpmath.mpf(self.coeff.numerator) / self.coeff.denominator * mpmath.sqrt(self.sqrt_part)


_GAUSS_BITS = 256


@lru_cache(maxsize=64)
def _roots_table(m: int):
    ctx = gmpy2.context(precision=_GAUSS_BITS)
    with gmpy2.context(ctx):
        two_pi = 2 * gmpy2.const_pi()
        return tuple(gmpy2.mpc(gmpy2.cos(two_pi * j / m), gmpy2.sin(two_pi * j / m)) for j in range(m))


@lru_cache(maxsize=64)
def _kron_table(m: int) -> tuple[int, ...]:
    return tuple(kronecker(b, m) for b in range(m))


def gauss_sum_bruteforce(m: int, t: int) -> mpmath.mpc:
    """Sum over b mod m of (b/m) e(tb/m), evaluated at about 75 digits."""
    if m < 1 or m % 2 == 0:
        raise ValueError(f"modulus must be odd and positive, got {m}")
    roots = _roots_table(m)
    chi = _kron_table(m)
    weights = [0] * m
    for b in range(m):
        if chi[b]:
            weights[(t * b) % m] += chi[b]
    with gmpy2.context(precision=_GAUSS_BITS):
        acc = gmpy2.mpc(0)
        for j, w in enumerate(weights):
            if w:
                acc += w * roots[j]
        re, im = acc.real, acc.imag
    with mpmath.workdps(75):
        # an exact gmpy2 zero converts to a malformed mpf, so route it explicitly
        return mpmath.mpc(mpmath.mpf(re) if re else 0, mpmath.mpf(im) if im else 0)


def gauss_sum_formula(m: int, t: int) -> GaussValue:
    """Closed form of the quadratic Gauss sum for odd m."""
    if m < 1 or m % 2 == 0:
        raise ValueError(f"modulus must be odd and positive, got {m}")
    fam = rad_family(m)
    if t % fam.irad:
        return GaussValue(Fraction(0))
    u = sum(1 for p in factorize(fam.radO) if p % 4 == 3)
    coeff = Fraction(m, fam.radE * fam.radO) * kronecker(t // fam.iradp, fam.radO)
    s = t // fam.irad
    for p in factorize(fam.radE):
        coeff *= p - 1 - p * kronecker(s, p) ** 2
    return GaussValue(coeff, fam.radO, (u * u) % 4)
