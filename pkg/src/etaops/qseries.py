"""Exact q-expansions on the q^{1/24} lattice, eta-quotient expansions, cusp
orders and finite verification budgets for Gamma0(N)."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import gmpy2
import numpy as np

from .arith import divisors, factorize, sigma_divisors
from .characters import EtaExponents

__all__ = [
    "QExp24",
    "ResourceError",
    "CoefficientCache",
    "eta_power_coeffs",
    "eta_power_coeffs_recursive",
    "eta_quotient_series",
    "series_add",
    "series_sub",
    "series_scale",
    "series_mul",
    "series_pow",
    "series_invert",
    "dilate",
    "ord_at_cusp",
    "index_gamma0",
    "cusp_classes",
    "sturm_terms",
    "valence_terms",
    "series_equal_certified",
    "certify_modular_equality",
]


class ResourceError(RuntimeError):
    """A computation would exceed a configured size limit."""


def _norm_coeff(c):
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (int, np.integer)):
        return int(c)
    if type(c).__name__ == "mpz":
        return int(c)
    return Fraction(c) if not isinstance(c, int) else c


@dataclass(frozen=True)
class QExp24:
    """sum_n coeffs[n] q^{(offset24 + 24 n)/24} + O(q^{(offset24 + 24 trunc)/24}).

    Leading zeros are stripped on construction. The zero series keeps an
    empty coefficient tuple, trunc 0, and its precision in offset24.
    """

    offset24: int
    coeffs: tuple
    trunc: int

    def __init__(self, offset24: int, coeffs: Iterable, trunc: int | None = None):
        cs = [_norm_coeff(c) for c in coeffs]
        if trunc is None:
            trunc = len(cs)
        if trunc < 0:
            raise ValueError("trunc must be non-negative")
        cs = cs[:trunc] + [0] * max(0, trunc - len(cs))
        k = 0
        while k < len(cs) and cs[k] == 0:
            k += 1
        object.__setattr__(self, "offset24", offset24 + 24 * k)
        object.__setattr__(self, "coeffs", tuple(cs[k:]))
        object.__setattr__(self, "trunc", trunc - k)

    @classmethod
    def zero(cls, prec24: int) -> "QExp24":
        return cls(prec24, (), 0)

    @classmethod
    def one(cls, trunc: int) -> "QExp24":
        return cls(0, [1], trunc)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def prec24(self) -> int:
        """24 times the exponent of the error term."""
        return self.offset24 + 24 * self.trunc

    def coeff(self, e24: int):
        """Coefficient of q^{e24/24}; raises if that term is not known."""
        if e24 >= self.prec24:
            raise ValueError(f"q^{e24}/24 is beyond the truncation")
        if e24 < self.offset24 or (e24 - self.offset24) % 24:
            return 0
        return self.coeffs[(e24 - self.offset24) // 24]

    def exponents(self) -> list[Fraction]:
        return [Fraction(self.offset24 + 24 * i, 24) for i in range(self.trunc)]

    def terms(self):
        """(exponent, coefficient) pairs for nonzero coefficients."""
        return [(Fraction(self.offset24 + 24 * i, 24), c) for i, c in enumerate(self.coeffs) if c]

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.coeffs)

    def truncate(self, trunc: int) -> "QExp24":
        if trunc > self.trunc:
            raise ValueError("cannot extend a truncated series")
        return QExp24(self.offset24, self.coeffs[:trunc], trunc)

    def __add__(self, o):
        return series_add(self, o)

    def __sub__(self, o):
        return series_sub(self, o)

    def __mul__(self, o):
        if isinstance(o, QExp24):
            return series_mul(self, o)
        return series_scale(self, o)

    __rmul__ = __mul__

    def __neg__(self):
        return series_scale(self, -1)

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        more = ", ..." if self.trunc > 6 else ""
        return f"QExp24(q^({self.offset24}/24) * [{head}{more}] + O(q^({self.prec24}/24)))"


# dense integer arithmetic ------------------------------------------------


def _kronecker_mul(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    """First n coefficients of the product of two integer polynomials, via
    packing into one large integer."""
    a = list(a[:n])
    b = list(b[:n])
    if not a or not b:
        return [0] * n
    bound = max(map(abs, a)) * max(map(abs, b)) * min(len(a), len(b))
    if bound == 0:
        return [0] * n
    k = bound.bit_length() + 2
    k = (k + 7) // 8 * 8
    half = 1 << (k - 1)

    def pack(v):
        x = gmpy2.mpz(0)
        for c in reversed(v):
            x = (x << k) + c
        return x

    prod = pack(a) * pack(b)
    m = len(a) + len(b) - 1
    bias = pack([half] * m)
    x = int(prod + bias)
    nbytes = k // 8
    raw = x.to_bytes(m * nbytes + 1, "little")
    out = [int.from_bytes(raw[i * nbytes : (i + 1) * nbytes], "little") - half for i in range(min(m, n))]
    return out + [0] * (n - len(out))


def _common_denominator(cs) -> int:
    return reduce(lambda x, y: x * y // gcd(x, y), (c.denominator for c in cs if isinstance(c, Fraction)), 1)


def _mul_lists(a, b, n: int) -> list:
    da = _common_denominator(a)
    db = _common_denominator(b)
    ai = [int(c * da) for c in a[:n]]
    bi = [int(c * db) for c in b[:n]]
    out = _kronecker_mul(ai, bi, n)
    den = da * db
    if den == 1:
        return out
    return [Fraction(c, den) for c in out]


def _align(f: QExp24, g: QExp24):
    if not f.is_zero and not g.is_zero and (f.offset24 - g.offset24) % 24:
        raise ValueError(f"series live on different residue classes: {f.offset24} vs {g.offset24} (mod 24)")


def series_add(f: QExp24, g: QExp24) -> QExp24:
    _align(f, g)
    prec = min(f.prec24, g.prec24)
    if f.is_zero and g.is_zero:
        return QExp24.zero(prec)
    if f.is_zero or g.is_zero:
        h = g if f.is_zero else f
        if h.offset24 >= prec:
            return QExp24.zero(prec)
        return QExp24(h.offset24, h.coeffs, (prec - h.offset24) // 24)
    start = min(f.offset24, g.offset24)
    if start >= prec:
        return QExp24.zero(prec)
    n = (prec - start) // 24
    out = [0] * n
    for h in (f, g):
        s = (h.offset24 - start) // 24
        for i, c in enumerate(h.coeffs[: max(0, n - s)]):
            out[s + i] += c
    return QExp24(start, out, n)


def series_scale(f: QExp24, c) -> QExp24:
    c = Fraction(c)
    if c == 0:
        return QExp24.zero(f.prec24)
    return QExp24(f.offset24, [x * c for x in f.coeffs], f.trunc)


def series_sub(f: QExp24, g: QExp24) -> QExp24:
    return series_add(f, series_scale(g, -1))


def series_mul(f: QExp24, g: QExp24) -> QExp24:
    if f.is_zero or g.is_zero:
        # a zero series stores its precision in offset24
        return QExp24.zero(min(f.offset24 + g.prec24, g.offset24 + f.prec24))
    n = min(f.trunc, g.trunc)
    return QExp24(f.offset24 + g.offset24, _mul_lists(f.coeffs, g.coeffs, n), n)


def series_invert(f: QExp24) -> QExp24:
    if f.is_zero:
        raise ValueError("cannot invert a zero series")
    n = f.trunc
    a = f.coeffs
    a0 = Fraction(a[0])
    inv0 = 1 / a0
    g = [inv0] + [Fraction(0)] * (n - 1)
    for m in range(1, n):
        s = sum(a[k] * g[m - k] for k in range(1, m + 1) if a[k])
        g[m] = -s * inv0
    return QExp24(-f.offset24, g, n)


def series_pow(f: QExp24, k: int) -> QExp24:
    if k < 0:
        return series_pow(series_invert(f), -k)
    result = QExp24.one(f.trunc)
    base = f
    while k:
        if k & 1:
            result = series_mul(result, base)
        k >>= 1
        if k:
            base = series_mul(base, base)
    return result


def dilate(f: QExp24, m: int) -> QExp24:
    """f(m tau)."""
    if m < 1:
        raise ValueError("dilation factor must be positive")
    if f.is_zero:
        return QExp24.zero(m * f.prec24)
    out = [0] * (m * f.trunc)
    out[::m] = f.coeffs
    return QExp24(m * f.offset24, out, m * f.trunc)


# eta powers --------------------------------------------------------------


def _pentagonal(L: int, step: int = 1) -> list[tuple[int, int]]:
    """Sparse prod (1 - q^{step n}) below q^L."""
    terms = [(0, 1)]
    k = 1
    while True:
        added = False
        for s in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if s * step < L:
                terms.append((s * step, -1 if k % 2 else 1))
                added = True
        if not added:
            break
        k += 1
    return sorted(terms)


def _jacobi_cube(L: int, step: int = 1) -> list[tuple[int, int]]:
    """Sparse prod (1 - q^{step n})^3 below q^L."""
    terms = []
    j = 0
    while step * j * (j + 1) // 2 < L:
        terms.append((step * j * (j + 1) // 2, (-1) ** j * (2 * j + 1)))
        j += 1
    return terms


def _sparse_mul(dense: np.ndarray, sparse) -> np.ndarray:
    L = len(dense)
    out = np.zeros(L, dtype=object)
    for s, c in sparse:
        if s < L:
            out[s:] += c * dense[: L - s]
    return out


def _sparse_div(dense: np.ndarray, sparse) -> np.ndarray:
    # sparse has constant term 1
    L = len(dense)
    s_arr = np.array([s for s, _ in sparse if s > 0], dtype=np.int64)
    c_arr = np.array([c for s, c in sparse if s > 0], dtype=object)
    out = dense.copy()
    for i in range(1, L):
        k = np.searchsorted(s_arr, i, side="right")
        if k:
            out[i] -= np.dot(c_arr[:k], out[i - s_arr[:k]])
    return out


def _factor_plan(exps: Mapping[int, int], L: int):
    """Split prod (q^n; q^n)^{r_n} into sparse multiplications and divisions."""
    mults, divs = [], []
    for n, r in exps.items():
        if r == 0 or n >= L:
            continue
        target = mults if r > 0 else divs
        cubes, rest = divmod(abs(r), 3)
        if cubes:
            jc = _jacobi_cube(L, n)
            target.extend([jc] * cubes)
        if rest:
            pe = _pentagonal(L, n)
            target.extend([pe] * rest)
    return mults, divs


def _product_coeffs(exps: Mapping[int, int], L: int) -> list[int]:
    """Coefficients of prod_n (q^n; q^n)_inf^{r_n} below q^L."""
    if L <= 0:
        return []
    mults, divs = _factor_plan(exps, L)
    dense = np.zeros(L, dtype=object)
    dense[0] = 1
    for sp in mults:
        dense = _sparse_mul(dense, sp)
    for sp in divs:
        dense = _sparse_div(dense, sp)
    return [int(c) for c in dense]


def eta_power_coeffs_recursive(r: int, nmax: int) -> list[int]:
    """P_r(0..nmax) from n P_r(n) = -r sum sigma(k) P_r(n-k)."""
    sig = [0] + [sigma_divisors(k) for k in range(1, nmax + 1)]
    P = [1] + [0] * nmax
    for n in range(1, nmax + 1):
        s = sum(sig[k] * P[n - k] for k in range(1, n + 1))
        q, rem = divmod(-r * s, n)
        if rem:
            raise ArithmeticError("non-integral eta power coefficient")
        P[n] = q
    return P


class CoefficientCache:
    """Memoized prefixes of P_r, optionally backed by a JSON file.

    File layout: {"magic": "etaops-coeff-cache", "version": 1,
    "series": {"<r>": [P_r(0), P_r(1), ...]}}.
    """

    MAGIC = "etaops-coeff-cache"
    VERSION = 1

    def __init__(self, path: str | os.PathLike | None = None, max_terms: int = 2_000_000):
        self.path = Path(path) if path else None
        self.max_terms = max_terms
        self._data: dict[int, list[int]] = {}
        self._dirty = False
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path) as fh:
            blob = json.load(fh)
        if blob.get("magic") != self.MAGIC or blob.get("version") != self.VERSION:
            raise ValueError(f"{self.path} is not a version-{self.VERSION} coefficient cache")
        self._data = {int(r): [int(x) for x in v] for r, v in blob["series"].items()}

    def save(self):
        if not self.path or not self._dirty:
            return
        blob = {
            "magic": self.MAGIC,
            "version": self.VERSION,
            "series": {str(r): v for r, v in sorted(self._data.items())},
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".cache-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(blob, fh)
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._dirty = False

    def get(self, r: int, nmax: int) -> list[int]:
        """P_r(0..nmax), extending the stored prefix when needed."""
        if nmax + 1 > self.max_terms:
            raise ResourceError(f"P_{r} up to {nmax} exceeds the cache limit of {self.max_terms} terms")
        have = self._data.get(r)
        if have is None or len(have) <= nmax:
            # grow geometrically so repeated small extensions stay cheap
            want = max(nmax + 1, 2 * len(have) if have else 0)
            want = min(want, self.max_terms)
            self._data[r] = _product_coeffs({1: r}, want)
            self._dirty = True
        return self._data[r][: nmax + 1]

    def P(self, r: int, n) -> int:
        """P_r(n), with 0 for negative or non-integral n."""
        n = Fraction(n)
        if n.denominator != 1 or n < 0:
            return 0
        n = int(n)
        have = self._data.get(r)
        if have is None or len(have) <= n:
            self.get(r, n)
            have = self._data[r]
        return have[n]

    def known(self) -> dict[int, int]:
        return {r: len(v) for r, v in self._data.items()}


def eta_power_coeffs(r: int, nmax: int, cache: CoefficientCache | None = None) -> list[int]:
    """P_r(0..nmax), the coefficients of q^{-r/24} eta^r."""
    if nmax < 0:
        return []
    if cache is not None:
        return cache.get(r, nmax)
    return _product_coeffs({1: r}, nmax + 1)


def eta_quotient_series(spec: EtaExponents, nmax: int) -> QExp24:
    """Expansion of prod eta(n tau)^{r_n} with nmax + 1 coefficients."""
    coeffs = _product_coeffs(spec.nonzero(), nmax + 1)
    return QExp24(spec.offset24, coeffs, nmax + 1)


# cusps and budgets ---------------------------------------------------------


def ord_at_cusp(spec: EtaExponents, c: int, d: int = 1) -> Fraction:
    """Order at the cusp d/c, normalized so that width * ord is the order in
    the local parameter."""
    if c < 1 or gcd(c, d) != 1:
        raise ValueError(f"d/c = {d}/{c} must have c > 0 and gcd(c, d) = 1")
    return sum((Fraction(gcd(n, c) ** 2 * r, n) for n, r in spec.exps if r), Fraction(0)) / 24


def index_gamma0(N: int) -> int:
    if N < 1:
        raise ValueError("N must be positive")
    idx = N
    for p in factorize(N):
        idx = idx // p * (p + 1)
    return idx


def _phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def cusp_classes(N: int) -> list[tuple[int, int, int]]:
    """(c, width, count) for each divisor c | N; count cusps share denominator c."""
    out = []
    for c in divisors(N):
        width = N // gcd(c * c, N)
        out.append((c, width, _phi(gcd(c, N // c))))
    return out


def sturm_terms(N: int, k, min_offsets: Mapping[int, Fraction] | None = None, start=0) -> int:
    """Leading coefficients at infinity that force a form of weight k on
    Gamma0(N) (with unitary multiplier) to vanish.

    Without ``min_offsets`` every other cusp is assumed to have order >= 0,
    giving floor(index * k / 12) + 1.
    """
    k = Fraction(k)
    if k < 0 and min_offsets is None:
        raise ValueError("negative weight needs explicit cusp data")
    return valence_terms(N, k, Fraction(start), min_offsets or {})


def valence_terms(N: int, k, start, lower: Mapping[int, Fraction]) -> int:
    """Number of coefficients at infinity, beginning at exponent ``start``,
    whose vanishing forces the form to be zero.

    ``lower`` maps denominators c | N (c != N) to lower bounds for the order
    at cusps with that denominator; missing entries mean 0.
    """
    k = Fraction(k)
    start = Fraction(start)
    budget = Fraction(index_gamma0(N)) * k / 12
    for c, width, count in cusp_classes(N):
        if c == N:
            continue
        budget -= count * width * Fraction(lower.get(c, 0))
    if budget < start:
        return 1
    return math.floor(budget - start) + 1


def series_equal_certified(f: QExp24, g: QExp24, terms: int) -> bool:
    if terms > f.trunc or terms > g.trunc:
        raise ValueError(f"need {terms} terms but series carry {f.trunc} and {g.trunc}")
    if f.is_zero or g.is_zero:
        return f.is_zero and g.is_zero
    return f.offset24 == g.offset24 and f.coeffs[:terms] == g.coeffs[:terms]


def certify_modular_equality(f: QExp24, g: QExp24, N: int, k, lower: Mapping[int, Fraction]) -> tuple[bool, int]:
    """Compare two forms of weight k on Gamma0(N) with the same multiplier.

    ``lower`` bounds the order of f - g at each cusp denominator other than
    infinity. Returns (equal, number of coefficients compared).
    """
    _align(f, g)
    start24 = min(x.offset24 for x in (f, g) if not x.is_zero) if not (f.is_zero and g.is_zero) else 0
    m = valence_terms(N, k, Fraction(start24, 24), lower)
    need24 = start24 + 24 * m
    if f.prec24 < need24 or g.prec24 < need24:
        raise ValueError(f"series too short: need q^({need24}/24), have {f.prec24} and {g.prec24}")
    diff = series_sub(f, g)
    equal = diff.is_zero or diff.offset24 >= need24
    return equal, m
