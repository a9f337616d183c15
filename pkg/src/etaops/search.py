"""Searches over one-dimensional spaces: the (N, k) candidates, holomorphic
eta-quotients of a given level and weight, admissible l between two of
them, and the constant c in T_l eta^r = c eta^r'."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Iterable, Iterator

from .arith import divisors, is_square, squarefree_part
from .characters import EtaCharacter, EtaExponents, RealDirichlet, compatible_closed_form
from .heckeops import OperatorSpec, tl_general, tl_rad_case
from .qseries import cusp_classes, eta_quotient_series, index_gamma0, valence_terms

__all__ = [
    "AdmissibleL",
    "ProportionalityConstant",
    "dimension_candidates",
    "order_matrix",
    "exponent_bounds",
    "enumerate_holomorphic_etaquotients",
    "enumerate_box",
    "findl",
    "determine_constant",
    "admissible_pairs",
    "nk_rows",
    "format_eta",
    "pairs_to_csv",
    "quotients_to_csv",
]

SQUARES_MOD_24 = frozenset(m * m % 24 for m in range(24))


@dataclass(frozen=True)
class AdmissibleL:
    """The set of l for which T_l between two characters exists."""

    kind: str
    residues: frozenset[int] = frozenset()
    l0: int = 1
    m2_residues: frozenset[int] = frozenset()

    def __post_init__(self):
        if self.kind not in ("integral", "half_integral"):
            raise ValueError(f"unknown kind {self.kind!r}")

    def __contains__(self, l: int) -> bool:
        if l < 1:
            return False
        if self.kind == "integral":
            return l % 24 in self.residues
        if l % self.l0:
            return False
        m2 = l // self.l0
        return is_square(m2) and m2 % 24 in self.m2_residues

    def members(self, limit: int) -> list[int]:
        return [l for l in range(1, limit + 1) if l in self]

    @property
    def is_empty(self) -> bool:
        return not (self.residues if self.kind == "integral" else self.m2_residues)

    def describe(self) -> str:
        if self.kind == "integral":
            res = ", ".join(str(r) for r in sorted(self.residues))
            return f"l = {res} (mod 24)"
        res = ", ".join(str(r) for r in sorted(self.m2_residues))
        return f"l = {self.l0} m^2 with m^2 = {res} (mod 24)"


def dimension_candidates(strict: bool = True, max_level: int = 200) -> list[tuple[int, Fraction]]:
    """All (N, k) with k in (1/2)Z_{>0} and index(N) k < 12 (strict) or = 12."""
    out = []
    for N in range(1, max_level + 1):
        idx = index_gamma0(N)
        for twice_k in range(1, 24 * 2 + 1):
            k = Fraction(twice_k, 2)
            val = idx * k
            if (strict and val < 12) or (not strict and val == 12):
                out.append((N, k))
    return out


def nk_rows(strict: bool = True) -> list[tuple[int, list[Fraction]]]:
    """Candidates grouped by level, as printed in the tables."""
    rows: dict[int, list[Fraction]] = {}
    for N, k in dimension_candidates(strict):
        rows.setdefault(N, []).append(k)
    return sorted(rows.items())


def order_matrix(N: int) -> list[list[Fraction]]:
    """Row c, column n: 24 * (order at a cusp with denominator c of eta(n tau))."""
    divs = divisors(N)
    return [[Fraction(gcd(n, c) ** 2, n) for n in divs] for c in divs]


def _solve(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    # exact Gauss-Jordan elimination
    n = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next(i for i in range(col, n) if M[i][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for i in range(n):
            if i != col and M[i][col]:
                f = M[i][col]
                M[i] = [x - f * y for x, y in zip(M[i], M[col])]
    return [M[i][n] for i in range(n)]


def exponent_bounds(N: int, k) -> list[tuple[int, int]]:
    """Integer bounds for each r_n over the holomorphic polytope.

    The cusp orders s = A r are non-negative and satisfy one linear relation
    (the valence identity), so the polytope is a simplex in s. Its vertices
    map to r exactly, giving sharp per-coordinate bounds.
    """
    k = Fraction(k)
    A = order_matrix(N)
    classes = cusp_classes(N)
    total = Fraction(index_gamma0(N)) * k / 12 * 24
    verts = []
    for i, (c, width, count) in enumerate(classes):
        s = [Fraction(0)] * len(classes)
        s[i] = total / (width * count)
        verts.append(_solve(A, s))
    bounds = []
    for j in range(len(A)):
        vals = [v[j] for v in verts]
        bounds.append((math.ceil(min(vals)), math.floor(max(vals))))
    return bounds


def _search(A, lo, hi, target_sum: int, strict: bool) -> Iterator[tuple[int, ...]]:
    n = len(lo)
    rows = len(A)
    # best possible contribution of coordinates j.. to each constraint
    tail = [[Fraction(0)] * (n + 1) for _ in range(rows)]
    for c in range(rows):
        for j in range(n - 1, -1, -1):
            a = A[c][j]
            tail[c][j] = tail[c][j + 1] + max(a * lo[j], a * hi[j])
    sum_lo = [0] * (n + 1)
    sum_hi = [0] * (n + 1)
    for j in range(n - 1, -1, -1):
        sum_lo[j] = sum_lo[j + 1] + lo[j]
        sum_hi[j] = sum_hi[j + 1] + hi[j]
    vec = [0] * n
    partial = [Fraction(0)] * rows

    def ok(c, value):
        return value > 0 if strict else value >= 0

    def rec(j, remaining):
        if j == n - 1:
            x = remaining
            if not lo[j] <= x <= hi[j]:
                return
            vec[j] = x
            if all(ok(c, partial[c] + A[c][j] * x) for c in range(rows)):
                yield tuple(vec)
            return
        for x in range(lo[j], hi[j] + 1):
            rest = remaining - x
            if not sum_lo[j + 1] <= rest <= sum_hi[j + 1]:
                continue
            for c in range(rows):
                partial[c] += A[c][j] * x
            if all(partial[c] + tail[c][j + 1] >= 0 for c in range(rows)):
                vec[j] = x
                yield from rec(j + 1, rest)
            for c in range(rows):
                partial[c] -= A[c][j] * x

    yield from rec(0, target_sum)


def enumerate_holomorphic_etaquotients(N: int, k, cusp_only: bool = False) -> list[EtaExponents]:
    """Every eta-quotient of level N and weight k with non-negative (or, for
    cusp forms, positive) order at all cusps, in lexicographic order."""
    k = Fraction(k)
    if k <= 0 or (2 * k).denominator != 1:
        raise ValueError(f"weight must be a positive half-integer, got {k}")
    bounds = exponent_bounds(N, k)
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    A = order_matrix(N)
    return [EtaExponents.from_vector(N, v) for v in _search(A, lo, hi, int(2 * k), cusp_only)]


def enumerate_box(N: int, k, bound: int, cusp_only: bool = False) -> list[EtaExponents]:
    """Brute force over the box |r_n| <= bound; an oracle for small N."""
    k = Fraction(k)
    if (2 * k).denominator != 1:
        raise ValueError(f"weight must be a half-integer, got {k}")
    divs = divisors(N)
    A = order_matrix(N)
    out = []
    for head in product(range(-bound, bound + 1), repeat=len(divs) - 1):
        last = int(2 * k) - sum(head)
        if abs(last) > bound:
            continue
        v = head + (last,)
        orders = [sum(a * x for a, x in zip(row, v)) for row in A]
        if all(o > 0 if cusp_only else o >= 0 for o in orders):
            out.append(EtaExponents.from_vector(N, v))
    return out


def _odd_product(r: EtaExponents, r2: EtaExponents) -> int:
    prod = 1
    for (n, x), (_, y) in zip(r.exps, r2.exps):
        if (x - y) % 2:
            prod *= n
    return prod


def findl(N: int, k, r: EtaExponents, r2: EtaExponents) -> AdmissibleL | None:
    """All l making the eta-quotient characters of r and r2 compatible, or
    None when there are none."""
    k = Fraction(k)
    if r.level != N or r2.level != N:
        raise ValueError("level mismatch")
    if r.weight != k or r2.weight != k:
        raise ValueError("weight mismatch")
    triv = RealDirichlet.trivial(N)
    if k.denominator == 1:
        residues = frozenset(l % 24 for l in range(1, 25) if compatible_closed_form(N, triv, r, triv, r2, l))
        return AdmissibleL("integral", residues) if residues else None
    l0 = squarefree_part(_odd_product(r, r2))
    m2 = frozenset(m * m % 24 for m in range(1, 25) if compatible_closed_form(N, triv, r, triv, r2, l0 * m * m))
    return AdmissibleL("half_integral", l0=l0, m2_residues=m2) if m2 else None


@dataclass(frozen=True)
class ProportionalityConstant:
    """c = mantissa * l**exponent with 0 <= exponent < 1."""

    mantissa: Fraction
    l: int
    exponent: Fraction
    verified_to: int

    def as_float(self) -> float:
        return float(self.mantissa) * self.l ** float(self.exponent)

    def __str__(self):
        if self.exponent == 0:
            return str(self.mantissa)
        return f"{self.mantissa} * {self.l}^({self.exponent})"


def determine_constant(
    N: int, k, r: EtaExponents, r2: EtaExponents, l: int, via: str = "first_coeff", extra: int = 5, at: int = 0
) -> ProportionalityConstant:
    """The constant c with T_l eta^r = c eta^r2, read off from a coefficient
    and then certified on a valence budget.

    ``at`` picks which nonzero coefficient of eta^r2 supplies the ratio; the
    default is the leading one.
    """
    if via != "first_coeff":
        raise ValueError(f"unsupported method {via!r}")
    k = Fraction(k)
    op = OperatorSpec(l, EtaCharacter(r), EtaCharacter(r2))
    target_start = r2.offset24
    m = valence_terms(N, k, Fraction(target_start, 24), {}) + extra
    stop24 = target_start + 24 * m
    # the a = 1 cosets read input exponents up to l times the output range
    n_in = max(1, (stop24 * l - r.offset24) // 24 + 1)
    f = eta_quotient_series(r, n_in)
    out = tl_rad_case(op, f) if op.rad_case else tl_general(op, f)
    S = out.series
    g = eta_quotient_series(r2, m)
    if S.is_zero:
        raise ArithmeticError("T_l eta^r vanishes on the budget; no constant can be read off")
    if S.offset24 != g.offset24:
        raise ArithmeticError(f"leading exponents differ: {S.offset24}/24 vs {g.offset24}/24")
    nonzero = [i for i, c in enumerate(g.coeffs) if c]
    if at >= len(nonzero):
        raise ValueError(f"eta^r' has only {len(nonzero)} nonzero coefficients on the budget")
    if min(S.trunc, g.trunc) < m:
        raise ArithmeticError(f"operator output carries {S.trunc} terms, budget needs {m}")
    i = nonzero[at]
    ratio = Fraction(S.coeffs[i]) / Fraction(g.coeffs[i])
    if [Fraction(x) for x in S.coeffs[:m]] != [ratio * x for x in g.coeffs[:m]]:
        raise ArithmeticError("T_l eta^r is not proportional to eta^r' on the budget")
    e = Fraction(out.exponent)
    whole = math.floor(e)
    mant = ratio * Fraction(l) ** whole
    return ProportionalityConstant(mant, l, e - whole, m)


# tables --------------------------------------------------------------------


def format_eta(spec: EtaExponents, full: bool = True) -> str:
    """The eta^r_n notation; with ``full`` every divisor is printed."""
    parts = [f"eta^{r}_{n}" for n, r in spec.exps if full or r]
    return "*".join(parts) if parts else "1"


def admissible_pairs(
    candidates: Iterable[tuple[int, Fraction]] | None = None, cusp_only: bool = False
) -> list[tuple[int, Fraction, EtaExponents, EtaExponents, AdmissibleL]]:
    """Ordered pairs of holomorphic eta-quotients with at least one admissible l."""
    if candidates is None:
        candidates = dimension_candidates(strict=True)
    rows = []
    for N, k in candidates:
        quots = enumerate_holomorphic_etaquotients(N, k, cusp_only)
        for r in quots:
            for r2 in quots:
                adm = findl(N, k, r, r2)
                if adm is not None:
                    rows.append((N, k, r, r2, adm))
    return rows


def quotients_to_csv(N: int, k, quots: list[EtaExponents]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["N", "k"] + [f"r_{n}" for n in divisors(N)])
    for q in quots:
        w.writerow([N, str(Fraction(k))] + list(q.vector))
    return buf.getvalue()


def pairs_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["N", "k", "source", "target", "kind", "l0", "residues"])
    for N, k, r, r2, adm in rows:
        res = adm.residues if adm.kind == "integral" else adm.m2_residues
        w.writerow([N, str(k), format_eta(r), format_eta(r2), adm.kind, adm.l0, " ".join(str(x) for x in sorted(res))])
    return buf.getvalue()
