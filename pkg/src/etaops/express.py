"""Express the progression series F_{r,p^beta} as a finite linear combination
of level-p eta-quotients, and certify the result.

The building block for an integer y is

    B_y = eta^r(p^ob tau) * (eta(p tau) / eta(tau))^{24 y / gcd(12, p - 1)}

whose expansion starts at q^{p^ob r / 24 + pi_p y}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd

from .arith import factorize, sigma_divisors
from .characters import EtaCharacter, EtaExponents
from .heckeops import OperatorSpec, eta_order_function, tl_order_bound
from .qseries import (
    CoefficientCache,
    QExp24,
    eta_quotient_series,
    ord_at_cusp,
    series_add,
    series_scale,
    valence_terms,
)

__all__ = [
    "ExpressProblem",
    "Identity",
    "ConditionResult",
    "ConditionFailed",
    "F_series",
    "a_coeff",
    "thresholds",
    "c_coeffs",
    "check_condition",
    "build_identity",
    "certify_identity",
    "verify_identity",
    "identity_to_json",
    "identity_from_json",
    "identity_to_latex",
    "identity_to_text",
    "factor_string",
]

SAFETY_MARGIN = 5


class ConditionFailed(ValueError):
    """The solvability condition does not hold for this problem."""


@dataclass(frozen=True)
class ExpressProblem:
    r: int
    p: int
    beta: int

    def __post_init__(self):
        if self.p < 2 or list(factorize(self.p)) != [self.p]:
            raise ValueError(f"p = {self.p} is not a prime")
        if self.beta < 1:
            raise ValueError("beta must be a positive integer")
        if (self.r * (self.p * self.p - 1)) % 24:
            raise ValueError(f"24 does not divide r(p^2 - 1) for r={self.r}, p={self.p}")

    @property
    def ob(self) -> int:
        return self.beta % 2

    @property
    def g(self) -> int:
        return gcd(12, self.p - 1)

    @property
    def pi_p(self) -> int:
        return (self.p - 1) // self.g

    @property
    def l(self) -> int:
        return self.p**self.beta

    @property
    def base(self) -> int:
        """r (p^{beta+ob} - 1) / 24, the P_r argument at n = 0."""
        return self.r * (self.p ** (self.beta + self.ob) - 1) // 24

    @property
    def n_min(self) -> int:
        # first n whose P_r argument is non-negative
        return -(self.base // self.l)

    def block(self, y: int) -> EtaExponents:
        Y = 24 * y // self.g
        if self.ob:
            r1, rp = -Y, self.r + Y
        else:
            r1, rp = self.r - Y, Y
        return EtaExponents(self.p, {1: r1, self.p: rp})

    def block_offset24(self, y: int) -> int:
        return self.p**self.ob * self.r + 24 * self.pi_p * y

    def y_bound(self) -> Fraction:
        """The explicit lower bound for y1 (before taking max with y0)."""
        p, b, ob, r = self.p, self.beta, self.ob, self.r
        if r >= 0:
            return Fraction(self.g, 24) * Fraction(p ** (b - ob) - 1, p ** (b - 1) * (p - 1)) * r
        return Fraction(self.g, 24) * Fraction(p ** (b + 1) - p ** (1 - ob), p - 1) * (-r)


@dataclass(frozen=True)
class ConditionResult:
    status: str  # "holds", "fails" or "vacuous"
    witness: int | None = None
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "holds"


@dataclass(frozen=True)
class Identity:
    problem: ExpressProblem
    terms: tuple[tuple[int, Fraction], ...]
    verified_to: int = 0
    status: str = "unverified"

    def term_dict(self) -> dict[int, Fraction]:
        return dict(self.terms)


def _cache(cache):
    return cache if cache is not None else CoefficientCache()


def F_series(prob: ExpressProblem, nmax: int, cache: CoefficientCache | None = None) -> QExp24:
    """F_{r,p^beta} from its first possibly nonzero term, with nmax + 1 coefficients."""
    cache = _cache(cache)
    n0 = prob.n_min
    last = prob.l * (n0 + nmax) + prob.base
    if last >= 0:
        cache.get(prob.r, last)
    coeffs = [cache.P(prob.r, prob.l * n + prob.base) for n in range(n0, n0 + nmax + 1)]
    return QExp24(prob.p**prob.ob * prob.r + 24 * n0, coeffs, nmax + 1)


def a_coeff(prob: ExpressProblem, y: int, nmax: int) -> list[int]:
    """a_0..a_nmax of the block B_y, from the logarithmic-derivative recursion."""
    p, r = prob.p, prob.r
    pob = p**prob.ob
    Y = 24 * y // prob.g
    w = [0] * (nmax + 1)
    for k in range(1, nmax + 1):
        w[k] = r * pob * sigma_divisors(Fraction(k, pob)) + Y * (p * sigma_divisors(Fraction(k, p)) - sigma_divisors(k))
    a = [0] * (nmax + 1)
    a[0] = 1
    for n in range(1, nmax + 1):
        s = sum(w[k] * a[n - k] for k in range(1, n + 1))
        q, rem = divmod(-s, n)
        if rem:
            raise ArithmeticError(f"non-integral block coefficient at n={n}")
        a[n] = q
    return a


def _progression_value(prob: ExpressProblem, cache, y: int) -> int:
    # P_r(base + p^beta pi_p y)
    return cache.P(prob.r, prob.base + prob.l * prob.pi_p * y)


def _y_window(prob: ExpressProblem) -> range:
    step = prob.l * prob.pi_p
    lo = -(prob.base // step)
    hi = max(lo, math.ceil(prob.y_bound())) + 24
    return range(lo, hi + 1)


def thresholds(prob: ExpressProblem, cache: CoefficientCache | None = None) -> tuple[int | None, int]:
    """(y0, y1). y0 is None when F vanishes on the whole search window."""
    cache = _cache(cache)
    y0 = next((y for y in _y_window(prob) if _progression_value(prob, cache, y)), None)
    bound = prob.y_bound()
    y1 = math.ceil(bound if y0 is None else max(Fraction(y0), bound))
    return y0, y1


def c_coeffs(prob: ExpressProblem, cache: CoefficientCache | None = None) -> dict[int, Fraction]:
    """c_y for y0 <= y <= y1 by peeling off one block at a time."""
    cache = _cache(cache)
    y0, y1 = thresholds(prob, cache)
    if y0 is None:
        raise ConditionFailed("F vanishes on the search window; y0 is undefined")
    pi = prob.pi_p
    depth = pi * (y1 - y0)
    blocks = {}
    c: dict[int, Fraction] = {}
    for y in range(y0, y1 + 1):
        val = Fraction(_progression_value(prob, cache, y))
        for yp in range(y0, y):
            val -= c[yp] * blocks[yp][pi * (y - yp)]
        c[y] = val
        blocks[y] = a_coeff(prob, y, depth)
    return c


def check_condition(prob: ExpressProblem, cache: CoefficientCache | None = None) -> ConditionResult:
    """Decide the hypothesis on the first nonzero progression term and the
    finite system of coefficient equations."""
    cache = _cache(cache)
    step = prob.l
    lo = -(prob.base // step)
    hi = _y_window(prob).stop * prob.pi_p
    ystar = next((y for y in range(lo, hi + 1) if cache.P(prob.r, prob.base + step * y)), None)
    if ystar is None:
        return ConditionResult("vacuous", None, "F vanishes on the search window")
    if ystar % prob.pi_p:
        return ConditionResult("fails", ystar, f"first nonzero index y = {ystar} is not a multiple of {prob.pi_p}")
    y0, y1 = thresholds(prob, cache)
    assert y0 is not None and y0 * prob.pi_p == ystar
    c = c_coeffs(prob, cache)
    pi = prob.pi_p
    depth = pi * (y1 - y0)
    blocks = {y: a_coeff(prob, y, depth) for y in c}
    for n in range(depth + 1):
        lhs = cache.P(prob.r, prob.base + prob.l * (pi * y0 + n))
        rhs = sum(c[y] * blocks[y][n - pi * (y - y0)] for y in range(y0, y1 + 1) if pi * (y - y0) <= n)
        if lhs != rhs:
            return ConditionResult("fails", n, f"coefficient equation fails at n = {n}")
    return ConditionResult("holds")


def build_identity(prob: ExpressProblem, cache: CoefficientCache | None = None) -> Identity:
    cache = _cache(cache)
    cond = check_condition(prob, cache)
    if not cond.holds:
        raise ConditionFailed(f"cannot build an identity for {prob}: {cond.status} ({cond.reason})")
    c = c_coeffs(prob, cache)
    terms = tuple((y, v) for y, v in sorted(c.items()) if v)
    return Identity(prob, terms)


def _lower_bound_at_one(prob: ExpressProblem, ys) -> Fraction:
    """Lower bound for the order of F - sum c_y B_y at the cusp 1/1."""
    src = EtaCharacter(EtaExponents(prob.p, {1: prob.r}))
    tgt = EtaCharacter(prob.block(0))
    op = OperatorSpec(prob.l, src, tgt)
    bounds = [tl_order_bound(op, eta_order_function(src.eta), 1, 1)]
    bounds += [ord_at_cusp(prob.block(y), 1) for y in ys]
    return min(bounds)


def certify_identity(
    ident: Identity, extra: int = SAFETY_MARGIN, cache: CoefficientCache | None = None
) -> Identity:
    """Compare both sides exactly to the valence budget plus ``extra`` terms.

    The right side is expanded with the product formula for eta-quotients,
    independently of the recursion used to compute c_y.
    """
    cache = _cache(cache)
    prob = ident.problem
    F = F_series(prob, 0, cache)
    offs = [prob.block_offset24(y) for y, _ in ident.terms]
    if not F.is_zero:
        offs.append(F.offset24)
    if not offs:
        return replace(ident, verified_to=1, status="verified")
    start24 = min(offs)
    lower = {1: _lower_bound_at_one(prob, [y for y, _ in ident.terms])}
    m = valence_terms(prob.p, Fraction(prob.r, 2), Fraction(start24, 24), lower) + extra
    stop24 = start24 + 24 * m
    nF = (stop24 - prob.p**prob.ob * prob.r) // 24 - prob.n_min
    lhs = F_series(prob, max(nF, 0), cache)
    rhs = QExp24.zero(stop24)
    for y, cy in ident.terms:
        nb = (stop24 - prob.block_offset24(y)) // 24
        if nb <= 0:
            continue
        rhs = series_add(rhs, series_scale(eta_quotient_series(prob.block(y), nb - 1), cy))
    lhs = lhs.truncate(min(lhs.trunc, max(0, (stop24 - lhs.offset24) // 24)))
    diff = series_add(lhs, series_scale(rhs, -1))
    if diff.prec24 < stop24:
        raise ArithmeticError("expansion shorter than the verification budget")
    ok = diff.is_zero or diff.offset24 >= stop24
    return replace(ident, verified_to=m, status="verified" if ok else "failed")


def verify_identity(ident: Identity, extra: int = SAFETY_MARGIN, cache: CoefficientCache | None = None) -> bool:
    return certify_identity(ident, extra, cache).status == "verified"


# rendering -----------------------------------------------------------------


def identity_to_json(ident: Identity) -> dict:
    prob = ident.problem
    return {
        "r": prob.r,
        "p": prob.p,
        "beta": prob.beta,
        "terms": [{"y": y, "c_num": Fraction(c).numerator, "c_den": Fraction(c).denominator} for y, c in ident.terms],
        "verified_to": ident.verified_to,
        "status": ident.status,
    }


def identity_from_json(blob: dict) -> Identity:
    prob = ExpressProblem(int(blob["r"]), int(blob["p"]), int(blob["beta"]))
    terms = tuple((int(t["y"]), Fraction(int(t["c_num"]), int(t["c_den"]))) for t in blob["terms"])
    return Identity(prob, terms, int(blob.get("verified_to", 0)), blob.get("status", "unverified"))


def factor_string(c, latex: bool = True) -> str:
    """Signed prime factorization, e.g. -2^{3} \\cdot 7."""
    c = Fraction(c)
    if c == 0:
        return "0"
    sign = "-" if c < 0 else ""

    def part(n: int) -> str:
        if n == 1:
            return "1"
        bits = []
        for q, e in factorize(n).items():
            if e == 1:
                bits.append(str(q))
            else:
                bits.append(f"{q}^{{{e}}}" if latex else f"{q}^{e}")
        return (" \\cdot " if latex else "*").join(bits)

    num = part(abs(c.numerator))
    if c.denominator == 1:
        return sign + num
    den = part(c.denominator)
    return f"{sign}\\frac{{{num}}}{{{den}}}" if latex else f"{sign}{num}/{den}"


def _frac_tex(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _eta_tex(spec: EtaExponents) -> str:
    out = []
    for n, e in spec.nonzero().items():
        arg = "\\tau" if n == 1 else f"{n}\\tau"
        out.append(f"\\eta^{{{e}}}({arg})")
    return "".join(out) or "1"


def _first_index(prob: ExpressProblem, cache) -> int:
    # the printed form starts at the first nonzero term, when there is one nearby
    cache = _cache(cache)
    for n in range(prob.n_min, prob.n_min + 64):
        if cache.P(prob.r, prob.base + prob.l * n):
            return n
    return prob.n_min


def _lhs_parts(prob: ExpressProblem, cache=None) -> tuple[Fraction, str]:
    n0 = _first_index(prob, cache)
    expo = Fraction(prob.p**prob.ob * prob.r + 24 * n0, 24)
    shift = prob.base + prob.l * n0
    pb = f"{prob.p}^{{{prob.beta}}}" if prob.beta > 1 else f"{prob.p}^1"
    return expo, f"P_{{{prob.r}}}\\left({pb}n + {shift}\\right)"


def identity_to_latex(ident: Identity, cache: CoefficientCache | None = None) -> str:
    prob = ident.problem
    expo, arg = _lhs_parts(prob, cache)
    q = {0: "", 1: "q"}.get(expo, f"q^{{{_frac_tex(expo)}}}")
    lhs = f"{q}\\sum_{{n \\in \\mathbb{{Z}}_{{\\geq 0}}}} {arg}q^n"
    pieces = []
    for i, (y, c) in enumerate(ident.terms):
        mag = factor_string(abs(Fraction(c)))
        body = ("" if mag == "1" else mag) + _eta_tex(prob.block(y))
        if i == 0:
            pieces.append(("-" if c < 0 else "") + body)
        else:
            pieces.append(("- " if c < 0 else "+ ") + body)
    rhs = " ".join(pieces) if pieces else "0"
    return f"{lhs} = {rhs}"


def identity_to_text(ident: Identity, cache: CoefficientCache | None = None) -> str:
    """Product notation: one term per line, c_y followed by the eta-quotient."""
    prob = ident.problem
    n0 = _first_index(prob, cache)
    expo = Fraction(prob.p**prob.ob * prob.r + 24 * n0, 24)
    lines = [
        f"F(r={prob.r}, p={prob.p}, beta={prob.beta}) = q^({_frac_tex(expo)}) sum P_{prob.r}({prob.l}n + {prob.base + prob.l * n0}) q^n"
    ]
    for y, c in ident.terms:
        lines.append(f"  y={y}: {factor_string(c, latex=False)} * {prob.block(y)}")
    lines.append(f"  status: {ident.status} (checked {ident.verified_to} coefficients)")
    return "\n".join(lines)
