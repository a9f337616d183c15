"""Multiplier systems of eta-quotients, real Dirichlet characters, and the
compatibility decision for the operator T_l."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Mapping

from .arith import Mu24, divisors, factorize, kronecker, squarefree_part
from .metaplectic import (
    MINUS_IDENT,
    T_MAT,
    MatZ,
    MetaElem,
    decompose_ab0d,
    random_gamma0,
)

__all__ = [
    "EtaExponents",
    "RealDirichlet",
    "EtaCharacter",
    "CompatibilityReport",
    "OracleVerdict",
    "v_eta",
    "v_r",
    "delta_of",
    "compatibility_conditions",
    "compatible_closed_form",
    "compatible_sample_oracle",
    "fricke_transform",
    "v1v2_on_coset",
]

Evaluator = Callable[[MetaElem], Mu24]


@dataclass(frozen=True)
class EtaExponents:
    """The eta-quotient prod_{n | N} eta(n tau)^{r_n}."""

    level: int
    exps: tuple[tuple[int, int], ...]

    def __init__(self, level: int, exps: Mapping[int, int] | None = None):
        if level < 1:
            raise ValueError(f"level must be positive, got {level}")
        exps = dict(exps or {})
        for n in exps:
            if n < 1 or level % n:
                raise ValueError(f"{n} does not divide the level {level}")
        full = tuple((n, int(exps.get(n, 0))) for n in divisors(level))
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "exps", full)

    @classmethod
    def from_vector(cls, level: int, vec) -> "EtaExponents":
        divs = divisors(level)
        vec = tuple(vec)
        if len(vec) != len(divs):
            raise ValueError(f"expected {len(divs)} exponents for level {level}")
        return cls(level, dict(zip(divs, vec)))

    def __getitem__(self, n: int) -> int:
        return dict(self.exps).get(n, 0)

    @property
    def vector(self) -> tuple[int, ...]:
        return tuple(r for _, r in self.exps)

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(self.vector), 2)

    @property
    def offset24(self) -> int:
        """24 times the order at infinity."""
        return sum(n * r for n, r in self.exps)

    def nonzero(self) -> dict[int, int]:
        return {n: r for n, r in self.exps if r}

    def __str__(self):
        parts = [f"eta^{r}_{n}" for n, r in self.exps if r]
        return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class RealDirichlet:
    """d -> (disc/d) on integers coprime to the modulus; disc = 1 is trivial."""

    modulus: int
    disc: int = 1

    def __post_init__(self):
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        if self.disc == 0 or self.disc % 4 not in (0, 1):
            raise ValueError(f"discriminant {self.disc} must be nonzero and 0 or 1 mod 4")
        for p in factorize(abs(self.disc)):
            if self.modulus % p:
                raise ValueError(f"prime {p} of the discriminant does not divide the modulus {self.modulus}")

    @classmethod
    def trivial(cls, modulus: int) -> "RealDirichlet":
        return cls(modulus, 1)

    @property
    def is_trivial(self) -> bool:
        return squarefree_part(self.disc) == 1

    def __call__(self, d: int) -> int:
        if gcd(d, self.modulus) != 1:
            return 0
        return kronecker(self.disc, d)

    def inverse(self) -> "RealDirichlet":
        return self


def v_eta(x: MetaElem) -> Mu24:
    """Multiplier of eta on a determinant-one element of the cover."""
    a, b, c, d = x.mat.entries()
    if a * d - b * c != 1:
        raise ValueError("v_eta needs a determinant-one matrix")
    if c % 2:
        sym = kronecker(d, abs(c))
        e = (a + d - 3) * c - b * d * (c * c - 1)
    else:
        sym = kronecker(c, d)
        e = (a - 2 * d) * c - b * d * (c * c - 1) + 3 * d - 3
    if sym == 1:
        pass
    elif sym == -1:
        e += 12
    else:
        raise ArithmeticError(f"degenerate symbol for {x.mat}")
    if x.eps == -1:
        e += 12
    return Mu24(e)


def v_r(spec: EtaExponents, x: MetaElem) -> Mu24:
    """Character of the eta-quotient on an element of the cover of Gamma0(N)."""
    a, b, c, d = x.mat.entries()
    N = spec.level
    if x.mat.det != 1 or c % N:
        raise ValueError(f"{x.mat} is not in Gamma0({N})")
    total = 0
    for n, r in spec.exps:
        if r:
            total += r * v_eta(MetaElem(MatZ(a, b * n, c // n, d), x.eps)).exponent
    return Mu24(total)


@dataclass(frozen=True)
class EtaCharacter:
    """chi * v_r as an evaluator on the cover of Gamma0(N)."""

    eta: EtaExponents
    chi: RealDirichlet | None = None

    def __post_init__(self):
        if self.chi is None:
            object.__setattr__(self, "chi", RealDirichlet.trivial(self.eta.level))

    @property
    def level(self) -> int:
        return self.eta.level

    def __call__(self, x: MetaElem) -> Mu24:
        val = v_r(self.eta, x)
        if self.chi(x.mat.d) == -1:
            val = val * Mu24(12)
        return val


def _check_pair(r: EtaExponents, r2: EtaExponents):
    if r.level != r2.level:
        raise ValueError("eta-quotients live on different levels")
    if r.weight != r2.weight:
        raise ValueError(f"weights differ: {r.weight} vs {r2.weight}")


def delta_of(r: EtaExponents, r2: EtaExponents, l: int) -> int:
    """l^{2|k|} times the product of divisors n with r_n - r'_n odd."""
    _check_pair(r, r2)
    prod = 1
    for (n, x), (_, y) in zip(r.exps, r2.exps):
        if (x - y) % 2:
            prod *= n
    two_k = abs(sum(r.vector))
    return l**two_k * prod


def _delta_squarefree(r: EtaExponents, r2: EtaExponents, l: int) -> int:
    # square-free part of delta without forming l^{2|k|}
    prod = 1
    for (n, x), (_, y) in zip(r.exps, r2.exps):
        if (x - y) % 2:
            prod *= n
    if abs(sum(r.vector)) % 2:
        prod *= l
    return squarefree_part(prod)


@dataclass(frozen=True)
class CompatibilityReport:
    cond1: bool
    cond2: bool
    cond3: bool
    cond4: bool

    @property
    def compatible(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3 and self.cond4


def _character_condition(N: int, chi: RealDirichlet, chi2: RealDirichlet, sqf_delta: int, l: int) -> bool:
    """chi * chi2^{-1}(d) == (delta/d) for every nonzero d coprime to Nl.

    Both sides are periodic in d > 0 modulo M below, so a scan over one period
    (restricted to classes that contain integers coprime to Nl) decides it.
    Negative d only contributes the product of the signs of the
    discriminants, since delta > 0.
    """
    if squarefree_part(chi.disc * chi2.disc * sqf_delta) == 1:
        return True
    Nl = N * l
    M = lcm(4 * abs(chi.disc), 4 * abs(chi2.disc), 4 * sqf_delta)
    g = gcd(M, Nl)
    for x in range(1, M + 1):
        if gcd(x, g) != 1:
            continue
        if kronecker(chi.disc, x) * kronecker(chi2.disc, x) != kronecker(sqf_delta, x):
            return False
    return (chi.disc > 0) == (chi2.disc > 0)


def compatibility_conditions(
    N: int, chi: RealDirichlet, r: EtaExponents, chi2: RealDirichlet, r2: EtaExponents, l: int
) -> CompatibilityReport:
    _check_pair(r, r2)
    if r.level != N:
        raise ValueError("level mismatch")
    if l < 1:
        raise ValueError("l must be positive")
    s1 = sum((N // n) * x for n, x in r.exps)
    s1p = sum((N // n) * x for n, x in r2.exps)
    s2 = sum(n * x for n, x in r.exps)
    s2p = sum(n * x for n, x in r2.exps)
    c1 = (l * s1 - s1p) % 24 == 0
    c2 = (s2 - l * s2p) % 24 == 0
    if (N * l) % 2:
        c3 = delta_of(r, r2, l) % 4 == 1
    else:
        c3 = True
    c4 = _character_condition(N, chi, chi2, _delta_squarefree(r, r2, l), l)
    return CompatibilityReport(c1, c2, c3, c4)


def compatible_closed_form(
    N: int, chi: RealDirichlet, r: EtaExponents, chi2: RealDirichlet, r2: EtaExponents, l: int
) -> bool:
    """Decide whether chi*v_r and chi2*v_r2 are compatible for (1, 0; 0, l)."""
    return compatibility_conditions(N, chi, r, chi2, r2, l).compatible


@dataclass(frozen=True)
class OracleVerdict:
    counterexample: MatZ | None
    trials: int

    @property
    def found(self) -> bool:
        return self.counterexample is not None


def compatible_sample_oracle(N: int, v1: Evaluator, v2: Evaluator, l: int, trials: int, seed=0) -> OracleVerdict:
    """Randomized search for gamma in Gamma0(Nl) with v1(gamma) != v2(conjugate)."""
    rng = random.Random(seed)
    M = N * l
    for i in range(trials):
        if i == 0:
            g = T_MAT
        elif i == 1:
            g = MINUS_IDENT
        else:
            g = random_gamma0(M, rng.randint(1, 6), rng.getrandbits(64))
        a, b, c, d = g.entries()
        if v1(MetaElem(g)) != v2(MetaElem(MatZ(a, b * l, c // l, d))):
            return OracleVerdict(g, i + 1)
    return OracleVerdict(None, trials)


def fricke_transform(r: EtaExponents) -> EtaExponents:
    N = r.level
    return EtaExponents(N, {N // n: x for n, x in r.exps})


def v1v2_on_coset(N: int, v1: Evaluator, v2: Evaluator, l: int, rep: MatZ) -> Mu24:
    """The value (v1 |_alpha v2)^{-1} on the lift of (a, b; 0, d)."""
    a, b, c, d = rep.entries()
    if c != 0 or a * d != l:
        raise ValueError(f"{rep} is not an upper-triangular representative for l={l}")
    if a == 1:
        return v2(MetaElem(T_MAT)) ** (-b)
    g1, _, g2 = decompose_ab0d(a, b, d, N, l)
    return v1(g1).inverse() * v2(g2).inverse()
