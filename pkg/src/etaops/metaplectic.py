"""Integral matrices in the metaplectic double cover: cocycle, composition,
inversion, and the coset decompositions used by the operators."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from math import gcd

import mpmath

__all__ = [
    "MatZ",
    "MetaElem",
    "IDENT",
    "MINUS_IDENT",
    "T_MAT",
    "S_MAT",
    "lift",
    "cocycle_sigma",
    "cocycle_sigma_numeric",
    "meta_compose",
    "meta_inverse",
    "coset_reps_doubledecomp",
    "decompose_ab0d",
    "random_gamma0",
    "in_gamma0",
]


@dataclass(frozen=True)
class MatZ:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c <= 0:
            raise ValueError(f"matrix {self.entries()} must have positive determinant")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, o: "MatZ") -> "MatZ":
        return MatZ(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def adjugate(self) -> "MatZ":
        return MatZ(self.d, -self.b, -self.c, self.a)

    def __repr__(self):
        return f"MatZ({self.a}, {self.b}; {self.c}, {self.d})"


@dataclass(frozen=True)
class MetaElem:
    mat: MatZ
    eps: int = 1

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError(f"eps must be +1 or -1, got {self.eps}")

    def __matmul__(self, other: "MetaElem") -> "MetaElem":
        return meta_compose(self, other)


IDENT = MatZ(1, 0, 0, 1)
MINUS_IDENT = MatZ(-1, 0, 0, -1)
T_MAT = MatZ(1, 1, 0, 1)
S_MAT = MatZ(0, -1, 1, 0)


def lift(m: MatZ, eps: int = 1) -> MetaElem:
    return MetaElem(m, eps)


def in_gamma0(m: MatZ, N: int) -> bool:
    return m.det == 1 and m.c % N == 0


def _bottom_at_2i(c: int, d: int) -> tuple[int, int]:
    # c*tau + d at tau = 2i, as a Gaussian integer (re, im)
    return d, 2 * c


def _radicands(A: MatZ, B: MatZ):
    a2, b2, c2, d2 = B.entries()
    c1, d1 = A.c, A.d
    Y = _bottom_at_2i(c2, d2)
    X = _bottom_at_2i(c1 * a2 + d1 * c2, c1 * b2 + d1 * d2)
    return X, Y


def cocycle_sigma_numeric(A: MatZ, B: MatZ, dps: int = 50) -> int:
    """The cocycle from its principal-branch definition, evaluated at tau = 2i."""
    with mpmath.workdps(dps):
        tau = mpmath.mpc(0, 2)
        a2, b2, c2, d2 = B.entries()
        c1, d1 = A.c, A.d
        w = (a2 * tau + b2) / (c2 * tau + d2)
        val = mpmath.sqrt(c1 * w + d1) * mpmath.sqrt(c2 * tau + d2) / mpmath.sqrt(
            c1 * (a2 * tau + b2) + d1 * (c2 * tau + d2)
        )
        if abs(val - 1) < mpmath.mpf(10) ** (-dps // 2):
            return 1
        if abs(val + 1) < mpmath.mpf(10) ** (-dps // 2):
            return -1
        raise ArithmeticError(f"cocycle evaluated to {val}, not a sign")


def cocycle_sigma(A: MatZ, B: MatZ) -> int:
    """The cocycle sigma(A, B) in {+1, -1}.

    All radicands at tau = 2i are Gaussian rationals, so the branch question
    reduces to whether Arg X - Arg Y lies in (-pi, pi]; exact ties (X/Y a
    negative real) are settled by sign, near-ties by the numeric evaluator.
    """
    if A.det <= 0 or B.det <= 0:
        raise ValueError("cocycle needs positive determinants")
    (xr, xi), (yr, yi) = _radicands(A, B)
    diff = math.atan2(xi, xr) - math.atan2(yi, yr)
    # X * conj(Y)
    wr = xr * yr + xi * yi
    wi = xi * yr - xr * yi
    if wi == 0 and wr < 0:
        return 1 if diff > 0 else -1
    gap = abs(abs(diff) - math.pi)
    if gap < 1e-9:
        return cocycle_sigma_numeric(A, B)
    return 1 if abs(diff) < math.pi else -1


def meta_compose(x: MetaElem, y: MetaElem) -> MetaElem:
    return MetaElem(x.mat @ y.mat, x.eps * y.eps * cocycle_sigma(x.mat, y.mat))


def meta_inverse(x: MetaElem) -> MetaElem:
    if x.mat.det != 1:
        raise ValueError("meta_inverse only supports determinant-one matrices")
    inv = x.mat.adjugate()
    return MetaElem(inv, x.eps * cocycle_sigma(x.mat, inv))


def coset_reps_doubledecomp(l: int, N: int, m: int) -> list[MatZ]:
    """Upper-triangular (a, b; 0, d) with ad = l, 0 <= b < d, gcd(N, a) = 1
    and gcd(a, b, d) = m, in lexicographic (a, b) order."""
    if l < 1 or N < 1 or m < 1 or l % (m * m) or gcd(N, m) != 1:
        raise ValueError(f"invalid parameters l={l}, N={N}, m={m}")
    reps = []
    for a in range(1, l + 1):
        if l % a or gcd(N, a) != 1:
            continue
        d = l // a
        for b in range(d):
            if gcd(gcd(a, b), d) == m:
                reps.append(MatZ(a, b, 0, d))
    return reps


def _inverse_mod_centered(u: int, v: int) -> int:
    # y with u*y = 1 mod v, of minimal magnitude
    if v == 1:
        return 0
    y = pow(u, -1, v)
    if y > v // 2:
        y -= v
    return y


def decompose_ab0d(a: int, b: int, d: int, N: int, l: int) -> tuple[MetaElem, MatZ, MetaElem]:
    """Write the lift of (a, b; 0, d) as g1 * (1, 0; 0, l)~ * g2 with g1, g2 in
    the cover of Gamma0(N).

    The sign of g1 is chosen so that the metaplectic product is exactly the
    lift with eps = +1.
    """
    if a < 1 or a * d != l or not (0 <= b < d) or gcd(gcd(a, b), d) != 1 or gcd(N, a) != 1:
        raise ValueError(f"inadmissible representative ({a}, {b}; 0, {d}) for N={N}, l={l}")
    Nd = N * d
    x = 0
    while gcd(Nd, -N * b + a * x) != 1:
        x += 1
        if x > Nd + a:
            raise ArithmeticError("no valid x found")
    u = -N * b + a * x
    y = _inverse_mod_centered(u % Nd, Nd)
    z = (1 - u * y) // Nd
    assert u * y + Nd * z == 1
    g1 = MatZ(u, z, -Nd, y)
    g2 = MatZ(a * y, b * y - d * z, N, x)
    alpha = MatZ(1, 0, 0, l)
    target = MatZ(a, b, 0, d)
    prod = meta_compose(meta_compose(MetaElem(g1), MetaElem(alpha)), MetaElem(g2))
    if prod.mat != target:
        raise ArithmeticError(f"recomposition gave {prod.mat}, expected {target}")
    return MetaElem(g1, prod.eps), alpha, MetaElem(g2)


def _random_gamma0_letter(rng: random.Random, N: int) -> MatZ:
    kind = rng.randrange(4)
    if kind == 0:
        k = rng.choice([-3, -2, -1, 1, 2, 3])
        return MatZ(1, k, 0, 1)
    if kind == 1:
        k = rng.choice([-2, -1, 1, 2])
        return MatZ(1, 0, N * k, 1)
    if kind == 2:
        # a generic element with random bottom row (N c', d)
        while True:
            c = N * rng.randint(-4, 4)
            d = rng.randint(-30, 30)
            if d != 0 and gcd(c, d) == 1:
                break
        if c == 0:
            return MatZ(d, rng.randint(-5, 5), 0, d) if d in (1, -1) else MatZ(1, 0, 0, 1)
        # a*d - b*c = 1 with a taken mod c
        a = pow(d, -1, abs(c))
        b = (a * d - 1) // c
        return MatZ(a, b, c, d)
    return MINUS_IDENT


def random_gamma0(N: int, word_length: int, seed) -> MatZ:
    """A pseudo-random element of Gamma0(N), deterministic in the seed.

    Letters are powers of T, lower unipotents with entry divisible by N,
    elements with a random bottom row, and -I.
    """
    rng = random.Random(seed)
    m = IDENT
    for _ in range(word_length):
        m = m @ _random_gamma0_letter(rng, N)
    return m
