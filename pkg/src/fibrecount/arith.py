"""Exact integer arithmetic: factorization, solubility indicators, constants.

Everything here is deterministic and reentrant.  The only shared state is a
prime-table cache that is built once per limit and read-only afterwards.

The central indicator is conic_soluble_global(m): whether the conic
x0^2 + x1^2 = m*x2^2 has a rational point.  For m > 0 this is the classical
sum-of-two-squares condition (every prime p = 3 mod 4 divides m to an even
power); for m < 0 there is no real point.  conic_soluble_local gives the
same answer place by place, and the product over all places recovers the
global indicator.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from math import gcd

import numpy as np

_PRIME_LOCK = threading.Lock()
_PRIME_CACHE: dict[int, np.ndarray] = {}
_SMALL_TRIAL_LIMIT = 10**6


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


def prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, cached per limit (read-only after build)."""
    with _PRIME_LOCK:
        hit = _PRIME_CACHE.get(limit)
    if hit is not None:
        return hit
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if is_p[i]:
            is_p[i * i::i] = False
    primes = np.nonzero(is_p)[0].astype(np.int64)
    primes.setflags(write=False)
    with _PRIME_LOCK:
        _PRIME_CACHE[limit] = primes
    return primes


def spf_sieve(limit: int) -> np.ndarray:
    """Smallest-prime-factor table for 0..limit."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    spf[1:] = np.arange(1, limit + 1)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == p:
            sl = spf[p * p::p]
            sl[sl == np.arange(p * p, limit + 1, p)] = p
    return spf


_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                 59, 61, 67, 71)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin with a fixed witness set.

    Proven correct below 3.3e24; the extended witness list has no known
    counterexample anywhere near the 128-bit scale this library targets.
    """
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int) -> int:
    """Deterministic Brent-cycle Pollard rho; n must be odd composite."""
    if n % 2 == 0:
        return 2
    for c in range(1, 100):
        y, m, g, r, q = 2, 128, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ArithmeticError(f"rho failed to split {n}")


@dataclass(frozen=True)
class Factorization:
    """Signed factorization: value = sign * prod(p**e)."""

    value: int
    factors: tuple  # ((prime, exponent), ...) with primes increasing
    sign: int

    def valuation(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0

    def unsigned(self) -> int:
        return abs(self.value)


def factor(m: int) -> Factorization:
    """Deterministic factorization of a nonzero integer.

    Trial division by all primes up to 1e6, then Brent's rho with
    Miller-Rabin primality gates.  Reproducible: no randomness anywhere.
    """
    if m == 0:
        raise DomainError("cannot factor 0")
    sign = 1 if m > 0 else -1
    n = abs(m)
    fs: dict[int, int] = {}
    if n > 1:
        for p in prime_sieve(_SMALL_TRIAL_LIMIT):
            p = int(p)
            if p * p > n:
                break
            while n % p == 0:
                fs[p] = fs.get(p, 0) + 1
                n //= p
        if n > 1:
            stack = [n]
            while stack:
                v = stack.pop()
                if v == 1:
                    continue
                if is_prime(v):
                    fs[v] = fs.get(v, 0) + 1
                    continue
                g = _pollard_brent(v)
                stack.append(g)
                stack.append(v // g)
    return Factorization(value=m, factors=tuple(sorted(fs.items())), sign=sign)


def valuation(m: int, p: int) -> int:
    """v_p(m) for m != 0."""
    if m == 0:
        raise DomainError("valuation of 0 is infinite")
    v = 0
    m = abs(m)
    while m % p == 0:
        m //= p
        v += 1
    return v


def conic_soluble_global(m: int, factorization: Factorization | None = None) -> int:
    """1 iff x0^2+x1^2 = m*x2^2 has a nontrivial rational point.

    Equivalently: m > 0 and v_p(m) is even at every prime p = 3 mod 4.
    m = 0 is outside the domain; the counting layer handles those fibres
    explicitly (they are soluble through the point (0:0:1)).
    """
    if m == 0:
        raise DomainError("indicator undefined at 0; zero fibres are handled upstream")
    if m < 0:
        return 0
    fz = factorization if factorization is not None else factor(m)
    for p, e in fz.factors:
        if p % 4 == 3 and e % 2 == 1:
            return 0
    return 1


def only_1mod4_factors(m: int) -> int:
    """1 iff every prime factor of m is congruent to 1 mod 4 (so 1 -> 1).

    Completely multiplicative in m.
    """
    if m < 1:
        raise DomainError("argument must be a positive integer")
    if m == 1:
        return 1
    for p, _ in factor(m).factors:
        if p % 4 != 1:
            return 0
    return 1


def two_squares_decomposition(m: int) -> tuple[int, int, int]:
    """Write m > 0 uniquely as 2**t * k**2 * r with every prime of k
    congruent to 3 mod 4 and every prime of r congruent to 1 mod 4 --
    possible exactly when conic_soluble_global(m) = 1."""
    if m < 1:
        raise DomainError("argument must be a positive integer")
    t = valuation(m, 2)
    k = 1
    r = 1
    for p, e in factor(m).factors:
        if p == 2:
            continue
        if p % 4 == 3:
            if e % 2 == 1:
                raise DomainError(f"{m} has odd valuation at {p}")
            k *= p ** (e // 2)
        else:
            r *= p ** e
    return t, k, r


def ramanujan_sum(q: int, a: int) -> int:
    """Ramanujan sum c_q(a) as an exact integer.

    Computed multiplicatively from the prime-power values
    c_{p^m}(a) = p^(m-1) * (p*[v_p(a)>=m] - [v_p(a)>=m-1]).
    """
    if q < 1:
        raise DomainError("q must be positive")
    if q == 1:
        return 1
    total = 1
    for p, m in factor(q).factors:
        va = valuation(a, p) if a != 0 else m + 1  # v_p(0) treated as infinite
        term = p ** (m - 1) * (p * (va >= m) - (va >= m - 1))
        total *= term
        if total == 0:
            return 0
    return total


def ramanujan_sum_direct(q: int, a: int) -> complex:
    """Ramanujan sum by its definition: sum of e(ax/q) over units x mod q."""
    if q < 1:
        raise DomainError("q must be positive")
    xs = np.arange(q)
    units = np.gcd(xs, q) == 1
    return complex(np.exp(2j * np.pi * a * xs[units] / q).sum())


def conic_soluble_local(m: int, place) -> int:
    """1 iff x0^2+x1^2 = m*x2^2 has a point over the completion at 'place'.

    place is math.inf for the real place, else a prime.  Decision rules:
    real place: m > 0; p = 1 mod 4: always; p = 3 mod 4: v_p(m) even;
    p = 2: the (signed) odd part of m is 1 mod 4.
    """
    if m == 0:
        raise DomainError("indicator undefined at 0")
    if place == math.inf:
        return 1 if m > 0 else 0
    p = int(place)
    if p < 2 or not is_prime(p):
        raise DomainError(f"place must be a prime or math.inf, got {place}")
    if p == 2:
        u = m
        while u % 2 == 0:
            u //= 2
        return 1 if u % 4 == 1 else 0
    if p % 4 == 1:
        return 1
    return 1 if valuation(m, p) % 2 == 0 else 0


@dataclass(frozen=True)
class ArithConstants:
    """Truncated Euler product over p = 3 mod 4 of (1 - 1/p^2)^(1/2).

    landau_K = 1/(sqrt(2)*c0) is the Landau-Ramanujan constant: the density
    constant in the count of sums of two squares up to x.
    """

    c0: float
    c0_prime_cutoff: int
    c0_error: float
    landau_K: float


def landau_constants(prime_cutoff: int) -> ArithConstants:
    """Compute c0 with a rigorous tail bound.

    The truncated product exceeds the limit; the log-tail is at most
    sum_{p>cutoff} p^-2 <= 1/(cutoff-1), so
    c0_true in [c0 * exp(-tail), c0].
    """
    if prime_cutoff < 3:
        raise DomainError("cutoff must be at least 3")
    primes = prime_sieve(prime_cutoff)
    p3 = primes[primes % 4 == 3].astype(np.float64)
    c0 = float(math.exp(0.5 * np.log1p(-1.0 / p3**2).sum()))
    tail_log = 1.0 / (2 * (prime_cutoff - 1))
    c0_error = c0 * (1.0 - math.exp(-tail_log))
    return ArithConstants(c0=c0, c0_prime_cutoff=prime_cutoff,
                          c0_error=c0_error, landau_K=1.0 / (math.sqrt(2) * c0))


def mertens_3mod4(D: float) -> float:
    """Product of (1 - 1/p) over primes p < D with p = 3 mod 4."""
    if D < 3:
        raise DomainError("D must be at least 3")
    primes = prime_sieve(int(math.ceil(D)))
    p3 = primes[(primes % 4 == 3) & (primes < D)].astype(np.float64)
    return float(math.exp(np.log1p(-1.0 / p3).sum()))


def mertens_3mod4_main_term(D: float, consts: ArithConstants) -> float:
    """Asymptotic main term sqrt(pi/(2 e^gamma)) * c0 / sqrt(log D)."""
    return math.sqrt(math.pi / (2.0 * math.exp(np.euler_gamma))) * consts.c0 \
        / math.sqrt(math.log(D))


def residue_class_parts(Q: int) -> tuple[int, int]:
    """Split Q into its 1-mod-4 part and 3-mod-4 part (2-part in neither)."""
    if Q < 1:
        raise DomainError("Q must be positive")
    dot = ddot = 1
    for p, e in (factor(Q).factors if Q > 1 else ()):
        if p % 4 == 1:
            dot *= p ** e
        elif p % 4 == 3:
            ddot *= p ** e
    return dot, ddot


def euler_phi(m: int) -> int:
    if m < 1:
        raise DomainError("argument must be positive")
    if m == 1:
        return 1
    out = 1
    for p, e in factor(m).factors:
        out *= (p - 1) * p ** (e - 1)
    return out


def divisor_tau(m: int) -> int:
    if m < 1:
        raise DomainError("argument must be positive")
    if m == 1:
        return 1
    out = 1
    for _, e in factor(m).factors:
        out *= e + 1
    return out


def moebius(m: int) -> int:
    if m < 1:
        raise DomainError("argument must be positive")
    if m == 1:
        return 1
    out = 1
    for _, e in factor(m).factors:
        if e > 1:
            return 0
        out = -out
    return out


def moebius_sieve(limit: int) -> np.ndarray:
    """mu(0..limit) as an int8 array (mu[0] set to 0)."""
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in prime_sieve(limit):
        p = int(p)
        mu[p::p] *= -1
        mu[p * p::p * p] = 0
    return mu
