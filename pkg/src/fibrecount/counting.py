"""Brute-force ground truth: box counts, projective counts, sieve counts.

Counting conventions (fixed across the library):

* count_soluble_fibre_points(inst, P) counts NONZERO integer vectors x in
  [-P,P]^n with f2(x) = 0, f1(x) != 0 and a soluble fibre.  With
  include_zero_fibres it additionally counts nonzero x with
  f1(x) = f2(x) = 0 (their fibres contain (0:0:1)).  The origin is never
  counted: it belongs to no projective point, and including it would break
  the exact Moebius identity below.

* projective_count(inst, t) counts projective base points of height <= t
  with a soluble fibre, i.e. half the number of primitive vectors.

* The two are tied by exact Moebius inversion:
  2 * projective_count(t) = sum_{l<=t} mu(l) * count(floor(t/l), zero=True),
  an integer identity with no error term; mobius_residual returns the
  difference and must be identically zero.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .arith import (DomainError, conic_soluble_global, moebius_sieve,
                    prime_sieve)
from .forms import Form, Instance

DEFAULT_BUDGET = 3 * 10**8


class BudgetExceededError(RuntimeError):
    """Enumeration volume exceeds the allowed budget."""


# ---------------------------------------------------------------------------
# sums-of-two-squares sieve
# ---------------------------------------------------------------------------

_SIEVE_LOCK = threading.Lock()
_SIEVE_CACHE: dict[int, np.ndarray] = {}


def two_squares_sieve(limit: int) -> np.ndarray:
    """Boolean array ok[0..limit]: ok[m] iff m>0 is a sum of two squares.

    Linear sieve over valuation parities: for every prime p = 3 mod 4 and
    every odd exponent e, the integers with v_p(m) exactly e are removed.
    No per-m factorization happens.  Cached per limit; read-only.
    """
    with _SIEVE_LOCK:
        hit = _SIEVE_CACHE.get(limit)
    if hit is not None:
        return hit
    ok = np.ones(limit + 1, dtype=bool)
    ok[0] = False
    primes = prime_sieve(limit)
    for p in primes[primes % 4 == 3]:
        p = int(p)
        pe = p
        while pe <= limit:
            view = ok[pe::pe]
            keep = view[p - 1::p].copy()  # v_p >= e+1: survive this exponent
            view[:] = False
            view[p - 1::p] = keep
            if pe > limit // (p * p):
                break
            pe *= p * p  # next odd exponent
    ok.setflags(write=False)
    with _SIEVE_LOCK:
        _SIEVE_CACHE[limit] = ok
    return ok


def two_squares_count(x: int) -> int:
    """#{1 <= m <= x : m is a sum of two squares}."""
    if x < 1:
        raise DomainError("x must be positive")
    if x > 2 * 10**8:
        raise BudgetExceededError(f"sieve of size {x} exceeds the memory budget")
    return int(two_squares_sieve(x)[1:x + 1].sum())


def two_squares_count_pairs(x: int) -> int:
    """Independent oracle: mark a^2+b^2 <= x by direct pair enumeration."""
    hit = np.zeros(x + 1, dtype=bool)
    for a in range(0, math.isqrt(x) + 1):
        b = np.arange(0, math.isqrt(x - a * a) + 1)
        hit[a * a + b * b] = True
    return int(hit[1:].sum())


def only_1mod4_sieve(limit: int) -> np.ndarray:
    """ok[r] iff every prime factor of r is 1 mod 4 (ok[1] = True)."""
    ok = np.ones(limit + 1, dtype=bool)
    ok[0] = False
    primes = prime_sieve(limit)
    for p in primes[primes % 4 != 1]:
        ok[int(p)::int(p)] = False
    return ok


def progression_count(z: int, a: int, Q: int) -> int:
    """#{r <= z : r = a mod Q, every prime factor of r is 1 mod 4}.

    Hypotheses of the underlying sieve asymptotic are enforced: Q must be a
    multiple of 4, gcd(a,Q) = 1, a = 1 mod 4 and z >= Q.
    """
    if Q % 4 != 0:
        raise DomainError("Q must be a multiple of 4")
    if math.gcd(a, Q) != 1:
        raise DomainError("a must be coprime to Q")
    if a % 4 != 1:
        raise DomainError("a must be 1 mod 4")
    if z < Q:
        raise DomainError("z must be at least Q")
    ok = only_1mod4_sieve(z)
    return int(ok[a % Q::Q][: (z - a % Q) // Q + 1].sum())


# ---------------------------------------------------------------------------
# box enumeration
# ---------------------------------------------------------------------------

@dataclass
class CountRecord:
    """One row of counting output."""

    label: str
    t: int
    raw_count: int
    normalized: float
    include_zero: bool
    wall_time_s: float

    @staticmethod
    def csv_header() -> str:
        return "label,t,raw_count,normalized,include_zero,wall_time_s"

    def csv_row(self) -> str:
        return (f"{self.label},{self.t},{self.raw_count},"
                f"{self.normalized:.12g},{str(self.include_zero).lower()},"
                f"{self.wall_time_s:.3f}")


def _theta_of_values(values: np.ndarray) -> np.ndarray:
    """Vectorized soluble-fibre indicator for nonzero integer values.

    Uses the parity sieve when the value range is modest, otherwise a
    factorization cache keyed by |value| (f1-values repeat heavily on
    symmetric boxes).
    """
    out = np.zeros(len(values), dtype=bool)
    pos = values > 0
    if not pos.any():
        return out
    vmax = int(values[pos].max())
    if vmax <= 2 * 10**8:
        ok = two_squares_sieve(vmax)
        out[pos] = ok[values[pos]]
        return out
    cache: dict[int, int] = {}
    vp = values[pos]
    res = np.zeros(len(vp), dtype=bool)
    for i, v in enumerate(vp.tolist()):
        hit = cache.get(v)
        if hit is None:
            hit = conic_soluble_global(v)
            cache[v] = hit
        res[i] = bool(hit)
    out[pos] = res
    return out


def _separable_split(inst: Instance):
    """Partition of variables into two blocks with no monomial of f1 or f2
    straddling the blocks, or None if no such partition exists."""
    n = inst.n
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for f in (inst.f1, inst.f2):
        for _, exps in f.monomials:
            idx = [i for i, e in enumerate(exps) if e]
            for a, b in zip(idx, idx[1:]):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
    roots = {}
    for i in range(n):
        roots.setdefault(find(i), []).append(i)
    comps = list(roots.values())
    if len(comps) < 2:
        return None
    # fold all components into two blocks (first vs rest)
    block_a = comps[0]
    block_b = [i for c in comps[1:] for i in c]
    return block_a, block_b


def _restrict(f: Form, block, n_sub: int) -> Form | None:
    """Form in the block variables, or None if no monomial lives there."""
    monos = []
    pos = {v: i for i, v in enumerate(block)}
    for coeff, exps in f.monomials:
        if all(e == 0 or i in pos for i, e in enumerate(exps)):
            sub = [0] * n_sub
            for i, e in enumerate(exps):
                if e:
                    sub[pos[i]] = e
            monos.append((coeff, tuple(sub)))
    if not monos:
        return None
    return Form(n_vars=n_sub, degree=f.degree, monomials=tuple(monos))


def _block_value_table(f1: Form, f2: Form, block, P: int, budget: int):
    """Joint (f2-value -> f1-value -> count) tables over the block's box.

    Returns a dict mapping v2 to a dict mapping v1 to multiplicity, where
    (v1, v2) are the values of the block parts of (f1, f2).
    """
    nb = len(block)
    if (2 * P + 1) ** nb > budget:
        raise BudgetExceededError(
            f"sub-box volume {(2*P+1)**nb} exceeds budget {budget}")
    g1 = _restrict(f1, block, nb)
    g2 = _restrict(f2, block, nb)
    axes = [np.arange(-P, P + 1, dtype=np.int64) for _ in range(nb)]
    grids = np.meshgrid(*axes, indexing="ij")
    cols = [g.ravel() for g in grids]
    npts = len(cols[0])
    v1 = g1.evaluate_batch(cols, P) if g1 else np.zeros(npts, np.int64)
    v2 = g2.evaluate_batch(cols, P) if g2 else np.zeros(npts, np.int64)
    # pack the value pair into one int64 key: unique on 1-d keys is far
    # faster than a lexicographic row sort
    b1 = (g1.coeff_norm() if g1 else 0) * max(P, 1) ** f1.degree + 1
    b2 = (g2.coeff_norm() if g2 else 0) * max(P, 1) ** f2.degree + 1
    if (2 * b2 + 1) * (2 * b1 + 1) >= 2**62:
        raise BudgetExceededError("value range too wide for packed keys")
    keys, counts = np.unique((v2 + b2) * (2 * b1 + 1) + (v1 + b1),
                             return_counts=True)
    table: dict[int, dict[int, int]] = {}
    for key, c in zip(keys.tolist(), counts.tolist()):
        val2, val1 = divmod(key, 2 * b1 + 1)
        table.setdefault(val2 - b2, {})[val1 - b1] = c
    return table


def _count_split(inst: Instance, P: int, include_zero_fibres: bool,
                 budget: int) -> int:
    split = _separable_split(inst)
    if split is None:
        raise BudgetExceededError("instance is not separable")
    ta = _block_value_table(inst.f1, inst.f2, split[0], P, budget)
    tb = _block_value_table(inst.f1, inst.f2, split[1], P, budget)
    total = 0
    pos_vals: list[int] = []
    pos_wts: list[int] = []
    # origin correction: the all-zero vector contributes one spurious
    # f1=f2=0 combination, removed at the end
    for v2, inner_a in ta.items():
        inner_b = tb.get(-v2)
        if inner_b is None:
            continue
        for u1, ca in inner_a.items():
            for u2, cb in inner_b.items():
                f1v = u1 + u2
                if f1v == 0:
                    if include_zero_fibres:
                        total += ca * cb
                elif f1v > 0:
                    pos_vals.append(f1v)
                    pos_wts.append(ca * cb)
    if pos_vals:
        ok = _theta_of_values(np.asarray(pos_vals, dtype=np.int64))
        total += int(np.asarray(pos_wts, dtype=np.int64)[ok].sum())
    if include_zero_fibres:
        total -= 1  # the origin
    return total


def _count_slab(inst: Instance, P: int, include_zero_fibres: bool,
                budget: int, threads: int) -> int:
    n = inst.n
    if (2 * P + 1) ** n > budget:
        est = (2 * P + 1) ** n
        raise BudgetExceededError(
            f"box volume {est} exceeds budget {budget}; "
            f"estimated cost ~{est} evaluations")
    axes = [np.arange(-P, P + 1, dtype=np.int64) for _ in range(n - 1)]
    inner = np.meshgrid(*axes, indexing="ij") if n > 1 else []
    inner_cols = [g.ravel() for g in inner]

    def slab_count(x0: int) -> int:
        cols = [np.full(len(inner_cols[0]) if inner_cols else 1, x0,
                        dtype=np.int64)] + inner_cols
        v2 = inst.f2.evaluate_batch(cols, P)
        zero2 = v2 == 0
        if not zero2.any():
            return 0
        pts = [c[zero2] for c in cols]
        v1 = inst.f1.evaluate_batch(pts, P)
        if x0 == 0:
            # drop the origin
            origin = np.ones(len(v1), dtype=bool)
            for c in pts:
                origin &= c == 0
            keep = ~origin
            v1 = v1[keep]
        cnt = int(_theta_of_values(v1).sum())
        if include_zero_fibres:
            cnt += int((v1 == 0).sum())
        return cnt

    xs = range(-P, P + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(slab_count, xs))
    return sum(slab_count(x0) for x0 in xs)


def count_soluble_fibre_points(inst: Instance, P: int,
                               include_zero_fibres: bool = False,
                               budget: int = DEFAULT_BUDGET,
                               threads: int = 1,
                               method: str = "auto") -> int:
    """#{x in [-P,P]^n, x != 0 : f2(x)=0 and the fibre is soluble}.

    Without include_zero_fibres only x with f1(x) != 0 and soluble conic
    count; with it, x with f1(x) = 0 also count.  The origin never counts.

    method: 'auto' tries the separable fast path and falls back to slab
    enumeration; 'slab' forces the direct scan; 'split' requires
    separability.
    """
    if P < 0:
        raise DomainError("P must be non-negative")
    if P == 0:
        return 0
    if method not in ("auto", "slab", "split"):
        raise DomainError(f"unknown method {method!r}")
    if method in ("auto", "split"):
        try:
            return _count_split(inst, P, include_zero_fibres, budget)
        except BudgetExceededError:
            if method == "split":
                raise
    return _count_slab(inst, P, include_zero_fibres, budget, threads)


def _primitive_direct(inst: Instance, t: int, budget: int, threads: int) -> int:
    """Count primitive vectors in [-t,t]^n with f2=0 and soluble fibre
    (f1=0 allowed), by direct slab scan with a gcd test."""
    n = inst.n
    if (2 * t + 1) ** n > budget:
        raise BudgetExceededError(
            f"box volume {(2*t+1)**n} exceeds budget {budget}")
    axes = [np.arange(-t, t + 1, dtype=np.int64) for _ in range(n - 1)]
    inner = np.meshgrid(*axes, indexing="ij") if n > 1 else []
    inner_cols = [g.ravel() for g in inner]

    def slab_count(x0: int) -> int:
        cols = [np.full(len(inner_cols[0]) if inner_cols else 1, x0,
                        dtype=np.int64)] + inner_cols
        v2 = inst.f2.evaluate_batch(cols, t)
        zero2 = v2 == 0
        if not zero2.any():
            return 0
        pts = [c[zero2] for c in cols]
        g = np.zeros(len(pts[0]), dtype=np.int64)
        for c in pts:
            g = np.gcd(g, np.abs(c))
        prim = g == 1
        if not prim.any():
            return 0
        pts = [c[prim] for c in pts]
        v1 = inst.f1.evaluate_batch(pts, t)
        return int((_theta_of_values(v1) | (v1 == 0)).sum())

    xs = range(-t, t + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(slab_count, xs))
    return sum(slab_count(x0) for x0 in xs)


def projective_count(inst: Instance, t: int, budget: int = DEFAULT_BUDGET,
                     threads: int = 1, method: str = "auto") -> CountRecord:
    """Projective base points of height <= t with a soluble fibre.

    Counts +-pairs of primitive vectors y in [-t,t]^n with f2(y) = 0 and
    (f1(y) = 0 or a soluble conic).  method 'direct' scans with a gcd test;
    'moebius' sums mu(l) * box counts; 'auto' picks direct when the box
    fits the budget.
    """
    if t < 1:
        raise DomainError("t must be positive")
    start = time.monotonic()
    if method == "auto":
        method = "direct" if (2 * t + 1) ** inst.n <= min(budget, 10**8) else "moebius"
    if method == "direct":
        vectors = _primitive_direct(inst, t, budget, threads)
        if vectors % 2 != 0:
            raise AssertionError("primitive vector count must be even")
        raw = vectors // 2
    elif method == "moebius":
        mu = moebius_sieve(t)
        total = 0
        box_cache: dict[int, int] = {}
        for l in range(1, t + 1):
            m = int(mu[l])
            if m == 0:
                continue
            P = t // l
            if P not in box_cache:
                box_cache[P] = count_soluble_fibre_points(
                    inst, P, include_zero_fibres=True, budget=budget,
                    threads=threads)
            total += m * box_cache[P]
        if total % 2 != 0:
            raise AssertionError("Moebius-summed vector count must be even")
        raw = total // 2
    else:
        raise DomainError(f"unknown method {method!r}")
    elapsed = time.monotonic() - start
    normalized = (raw * math.sqrt(math.log(t)) / t ** (inst.n - inst.d)
                  if t >= 2 else float("nan"))
    return CountRecord(label=inst.label, t=t, raw_count=raw,
                       normalized=normalized, include_zero=True,
                       wall_time_s=elapsed)


def mobius_residual(inst: Instance, t: int, budget: int = DEFAULT_BUDGET,
                    threads: int = 1) -> int:
    """Exact integer residual of the Moebius identity; always 0.

    2 * projective_count(t) - sum_{l<=t} mu(l) * count(floor(t/l), zero=True)
    with projective_count taken by direct primitive enumeration, so the two
    sides are computed by genuinely different routes.
    """
    direct = projective_count(inst, t, budget=budget, threads=threads,
                              method="direct").raw_count
    mu = moebius_sieve(t)
    total = 0
    for l in range(1, t + 1):
        m = int(mu[l])
        if m == 0:
            continue
        total += m * count_soluble_fibre_points(
            inst, t // l, include_zero_fibres=True, budget=budget,
            threads=threads)
    return 2 * direct - total
