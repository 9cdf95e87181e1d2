"""Complete exponential sums and the twisted two-squares machinery.

Objects:

* birch_sum: the complete sum of e((a1*f1(x) + a2*f2(x))/q) over x mod q.
  Evaluated through the joint value distribution of (f1, f2) mod q and a
  2-d FFT, which is exact up to float rounding; a CRT path multiplies
  prime-power values for large composite q.

* arc_factor(a1, q): the constant in front of x/sqrt(log x) in the
  asymptotic of sum_{m<=x, m a sum of two squares} e(a1*m/q), divided by
  the universal sqrt(2)*C0.  It is a double sum over pairs (k, t) with
  2^t*k^2 interacting with q through gcds, an indicator restricting the
  residue l mod q, and a local product over primes p = 3 mod 4 dividing q.
  Conventions that matter: gcd(0, q) = q, and the residue congruence is
  taken to a modulus gcd(4, q/gcd(l,q)) which may be 1 (vacuous).

* local_series_odd / local_series_two: the p-adic factors of the singular
  series, as double series over (kappa, m) resp. (t, rho) shells.

* singular_series: the q-sum of birch sums against conjugated arc factors;
  singular_series_factored: the same quantity assembled as a product of
  local factors, which converges far better when the q-sum terms do not
  decay (small n).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .arith import (DomainError, factor, only_1mod4_factors, prime_sieve,
                    valuation)
from .counting import BudgetExceededError, two_squares_sieve
from .forms import Instance

DEFAULT_SUM_BUDGET = 3 * 10**8
_CHUNK = 1 << 21


@dataclass(frozen=True)
class ModularPhase:
    """Rational phase (a1 [, a2]) / q."""

    a1: int
    q: int
    a2: int | None = None

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("q must be positive")
        if not (0 <= self.a1 < self.q) and self.q > 1:
            raise DomainError("a1 must lie in [0, q)")
        if self.a2 is not None and self.q > 1 and not (0 <= self.a2 < self.q):
            raise DomainError("a2 must lie in [0, q)")


@dataclass
class TruncatedValue:
    """A numerical value carrying its truncation metadata.

    error_kind 'rigorous' means error_bound follows a documented
    inequality; 'heuristic' means it extrapolates computed shells.
    """

    value: complex
    truncation_params: dict
    error_bound: float
    error_kind: str
    shells: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Birch sums
# ---------------------------------------------------------------------------

_TABLE_LOCK = threading.Lock()
_TABLE_CACHE: dict[tuple, np.ndarray] = {}


def joint_value_distribution(inst: Instance, q: int,
                             budget: int = DEFAULT_SUM_BUDGET) -> np.ndarray:
    """M[u, v] = #{x mod q : f1(x) = u, f2(x) = v (mod q)}."""
    n = inst.n
    total = q ** n
    if total > budget:
        raise BudgetExceededError(
            f"direct enumeration of q^n = {total} points exceeds budget {budget}")
    M = np.zeros(q * q, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        cols = [(idx // q**i) % q for i in range(n)]
        u = inst.f1.evaluate_batch_mod(cols, q)
        v = inst.f2.evaluate_batch_mod(cols, q)
        M += np.bincount(u * q + v, minlength=q * q)
    return M.reshape(q, q)


def birch_sum_table(inst: Instance, q: int,
                    budget: int = DEFAULT_SUM_BUDGET) -> np.ndarray:
    """All S_{(a1,a2),q} at once as a (q, q) complex array.

    S[a1, a2] = sum_{u,v} M[u,v] e((a1 u + a2 v)/q) = conj(FFT2(M)).
    Cached per (instance, q); the cache is read-only after insertion.
    """
    key = (inst.config_hash(), q)
    with _TABLE_LOCK:
        hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    if q == 1:
        S = np.ones((1, 1), dtype=np.complex128)
    else:
        M = joint_value_distribution(inst, q, budget)
        S = np.conj(np.fft.fft2(M.astype(np.float64)))
    S.setflags(write=False)
    with _TABLE_LOCK:
        _TABLE_CACHE[key] = S
    return S


def birch_sum_single(inst: Instance, a1: int, a2: int, q: int,
                     budget: int = DEFAULT_SUM_BUDGET) -> complex:
    """One Birch sum by literal chunked summation (test oracle path)."""
    n = inst.n
    total = q ** n
    if total > budget:
        raise BudgetExceededError(f"q^n = {total} exceeds budget {budget}")
    acc = 0.0 + 0.0j
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        cols = [(idx // q**i) % q for i in range(n)]
        u = inst.f1.evaluate_batch_mod(cols, q)
        v = inst.f2.evaluate_batch_mod(cols, q)
        acc += np.exp(2j * np.pi * ((a1 * u + a2 * v) % q) / q).sum()
    return complex(acc)


def birch_sum(inst: Instance, phase, q: int | None = None,
              budget: int = DEFAULT_SUM_BUDGET, method: str = "auto") -> complex:
    """S_{(a1,a2),q}: sum of e((a1 f1(x) + a2 f2(x))/q) over x mod q.

    method 'auto' evaluates directly when q^n fits the budget and otherwise
    multiplies prime-power sums through the Chinese remainder theorem; the
    two paths agree exactly.
    """
    if isinstance(phase, ModularPhase):
        a1, a2 = phase.a1, (phase.a2 or 0)
        q = phase.q
    else:
        a1, a2 = phase
    if q is None:
        raise DomainError("modulus q is required")
    if q == 1:
        return 1.0 + 0.0j
    a1 %= q
    a2 %= q
    if method not in ("auto", "direct", "crt"):
        raise DomainError(f"unknown method {method!r}")
    if method == "direct" or (method == "auto" and q ** inst.n <= budget):
        S = birch_sum_table(inst, q, budget)
        return complex(S[a1, a2])
    # CRT: q = q1*q2 coprime; 1/q = A/q1 + B/q2 with A = q2^{-1} mod q1,
    # B = q1^{-1} mod q2, so the sum factorizes with rescaled phases.
    fs = factor(q).factors
    if len(fs) == 1:
        if method == "crt":
            raise DomainError("q is a prime power; no CRT split available")
        raise BudgetExceededError(
            f"prime power modulus {q} needs q^n = {q**inst.n} > budget {budget}")
    out = 1.0 + 0.0j
    for p, e in fs:
        q1 = p ** e
        q2 = q // q1
        A = pow(q2, -1, q1)
        out *= birch_sum(inst, ((a1 * A) % q1, (a2 * A) % q1), q1,
                         budget=budget, method="auto")
    return out


def residue_zero_count(inst: Instance, q: int,
                       budget: int = DEFAULT_SUM_BUDGET) -> int:
    """#{x mod q : f2(x) = 0 mod q} from the joint distribution."""
    if q == 1:
        return 1
    M = joint_value_distribution(inst, q, budget)
    return int(M[:, 0].sum())


def _primitive_colsums(S: np.ndarray, q: int) -> np.ndarray:
    """T[a1] = sum over a2 with gcd(a1, a2, q) = 1 of S[a1, a2]."""
    if q == 1:
        return np.array([1.0 + 0.0j])
    aa = np.arange(q)
    G = np.gcd(np.gcd.outer(aa, aa), q)
    return (S * (G == 1)).sum(axis=1)


# ---------------------------------------------------------------------------
# the arc factor
# ---------------------------------------------------------------------------

def _ks_3mod4(limit: int) -> np.ndarray:
    """Integers k <= limit all of whose prime factors are 3 mod 4."""
    good = np.ones(limit + 1, dtype=bool)
    good[0] = False
    for p in prime_sieve(limit):
        if p % 4 != 3:
            good[int(p)::int(p)] = False
    return np.nonzero(good)[0]


def _padic_weight_3mod4(ell: int, q: int, fq) -> float:
    """prod over p = 3 mod 4 with v_p(q) > v_p(ell) of (1 - 1/p)^(-1)."""
    out = 1.0
    for p, e in fq:
        if p % 4 != 3:
            continue
        v = valuation(ell, p) if ell else e + 1  # v_p(0) infinite
        if v < e:
            out *= p / (p - 1.0)
    return out


def arc_factor_row(q: int, U: float,
                   ) -> tuple[np.ndarray, float]:
    """Arc factors for all a1 in [0, q) at truncation 2^t k^2 <= U.

    Returns (values, tail_bound).  The tail bound is rigorous: every
    dropped (k, t) term is at most P(q)/(2^t k^2) in absolute value, where
    P(q) is the local product over p = 3 mod 4 dividing q, and the dropped
    (k, t) mass is at most 4/sqrt(U) + 2/floor(sqrt(U)).
    """
    if q < 1:
        raise DomainError("q must be positive")
    if U < 4:
        raise DomainError("U must be at least 4")
    fq = factor(q).factors if q > 1 else ()

    # l-side coefficient ingredients, fixed per q
    h_arr = np.array([gcd(l, q) if l else q for l in range(q)], dtype=np.int64)
    lcm4 = np.array([4 * (q // h) // gcd(4, q // h) for h in h_arr.tolist()],
                    dtype=np.int64)
    m4 = np.array([gcd(4, q // h) for h in h_arr.tolist()], dtype=np.int64)
    lred = np.array([(l // h) if l else 0 for l, h in enumerate(h_arr.tolist())],
                    dtype=np.int64)
    weight3 = np.array([_padic_weight_3mod4(l, q, fq) for l in range(q)])

    # (k, t) pairs bucketed by (gcd(w, q), (w/gcd) mod 4)
    ks = _ks_3mod4(math.isqrt(int(U)))
    bucket: dict[tuple[int, int], float] = {}
    t = 0
    while True:
        lim = U / (1 << t)
        if lim < 1:
            break
        sel = ks[ks.astype(np.float64) ** 2 <= lim]
        if len(sel) == 0:
            break
        w = (sel.astype(np.int64) ** 2) << t
        for wi in w.tolist():
            g1 = gcd(wi, q)
            key = (g1, (wi // g1) % 4)
            bucket[key] = bucket.get(key, 0.0) + g1 / wi
        t += 1

    values = np.zeros(q, dtype=np.complex128)
    ls = np.arange(q)
    for (g1, rho), wsum in sorted(bucket.items()):
        ok = (ls % g1 == 0)
        varpi_ok = np.array([only_1mod4_factors(int(h) // g1) if o and h % g1 == 0
                             else 0
                             for o, h in zip(ok.tolist(), h_arr.tolist())],
                            dtype=np.float64)
        cong = (rho - lred) % m4 == 0
        coef = np.where(ok & cong, varpi_ok * weight3 / (h_arr * lcm4), 0.0)
        # sum_l coef[l] e(a1 l / q) for every a1 at once
        values += wsum * np.conj(np.fft.fft(coef))
    s = math.isqrt(int(U))
    pmax = 1.0
    for p, _e in fq:
        if p % 4 == 3:
            pmax *= p / (p - 1.0)
    tail = pmax * (4.0 * s / U + 2.0 / max(s - 1, 1))
    return values, tail


def arc_factor(a1: int, q: int, U: float) -> TruncatedValue:
    """Single arc factor with its rigorous truncation tail."""
    values, tail = arc_factor_row(q, U)
    return TruncatedValue(
        value=complex(values[a1 % q]),
        truncation_params={"kt_cutoff_U": U, "q": q, "a1": a1 % q},
        error_bound=tail,
        error_kind="rigorous",
    )


def arc_factor_series_bound(q: int, U: float) -> float:
    """Triangle-inequality bound for |arc_factor(a1, q)|, any a1.

    Every term of the defining series is bounded by its a1 = 0 value, so
    the a1 = 0 evaluation plus the truncation tail dominates the series.
    """
    values, tail = arc_factor_row(q, U)
    return float(values[0].real) + 2.0 * tail


def twisted_two_squares_sum(x: int, a1: int, q: int, beta: float = 0.0) -> complex:
    """sum_{m <= x, m a sum of two squares} e((a1/q + beta) m).

    Uses the valuation-parity sieve; no per-m factorization.
    """
    if x < 1:
        raise DomainError("x must be positive")
    if q < 1:
        raise DomainError("q must be positive")
    ok = two_squares_sieve(x)
    ms = np.nonzero(ok[:x + 1])[0].astype(np.float64)
    theta = (a1 % q) / q + beta
    return complex(np.exp(2j * np.pi * ((theta * ms) % 1.0)).sum())


# ---------------------------------------------------------------------------
# local series
# ---------------------------------------------------------------------------

def gcd_phase_sum(a: int, q: int, k: int) -> complex:
    """sum over l in [0, q) with gcd(l, q) = gcd(k^2, q) of
    e(-a l / q) * prod over primes p with v_p(q) > v_p(l) of (1-1/p)^(-1).

    gcd(0, q) = q, and the product runs over ALL primes with the stated
    valuation gap (not only p = 3 mod 4).
    """
    if q < 1:
        raise DomainError("q must be positive")
    gk = gcd(k * k, q)
    fq = factor(q).factors if q > 1 else ()
    out = 0.0 + 0.0j
    for l in range(q):
        h = gcd(l, q) if l else q
        if h != gk:
            continue
        w = 1.0
        for p, e in fq:
            v = valuation(l, p) if l else e + 1
            if v < e:
                w *= p / (p - 1.0)
        out += w * np.exp(-2j * np.pi * a * l / q)
    return complex(out)


def max_shell_modulus(p: int, n: int, budget: int) -> int:
    """Largest m with p^(m*n) within the direct-sum budget."""
    m = 0
    while p ** ((m + 1) * n) <= budget:
        m += 1
    return m


def local_series_odd(inst: Instance, p: int, kappa_max: int = 8,
                     m_max: int | None = None,
                     budget: int = DEFAULT_SUM_BUDGET) -> TruncatedValue:
    """Local factor of the singular series at a prime p = 3 mod 4.

    Double series over shells (kappa, m):
      gcd(p^(2 kappa), p^m) / p^(2 kappa + m(n+1))
        * sum over primitive (a1, a2) mod p^m of S_{a, p^m} W_{a1, p^m}(p^kappa),
    truncated at kappa <= kappa_max, m <= m_max.  Shells are recorded per m;
    the error estimate extrapolates the observed shell decay (heuristic).
    """
    if p % 4 != 3:
        raise DomainError("p must be 3 mod 4")
    n = inst.n
    if m_max is None:
        m_max = max(1, max_shell_modulus(p, n, budget))
    shells = []
    total = 0.0 + 0.0j
    for m in range(m_max + 1):
        q = p ** m
        if m == 0:
            shell = sum(1.0 / p ** (2 * kappa) for kappa in range(kappa_max + 1))
            shells.append(complex(shell))
            total += shell
            continue
        S = birch_sum_table(inst, q, budget)
        T = _primitive_colsums(S, q)
        shell = 0.0 + 0.0j
        # the inner phase sum depends on kappa only through gcd(p^2kappa, p^m)
        w_cache: dict[int, np.ndarray] = {}
        for kappa in range(kappa_max + 1):
            gk = p ** min(2 * kappa, m)
            if gk not in w_cache:
                w_cache[gk] = np.array(
                    [gcd_phase_sum(a1, q, p ** kappa) for a1 in range(q)])
            W = w_cache[gk]
            coef = gk / p ** (2 * kappa + m * (n + 1))
            shell += coef * complex((W * T).sum())
        shells.append(complex(shell))
        total += shell
    err = abs(shells[-1]) if len(shells) > 1 else 0.0
    return TruncatedValue(
        value=complex(total),
        truncation_params={"p": p, "kappa_max": kappa_max, "m_max": m_max},
        error_bound=err, error_kind="heuristic", shells=shells)


def local_series_two(inst: Instance, t_max: int | None = None,
                     rho_max: int = 6,
                     budget: int = DEFAULT_SUM_BUDGET) -> TruncatedValue:
    """Dyadic local factor of the singular series.

    (1/4) * sum over shells (t, rho) of 2^(-t-rho*n) times the primitive
    phase sum with the carry indicator v_2(b1) >= rho - t - 2 and the
    extra phase e(-b1 2^(t-rho)).  Shells recorded per rho.
    """
    n = inst.n
    if t_max is None:
        t_max = rho_max + 34
    shells = []
    total = 0.0 + 0.0j
    for rho in range(rho_max + 1):
        q = 2 ** rho
        S = birch_sum_table(inst, q, budget)
        T = _primitive_colsums(S, q)
        b1 = np.arange(q)
        v2 = np.array([valuation(int(b), 2) if b else rho + t_max + 10
                       for b in b1], dtype=np.int64)
        shell = 0.0 + 0.0j
        for t in range(t_max + 1):
            mask = v2 >= rho - t - 2
            if not mask.any():
                continue
            phase = np.exp(-2j * np.pi * ((b1 * (2 ** t)) % q) / q)
            shell += 2.0 ** (-t - rho * n) * complex((phase * T)[mask].sum())
        shell /= 4.0
        shells.append(complex(shell))
        total += shell
    err = abs(shells[-1]) if len(shells) > 1 else 0.0
    return TruncatedValue(
        value=complex(total),
        truncation_params={"t_max": t_max, "rho_max": rho_max},
        error_bound=err, error_kind="heuristic", shells=shells)


# ---------------------------------------------------------------------------
# the singular series, both evaluation strategies
# ---------------------------------------------------------------------------

def singular_series(inst: Instance, Q: int, U: float = 2.0**24,
                    budget: int = DEFAULT_SUM_BUDGET) -> TruncatedValue:
    """Truncated q-sum: sum_{q<=Q} q^-n sum_{primitive a} S_{a,q} *
    conj(arc_factor(a1, q)).

    The per-q terms are recorded as shells.  When the instance carries a
    sigma bound with positive decay exponent lambda0, the tail bound
    C * Q^(-lambda0) is reported with C calibrated from the computed terms;
    otherwise the error is the heuristic mass of the last quarter of terms.
    At small n the terms need not decay at all; the factored evaluation
    (singular_series_factored) is then the meaningful one, and this sum is
    reported with its honest non-decaying error estimate.
    """
    if Q < 1:
        raise DomainError("Q must be positive")
    n = inst.n
    terms = []
    total = 0.0 + 0.0j
    for q in range(1, Q + 1):
        S = birch_sum_table(inst, q, budget)
        T = _primitive_colsums(S, q)
        F, _ = arc_factor_row(q, U)
        term = complex((T * np.conj(F)).sum() / q ** n)
        terms.append(term)
        total += term
    lam = inst.lambda0()
    if lam is not None and lam > 0:
        C = max(abs(t) * (i + 1) ** (1 + lam) for i, t in enumerate(terms))
        err = C * Q ** (-lam) / lam
        kind = "rigorous"
    else:
        tail_window = [abs(t) for t in terms[3 * Q // 4:]]
        err = float(sum(tail_window))
        kind = "heuristic"
    return TruncatedValue(
        value=complex(total),
        truncation_params={"Q": Q, "kt_cutoff_U": U},
        error_bound=err, error_kind=kind, shells=terms)


def singular_series_factored(inst: Instance, p_max: int = 13,
                             rho_max: int = 6,
                             level_schedule: dict | None = None,
                             budget: int = DEFAULT_SUM_BUDGET) -> TruncatedValue:
    """The singular series assembled as a product of local factors:

      (dyadic factor) * prod_{p<=p_max, p=1 mod 4} tau_f2(p)
                      * prod_{p<=p_max, p=3 mod 4} (odd local factor at p).

    The two evaluations agree as full sums; this one converges shell-wise
    at every prime and is the stable route at small n.  Relative errors of
    the factors add (first order).
    """
    from . import padic

    levels = dict(level_schedule or {})
    value = 1.0 + 0.0j
    rel_err = 0.0
    parts = {}
    e2 = local_series_two(inst, rho_max=rho_max, budget=budget)
    value *= e2.value
    rel_err += e2.error_bound / max(abs(e2.value), 1e-30)
    parts["2"] = e2
    for p in [int(r) for r in prime_sieve(p_max)[1:]]:
        if p % 4 == 1:
            N = levels.get(p, 3 if p <= 7 else 2)
            dens = padic.hypersurface_density(inst, p, N, budget=budget)
            value *= dens.density
            drift = abs(dens.density - dens.prev_density)
            rel_err += drift / max(dens.density, 1e-30)
            parts[str(p)] = dens
        else:
            m_cap = max_shell_modulus(p, inst.n, budget)
            ser = local_series_odd(inst, p, m_max=min(m_cap, levels.get(p, m_cap)),
                                   budget=budget)
            value *= ser.value
            rel_err += ser.error_bound / max(abs(ser.value), 1e-30)
            parts[str(p)] = ser
    return TruncatedValue(
        value=complex(value),
        truncation_params={"p_max": p_max, "rho_max": rho_max},
        error_bound=float(abs(value) * rel_err),
        error_kind="heuristic",
        shells=[parts])
