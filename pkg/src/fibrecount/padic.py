"""Local densities by residue counting with lift trees.

tau_f2(p) is the density of solutions of f2 = 0 mod p^N, normalized by
p^(N(n-1)).  soluble_density additionally requires the fibre conic
x0^2 + x1^2 = f1(t) x2^2 to have a point over the p-adics.

A residue class t mod p^N only pins f1(t) mod p^N, so classes whose f1
residue has saturated valuation cannot be classified at level N.  Those
classes are refined by lifting t (not the f2 condition) a few more levels,
splitting each class into p^n children of equal mass; classes still
undecided at the ceiling are bracketed: counted as soluble by default
(genuine f1 = 0 fibres are soluble through (0:0:1)), with the insoluble
convention and the undecided mass reported so the bracket is visible.
Above the cone point the refinement can branch without deciding anything,
so it also stops early, keeping the bracket, when a further level would
exceed the budget.

Solution sets are enumerated level by level, storing only solution
residues, never the full p^(N n) box; the final level is scanned in chunks
and never materialized.
"""

from __future__ import annotations

import copy
import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import DomainError, is_prime, prime_sieve
from .counting import BudgetExceededError
from .expsums import TruncatedValue
from .forms import Instance

DEFAULT_BUDGET = 3 * 10**8
_CHUNK_ROWS = 1 << 21
STABLE_REL_TOL = 0.01

_DENSITY_LOCK = threading.Lock()
_DENSITY_CACHE: dict[tuple, "LocalDensity"] = {}


@dataclass
class LocalDensity:
    """Residue-count density at one prime and level."""

    p: int
    level: int
    raw_count: int
    density: float
    stabilized: bool
    kind: str
    undecided_fraction: float = 0.0
    density_low: float = 0.0
    density_high: float = 0.0
    prev_density: float = 0.0
    mass_scale: int = 1

    @staticmethod
    def csv_header() -> str:
        return "p,kind,level,raw_count,density,stabilized,undecided_fraction"

    def csv_row(self) -> str:
        return (f"{self.p},{self.kind},{self.level},{self.raw_count},"
                f"{self.density:.12g},{str(self.stabilized).lower()},"
                f"{self.undecided_fraction:.6g}")


@dataclass
class LocalFactor:
    """Weighted local density against its convergence factor."""

    p: int
    tau_p: float
    lambda_p: float
    ratio: float


def _index_coords(idx: np.ndarray, p: int, n: int) -> list:
    return [(idx // p**i) % p for i in range(n)]


def _solution_offsets(p: int, n: int) -> np.ndarray:
    idx = np.arange(p ** n, dtype=np.int64)
    return np.stack(_index_coords(idx, p, n), axis=1)


def _level1_solutions(inst: Instance, p: int, budget: int) -> np.ndarray:
    n = inst.n
    total = p ** n
    if total > budget:
        raise BudgetExceededError(f"level-1 volume p^n = {total} exceeds budget")
    parts = []
    for start in range(0, total, _CHUNK_ROWS):
        idx = np.arange(start, min(start + _CHUNK_ROWS, total), dtype=np.int64)
        cols = _index_coords(idx, p, n)
        good = inst.f2.evaluate_batch_mod(cols, p) == 0
        parts.append(np.stack([c[good] for c in cols], axis=1))
    return np.concatenate(parts)


def _lift_once(inst: Instance, p: int, level: int, sols: np.ndarray,
               budget: int) -> np.ndarray:
    """Solutions mod p^level from solutions mod p^(level-1)."""
    n = inst.n
    offs = _solution_offsets(p, n)
    n_cand = len(sols) * len(offs)
    if n_cand > budget:
        raise BudgetExceededError(
            f"level {level} at p={p}: {n_cand} lift candidates exceed "
            f"budget {budget}")
    pk = p ** level
    step = p ** (level - 1)
    rows_per_block = max(1, _CHUNK_ROWS // len(offs))
    parts = []
    for i in range(0, len(sols), rows_per_block):
        block = sols[i:i + rows_per_block]
        cand = (block[:, None, :] + step * offs[None, :, :]).reshape(-1, n)
        cols = [cand[:, j] for j in range(n)]
        good = inst.f2.evaluate_batch_mod(cols, pk) == 0
        parts.append(cand[good])
    return np.concatenate(parts)


def solution_counts(inst: Instance, p: int, N: int,
                    budget: int = DEFAULT_BUDGET):
    """Counts of solutions of f2 = 0 mod p^k for k = 1..N, and the
    solution array at level N-1 (level N is scanned, not materialized)."""
    n = inst.n
    sols = _level1_solutions(inst, p, budget)
    counts = [len(sols)]
    for k in range(2, N):
        sols = _lift_once(inst, p, k, sols, budget)
        counts.append(len(sols))
    if N >= 2:
        offs = _solution_offsets(p, n)
        n_cand = len(sols) * len(offs)
        if n_cand > budget:
            raise BudgetExceededError(
                f"level {N} at p={p}: {n_cand} lift candidates exceed "
                f"budget {budget}")
        pk = p ** N
        step = p ** (N - 1)
        rows_per_block = max(1, _CHUNK_ROWS // len(offs))
        total = 0
        for i in range(0, len(sols), rows_per_block):
            block = sols[i:i + rows_per_block]
            cand = (block[:, None, :] + step * offs[None, :, :]).reshape(-1, n)
            cols = [cand[:, j] for j in range(n)]
            total += int((inst.f2.evaluate_batch_mod(cols, pk) == 0).sum())
        counts.append(total)
    return counts, sols


def hypersurface_density(inst: Instance, p: int, N: int,
                         budget: int = DEFAULT_BUDGET) -> LocalDensity:
    """Exact density of f2 = 0 mod p^N among residues, kind 'tau_f2'."""
    if N < 1:
        raise DomainError("level must be positive")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    key = (inst.config_hash(), "tau", p, N)
    with _DENSITY_LOCK:
        hit = _DENSITY_CACHE.get(key)
    if hit is not None:
        return copy.copy(hit)
    counts, _ = solution_counts(inst, p, N, budget)
    dens = Fraction(counts[-1], p ** (N * (inst.n - 1)))
    prev = (Fraction(counts[-2], p ** ((N - 1) * (inst.n - 1)))
            if N >= 2 else Fraction(0))
    stab = N >= 2 and abs(dens - prev) <= STABLE_REL_TOL * dens
    out = LocalDensity(p=p, level=N, raw_count=counts[-1],
                       density=float(dens), stabilized=bool(stab),
                       kind="tau_f2", density_low=float(dens),
                       density_high=float(dens), prev_density=float(prev))
    with _DENSITY_LOCK:
        _DENSITY_CACHE[key] = copy.copy(out)
    return out


def _classify_f1(values: np.ndarray, p: int, level: int):
    """Split residues f1 mod p^level into (soluble, insoluble, undecided).

    p = 3 mod 4: decided iff v_p < level, soluble iff v_p even.
    p = 2: decided iff v_2 <= level-2, soluble iff odd part is 1 mod 4.
    """
    m = len(values)
    v = np.zeros(m, dtype=np.int64)
    rem = values.copy()
    nonzero = rem != 0
    active = nonzero.copy()
    while active.any():
        div = active & (rem % p == 0)
        rem[div] //= p
        v[div] += 1
        active = div
    if p == 2:
        decided = nonzero & (v <= level - 2)
        sol = decided & (rem % 4 == 1)
        ins = decided & (rem % 4 == 3)
    else:
        decided = nonzero
        sol = decided & (v % 2 == 0)
        ins = decided & (v % 2 == 1)
    return sol, ins, ~decided


class _MassTally:
    """Integer soluble/insoluble/undecided masses in units p^(-n*lift_extra)."""

    def __init__(self, p: int, n: int, lift_extra: int):
        self.p, self.n, self.lift_extra = p, n, lift_extra
        self.unit = p ** (n * lift_extra)
        self.soluble = 0
        self.insoluble = 0
        self.total = 0

    def weight(self, depth: int) -> int:
        return self.p ** (self.n * (self.lift_extra - depth))

    def add(self, sol: int, ins: int, depth: int):
        w = self.weight(depth)
        self.soluble += sol * w
        self.insoluble += ins * w


def _refine_undecided(inst: Instance, p: int, base_level: int,
                      undecided: np.ndarray, tally: _MassTally,
                      budget: int) -> int:
    """Lift undecided classes up to the ceiling; returns leftover mass.

    Stops early (keeping the bracket) if a level would exceed the budget:
    refinement is precision, not correctness.
    """
    n = inst.n
    offs = _solution_offsets(p, n)
    cur = undecided
    depth = 0
    while depth < tally.lift_extra and len(cur):
        if len(cur) * len(offs) > budget:
            break
        depth += 1
        level = base_level + depth
        pk = p ** level
        rows_per_block = max(1, _CHUNK_ROWS // len(offs))
        parts = []
        for i in range(0, len(cur), rows_per_block):
            block = cur[i:i + rows_per_block]
            cand = (block[:, None, :] + p ** (level - 1) * offs[None, :, :]
                    ).reshape(-1, n)
            cols = [cand[:, j] for j in range(n)]
            f1c = inst.f1.evaluate_batch_mod(cols, pk)
            sol, ins, und = _classify_f1(f1c, p, level)
            tally.add(int(sol.sum()), int(ins.sum()), depth)
            parts.append(cand[und])
        cur = np.concatenate(parts) if parts else cur[:0]
    return len(cur) * tally.weight(depth)


def _classify_level(inst: Instance, p: int, N: int, sols_prev: np.ndarray,
                    lift_extra: int, budget: int):
    """Scan level-N solutions in chunks; returns (count, tally, und_mass).

    sols_prev holds the level-(N-1) solutions (level-1 when N = 1, in which
    case they are classified directly).
    """
    n = inst.n
    tally = _MassTally(p, n, lift_extra)
    und_parts = []
    count = 0

    def classify_chunk(pts: np.ndarray, pk: int):
        nonlocal count
        count += len(pts)
        cols = [pts[:, j] for j in range(n)]
        f1v = inst.f1.evaluate_batch_mod(cols, pk)
        sol, ins, und = _classify_f1(f1v, p, N)
        tally.add(int(sol.sum()), int(ins.sum()), 0)
        if und.any():
            und_parts.append(pts[und])

    if N == 1:
        classify_chunk(sols_prev, p)
    else:
        offs = _solution_offsets(p, n)
        if len(sols_prev) * len(offs) > budget:
            raise BudgetExceededError(
                f"level {N} at p={p}: {len(sols_prev) * len(offs)} candidates "
                f"exceed budget {budget}")
        pk = p ** N
        step = p ** (N - 1)
        rows_per_block = max(1, _CHUNK_ROWS // len(offs))
        for i in range(0, len(sols_prev), rows_per_block):
            block = sols_prev[i:i + rows_per_block]
            cand = (block[:, None, :] + step * offs[None, :, :]).reshape(-1, n)
            cols = [cand[:, j] for j in range(n)]
            good = inst.f2.evaluate_batch_mod(cols, pk) == 0
            classify_chunk(cand[good], pk)
    undecided = (np.concatenate(und_parts) if und_parts
                 else np.zeros((0, n), dtype=np.int64))
    und_mass = _refine_undecided(inst, p, N, undecided, tally, budget)
    return count, tally, und_mass


def soluble_density(inst: Instance, p: int, N: int,
                    lift_extra: int = 2,
                    undecided_as_soluble: bool = True,
                    budget: int = DEFAULT_BUDGET) -> LocalDensity:
    """Density of t mod p^N with f2(t) = 0 mod p^N and a soluble fibre.

    kind 'ell'.  For p = 1 mod 4 the fibre condition is vacuous and the
    result equals hypersurface_density at every level.  Otherwise residues
    whose f1-valuation saturates are refined up to lift_extra extra levels
    and the remaining undecided mass is reported and bracketed.
    """
    if N < 1:
        raise DomainError("level must be positive")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if p % 4 == 1:
        base = hypersurface_density(inst, p, N, budget)
        base.kind = "ell"
        return base
    key = (inst.config_hash(), "ell", p, N, lift_extra, undecided_as_soluble)
    with _DENSITY_LOCK:
        hit = _DENSITY_CACHE.get(key)
    if hit is not None:
        return copy.copy(hit)
    sols_prev = _level1_solutions(inst, p, budget)
    for k in range(2, N):
        sols_prev = _lift_once(inst, p, k, sols_prev, budget)
    count, tally, und_mass = _classify_level(inst, p, N, sols_prev,
                                             lift_extra, budget)
    denom = tally.unit * p ** (N * (inst.n - 1))
    lo = Fraction(tally.soluble, denom)
    hi = Fraction(tally.soluble + und_mass, denom)
    chosen = hi if undecided_as_soluble else lo
    raw = tally.soluble + (und_mass if undecided_as_soluble else 0)
    total_mass = count * tally.unit
    und_frac = und_mass / total_mass if total_mass else 0.0
    prev = 0.0
    stab = False
    if N >= 2:
        # previous-level density for the stabilization flag
        if N == 2:
            prev_base = sols_prev
        else:
            prev_base = _level1_solutions(inst, p, budget)
            for k in range(2, N - 1):
                prev_base = _lift_once(inst, p, k, prev_base, budget)
        cp, tp, up = _classify_level(inst, p, N - 1, prev_base,
                                     min(lift_extra, 1), budget)
        pden = tp.unit * p ** ((N - 1) * (inst.n - 1))
        prev = float(Fraction(tp.soluble + (up if undecided_as_soluble else 0),
                              pden))
        stab = abs(float(chosen) - prev) <= STABLE_REL_TOL * float(chosen)
    out = LocalDensity(p=p, level=N, raw_count=raw, density=float(chosen),
                       stabilized=bool(stab), kind="ell",
                       undecided_fraction=float(und_frac),
                       density_low=float(lo), density_high=float(hi),
                       prev_density=prev, mass_scale=tally.unit)
    with _DENSITY_LOCK:
        _DENSITY_CACHE[key] = copy.copy(out)
    return out


def tamagawa_factor(inst: Instance, p: int, N: int,
                    lift_extra: int = 2,
                    budget: int = DEFAULT_BUDGET) -> LocalFactor:
    """Weighted local density tau_p and its convergence factor lambda_p.

    tau_p = (1 - p^-(n-d)) / (1 - 1/p) * soluble density;
    lambda_p = (1 - 1/p)^(-1/2).
    """
    dens = soluble_density(inst, p, N, lift_extra=lift_extra, budget=budget)
    w = (1.0 - p ** (-(inst.n - inst.d))) / (1.0 - 1.0 / p)
    tau_p = w * dens.density
    lam = (1.0 - 1.0 / p) ** -0.5
    return LocalFactor(p=p, tau_p=tau_p, lambda_p=lam, ratio=tau_p / lam)


DEFAULT_LEVELS = {2: 6, 3: 5, 5: 3, 7: 2, 11: 2, 13: 2}


def level_for(p: int, schedule: dict | None = None) -> int:
    sched = {**DEFAULT_LEVELS, **(schedule or {})}
    return sched.get(p, 2 if p <= 13 else 1)


def local_product(inst: Instance, p_max: int = 13,
                  level_schedule: dict | None = None,
                  lift_extra: int = 2,
                  budget: int = DEFAULT_BUDGET) -> TruncatedValue:
    """prod_{p <= p_max} tau_p / lambda_p with a heuristic tail estimate.

    The tail fits |log(tau_p/lambda_p)| ~ C/p^2 on the computed primes and
    integrates beyond p_max.  When the actual log-factors decay more slowly
    (small n), the fit underestimates the tail; the per-prime factors are
    returned in shells so the drift is visible.
    """
    factors = []
    value = 1.0
    for p in [int(r) for r in prime_sieve(p_max)]:
        f = tamagawa_factor(inst, p, level_for(p, level_schedule),
                            lift_extra=lift_extra, budget=budget)
        factors.append(f)
        value *= f.ratio
    logs = np.array([abs(math.log(f.ratio)) for f in factors if f.ratio > 0])
    ps = np.array([float(f.p) for f in factors if f.ratio > 0])
    if len(ps):
        C = float((logs * ps**-2).sum() / (ps**-4).sum())
        tail_log = C * sum(1.0 / q**2 for q in range(p_max + 1, 10 * p_max)
                           if is_prime(q))
    else:
        tail_log = 0.0
    err = abs(value) * (math.exp(tail_log) - 1.0)
    return TruncatedValue(
        value=complex(value),
        truncation_params={"p_max": p_max,
                           "levels": {f.p: level_for(f.p, level_schedule)
                                      for f in factors}},
        error_bound=float(err), error_kind="heuristic", shells=factors)
