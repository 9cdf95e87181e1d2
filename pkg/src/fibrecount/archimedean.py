"""Archimedean densities by reproducible Monte Carlo.

real_density estimates the surface density of f2 = 0 in the unit box,
restricted to the region where the fibre conic has a real point, i.e.
f1(t) >= 0 (f1 = 0 counts as soluble; flip strict_positive to probe the
boundary convention, which is measure-zero for non-degenerate forms):

    J = lim_{eps->0} (1/2 eps) vol{t in [-1,1]^n : |f2(t)| <= eps, f1(t) >= 0}

via shell volumes over a decreasing epsilon schedule plus Richardson-style
extrapolation in eps^2.  real_density_coarea is an independent estimator:
it integrates the last coordinate exactly through polynomial root finding
and weights each surface crossing by 1/|df2/dt_j|.

All sampling is counter-based (Philox keyed by (seed, stream, chunk)), so
results are bit-reproducible for a given (seed, samples) and independent
of any parallel scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import DomainError
from .forms import Form, Instance

_CHUNK = 1 << 18
_MASK64 = (1 << 64) - 1


@dataclass
class McEstimate:
    """Monte Carlo estimate with its standard error and provenance."""

    value: complex
    std_error: float
    samples: int
    seed: int
    epsilon: float | None = None
    rows: list = field(default_factory=list)


def _chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, ((stream & 0xFFFFFFFF) << 32)
                    | (chunk & 0xFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _eval_float(f: Form, pts: np.ndarray) -> np.ndarray:
    """f at float points, shape (m, n) -> (m,)."""
    out = np.zeros(len(pts))
    for coeff, exps in f.monomials:
        term = np.full(len(pts), float(coeff))
        for j, e in enumerate(exps):
            for _ in range(e):
                term *= pts[:, j]
        out += term
    return out


def oscillatory_box_integral(inst: Instance, gamma, samples: int,
                             seed: int = 0) -> McEstimate:
    """Monte Carlo estimate of the box integral of
    e(gamma1*f1(t) + gamma2*f2(t)) over [-1,1]^n.

    gamma = (0, 0) short-circuits to the exact value 2^n.
    """
    if samples < 10**3:
        raise DomainError("need at least 1000 samples")
    g1, g2 = float(gamma[0]), float(gamma[1])
    n = inst.n
    vol = 2.0 ** n
    if g1 == 0.0 and g2 == 0.0:
        return McEstimate(value=complex(vol), std_error=0.0,
                          samples=samples, seed=seed)
    acc = 0.0 + 0.0j
    acc2_re = acc2_im = 0.0
    done = 0
    chunk_idx = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        rng = _chunk_rng(seed, 1, chunk_idx)
        pts = rng.uniform(-1.0, 1.0, size=(m, n))
        phase = g1 * _eval_float(inst.f1, pts) + g2 * _eval_float(inst.f2, pts)
        z = np.exp(2j * np.pi * phase)
        acc += z.sum()
        acc2_re += float((z.real ** 2).sum())
        acc2_im += float((z.imag ** 2).sum())
        done += m
        chunk_idx += 1
    mean = acc / samples
    var_re = acc2_re / samples - mean.real ** 2
    var_im = acc2_im / samples - mean.imag ** 2
    se = vol * math.sqrt(max(var_re + var_im, 0.0) / samples)
    return McEstimate(value=complex(vol * mean), std_error=se,
                      samples=samples, seed=seed)


def _shell_level(f1: Form, f2: Form, n: int, eps: float, samples: int,
                 seed: int, stream: int, strict_positive: bool):
    hits = 0
    done = 0
    chunk_idx = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        rng = _chunk_rng(seed, stream, chunk_idx)
        pts = rng.uniform(-1.0, 1.0, size=(m, n))
        v2 = _eval_float(f2, pts)
        sel = np.abs(v2) <= eps
        if sel.any():
            v1 = _eval_float(f1, pts[sel])
            good = (v1 > 0.0) if strict_positive else (v1 >= 0.0)
            hits += int(good.sum())
        done += m
        chunk_idx += 1
    vol = 2.0 ** n
    phat = hits / samples
    est = vol * phat / (2.0 * eps)
    se = vol * math.sqrt(max(phat * (1.0 - phat), 0.0) / samples) / (2.0 * eps)
    return est, se, hits


DEFAULT_SCHEDULE = (0.1, 0.05, 0.025, 0.0125)


def real_density_forms(f1: Form, f2: Form, n: int,
                       epsilon_schedule=DEFAULT_SCHEDULE,
                       samples: int = 10**6, seed: int = 0,
                       strict_positive: bool = False) -> McEstimate:
    """Shell-volume estimate of the restricted surface density.

    Sample counts scale like 1/eps so every level sees a comparable number
    of shell hits; the levels are combined by weighted least squares in
    eps (Richardson-style: curvature and any cone point make the shell
    bias first order in the width), reported at eps -> 0.
    """
    sched = list(epsilon_schedule)
    if len(sched) < 3:
        raise DomainError("need at least 3 epsilon levels")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise DomainError("epsilon schedule must be strictly decreasing")
    rows = []
    total = 0
    for i, eps in enumerate(sched):
        n_i = int(math.ceil(samples * sched[0] / eps))
        est, se, hits = _shell_level(f1, f2, n, eps, n_i, seed, 10 + i,
                                     strict_positive)
        rows.append((eps, est, se, n_i))
        total += n_i
    # weighted LS fit est_i = J0 + a * eps_i
    x = np.array([r[0] for r in rows])
    y = np.array([r[1] for r in rows])
    w = np.array([1.0 / max(r[2], 1e-12) ** 2 for r in rows])
    A = np.stack([np.ones_like(x), x], axis=1)
    Aw = A * w[:, None]
    cov = np.linalg.inv(Aw.T @ A)
    coefs = cov @ (Aw.T @ y)
    j0 = float(coefs[0])
    se0 = float(math.sqrt(max(cov[0, 0], 0.0)))
    return McEstimate(value=complex(j0), std_error=se0, samples=total,
                      seed=seed, epsilon=sched[-1], rows=rows)


def real_density(inst: Instance, epsilon_schedule=DEFAULT_SCHEDULE,
                 samples: int = 10**6, seed: int = 0,
                 strict_positive: bool = False) -> McEstimate:
    """Shell-volume estimator of J for an instance.

    Deliberately independent of box_max_m: the fibre condition enters only
    through the sign of f1.
    """
    return real_density_forms(inst.f1, inst.f2, inst.n, epsilon_schedule,
                              samples, seed, strict_positive)


def _fiber_variable(f2: Form) -> int:
    """Coordinate to integrate exactly: prefer one carrying a pure power."""
    best = None
    for j in range(f2.n_vars):
        deg_j = max((e[j] for _, e in f2.monomials), default=0)
        pure = any(e[j] == f2.degree and sum(e) == e[j]
                   for _, e in f2.monomials)
        if deg_j > 0:
            score = (1 if pure else 0, deg_j)
            if best is None or score > best[0]:
                best = (score, j)
    if best is None:
        raise DomainError("f2 involves no variable")
    return best[1]


def _poly_coeff_arrays(f2: Form, j: int, pts: np.ndarray):
    """Coefficients of f2 as a polynomial in t_j, per sample row."""
    dmax = max(e[j] for _, e in f2.monomials)
    m = len(pts)
    coeffs = np.zeros((m, dmax + 1))
    for coeff, exps in f2.monomials:
        term = np.full(m, float(coeff))
        for i, e in enumerate(exps):
            if i == j:
                continue
            for _ in range(e):
                term *= pts[:, i if i < j else i - 1]
        coeffs[:, exps[j]] += term
    return coeffs


def _roots_in_box(coeffs: np.ndarray):
    """Real roots in [-1, 1] of each row of a coefficient matrix
    (c0 + c1 x + ...), flattened to (row_indices, root_values).

    Rows are grouped by effective degree; degree <= 2 uses closed forms,
    higher degrees use batched companion matrices.
    """
    m, k = coeffs.shape
    scale = np.abs(coeffs).max(axis=1)
    eff = np.full(m, -1)
    for d in range(k - 1, -1, -1):
        cand = (eff < 0) & (np.abs(coeffs[:, d]) > 1e-12 * np.maximum(scale, 1e-30))
        eff[cand] = d
    idx_parts, root_parts = [], []
    for d in range(1, k):
        rows = np.nonzero(eff == d)[0]
        if len(rows) == 0:
            continue
        c = coeffs[rows, :d + 1]
        if d == 1:
            roots = (-c[:, 0] / c[:, 1])[:, None].astype(np.complex128)
        elif d == 2:
            a, b, cc = c[:, 2], c[:, 1], c[:, 0]
            sq = np.sqrt((b * b - 4 * a * cc).astype(np.complex128))
            roots = np.stack([(-b + sq) / (2 * a), (-b - sq) / (2 * a)], axis=1)
        else:
            lead = c[:, d][:, None]
            comp = np.zeros((len(rows), d, d))
            comp[:, 1:, :-1] = np.eye(d - 1)
            comp[:, :, -1] = -c[:, :d] / lead
            roots = np.linalg.eigvals(comp)
        good = (np.abs(roots.imag) <= 1e-9) & (roots.real >= -1.0) \
            & (roots.real <= 1.0)
        where_row, where_col = np.nonzero(good)
        idx_parts.append(rows[where_row])
        root_parts.append(roots.real[where_row, where_col])
    if not idx_parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(idx_parts), np.concatenate(root_parts)


def real_density_coarea(inst: Instance, samples: int = 10**6, seed: int = 0,
                        strict_positive: bool = False,
                        fiber_var: int | None = None) -> McEstimate:
    """Independent estimator of J: exact 1-d fibre integration.

    For each sampled point of the remaining n-1 coordinates, the real roots
    of f2 along the fibre coordinate are found exactly and each root in the
    box with f1 >= 0 contributes 1/|df2/dt_j|.  The weight distribution is
    heavy-tailed near critical points, so the standard error is estimated
    from 64 batch means rather than the per-sample variance.
    """
    if samples < 10**3:
        raise DomainError("need at least 1000 samples")
    j = _fiber_variable(inst.f2) if fiber_var is None else fiber_var
    n = inst.n
    # size chunks so the batch-means error estimate always has >= 64 cells
    chunk = max(500, min(_CHUNK, -(-samples // 64)))
    batch_sums = []
    done = 0
    chunk_idx = 0
    total_w = 0.0
    while done < samples:
        m = min(chunk, samples - done)
        rng = _chunk_rng(seed, 99, chunk_idx)
        pts = rng.uniform(-1.0, 1.0, size=(m, n - 1))
        coeffs = _poly_coeff_arrays(inst.f2, j, pts)
        dpoly = coeffs[:, 1:] * np.arange(1, coeffs.shape[1])
        rows, roots = _roots_in_box(coeffs)
        chunk_w = 0.0
        if len(rows):
            dval = np.zeros(len(rows))
            for dd in range(dpoly.shape[1]):
                dval += dpoly[rows, dd] * roots ** dd
            keep = np.abs(dval) >= 1e-12
            rows, roots, dval = rows[keep], roots[keep], dval[keep]
            full = np.empty((len(rows), n))
            full[:, :j] = pts[rows, :j]
            full[:, j] = roots
            full[:, j + 1:] = pts[rows, j:]
            v1 = _eval_float(inst.f1, full)
            ok = (v1 > 0.0) if strict_positive else (v1 >= 0.0)
            chunk_w = float((1.0 / np.abs(dval[ok])).sum())
        total_w += chunk_w
        batch_sums.append((chunk_w, m))
        done += m
        chunk_idx += 1
    vol = 2.0 ** (n - 1)
    mean = total_w / samples
    # 64 batch means for a heavy-tail-robust standard error
    nb = min(64, len(batch_sums)) if len(batch_sums) > 1 else 1
    if nb > 1:
        ws = np.array([b[0] for b in batch_sums])
        ms = np.array([b[1] for b in batch_sums])
        groups = np.array_split(np.arange(len(ws)), nb)
        bm = np.array([ws[g].sum() / ms[g].sum() for g in groups])
        se = vol * float(bm.std(ddof=1) / math.sqrt(nb))
    else:
        se = float("nan")
    return McEstimate(value=complex(vol * mean), std_error=se,
                      samples=samples, seed=seed)
