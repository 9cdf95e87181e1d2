"""Verification suites: every check the library promises, in one place.

Each check returns a CheckResult; the CLI prints one line per check and
exits nonzero if any gating check fails.  The pytest acceptance module
drives the same functions.

Two checks are expected to fail at desk scale and are marked in their
notes; they assert exactly what they claim to measure and report the
honest numbers (see the repository README for the analysis):

* landau-normalized: the plainly-normalized two-squares count at 1e7 sits
  4.3% above the limit constant (the classical secondary term is ~0.58 /
  log x, i.e. 3.6% at 1e7), outside the stated 2% window.  The
  integral-smoothed comparison, reported in the note, is within 1%.

* series-factorization: at n = 4 the q-sum of the singular series has
  non-decaying terms (the decay exponent lambda0 is negative), so its
  Q = 16 truncation sits far below the local-factor product; the per-prime
  shell structure is verified instead by series-shell-diagnostic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import archimedean, arith, constant, counting, expsums, padic
from .forms import Form, Instance

SUITES = ("arith", "sieve", "expsums", "padic", "archimedean", "constant")


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    expected: str
    runtime_s: float
    gating: bool = True
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if not self.gating:
            tag += "*"
        out = f"[{tag}] {self.name}: {self.measured} (expected {self.expected})"
        if self.note:
            out += f" -- {self.note}"
        return out


def _check(name, fn, expected, gating=True):
    t0 = time.monotonic()
    passed, measured, note = fn()
    return CheckResult(name=name, passed=passed, measured=measured,
                       expected=expected, runtime_s=time.monotonic() - t0,
                       gating=gating, note=note)


# ---------------------------------------------------------------------------
# canonical instances
# ---------------------------------------------------------------------------

def _sq(i, n):
    e = [0] * n
    e[i] = 2
    return e


def demo_instance() -> Instance:
    f1 = Form(2, 2, ((1, (2, 0)), (1, (0, 2))))
    f2 = Form(2, 2, ((1, (2, 0)), (-1, (0, 2))))
    return Instance(f1=f1, f2=f2, n=2, d=2, box_max_m=2, label="demo-pair")


def four_squares_instance() -> Instance:
    f1 = Form(4, 2, tuple((1, tuple(_sq(i, 4))) for i in range(4)))
    f2 = Form(4, 2, tuple(((1 if i < 2 else -1), tuple(_sq(i, 4)))
                          for i in range(4)))
    return Instance(f1=f1, f2=f2, n=4, d=2, box_max_m=4,
                    label="four-squares", sigma_bound=2)


def bilinear_instance() -> Instance:
    f1 = Form(4, 2, tuple((1, tuple(_sq(i, 4))) for i in range(4)))
    f2 = Form(4, 2, ((1, (1, 1, 0, 0)), (-1, (0, 0, 1, 1))))
    return Instance(f1=f1, f2=f2, n=4, d=2, box_max_m=4, label="bilinear")


# ---------------------------------------------------------------------------
# arith suite
# ---------------------------------------------------------------------------

def _ramanujan_check():
    worst = 0.0
    for q in range(1, 201):
        xs = np.arange(q)
        mask = (np.gcd(xs, q) == 1).astype(np.float64)
        direct = np.conj(np.fft.fft(mask))  # entry a: sum over units of e(ax/q)
        for a in range(q):
            exact = arith.ramanujan_sum(q, a)
            gap = abs(direct[a] - exact)
            worst = max(worst, gap)
            if gap > 1e-9 * max(q, 1):
                return False, f"q={q} a={a}: |direct-formula|={gap:.3g}", ""
    return True, f"max |direct-formula| = {worst:.3g} over q<=200", ""


def _global_local_check():
    bad = 0
    sample_note = ""
    for m in range(1, 10**5 + 1):
        for s in (m, -m):
            fz = arith.factor(s)
            glob = arith.conic_soluble_global(s, fz) if s != 0 else None
            loc = arith.conic_soluble_local(s, math.inf) \
                * arith.conic_soluble_local(s, 2)
            for p, _e in fz.factors:
                if p % 4 == 3:
                    loc *= arith.conic_soluble_local(s, p)
            if glob != loc:
                bad += 1
                if bad == 1:
                    sample_note = f"first mismatch at m={s}"
    # places not dividing m are trivially soluble: spot-check
    for m in (7, -45, 123456):
        for p in (3, 7, 11, 19):
            if m % p != 0 and arith.conic_soluble_local(m, p) != 1:
                return False, f"non-dividing place p={p} not trivial at m={m}", ""
    return bad == 0, f"{bad} mismatches over 0<|m|<=1e5", sample_note


def suite_arith(budget=None, seed=0):
    return [
        _check("ramanujan-exactness", _ramanujan_check,
               "formula = direct unit sum, exact integers, q <= 200"),
        _check("global-local", _global_local_check,
               "global indicator = product of local ones, 0 < |m| <= 1e5"),
    ]


# ---------------------------------------------------------------------------
# sieve suite
# ---------------------------------------------------------------------------

def _landau_normalized_check():
    x = 10**7
    consts = arith.landau_constants(10**6)
    cnt = counting.two_squares_count(x)
    norm = cnt * math.sqrt(math.log(x)) / x
    rel = abs(norm - consts.landau_K) / consts.landau_K
    # integral-smoothed comparison (secondary term absorbed), for the note
    ts = np.linspace(2.0, float(x), 2_000_001)
    integral = float(np.trapezoid(1.0 / np.sqrt(np.log(ts)), ts))
    rel_smoothed = abs(cnt - consts.landau_K * integral) / (consts.landau_K * integral)
    note = (f"known failure at desk scale: secondary term ~0.58/log x = "
            f"{0.58 / math.log(x):.3f}; integral-smoothed gap = "
            f"{rel_smoothed:.4f} (within 1%)")
    return rel <= 0.02, f"normalized count {norm:.5f} vs {consts.landau_K:.5f}, " \
                        f"rel gap {rel:.4f}", note


def _landau_oracle_check():
    x = 10**4
    ok = counting.two_squares_sieve(x)
    hit = np.zeros(x + 1, dtype=bool)
    for a in range(0, math.isqrt(x) + 1):
        b = np.arange(0, math.isqrt(x - a * a) + 1)
        hit[a * a + b * b] = True
    same = bool(np.array_equal(ok[1:], hit[1:]))
    return same, f"sieve == pair enumeration for all x <= {x}: {same}", ""


def _mertens_check():
    D = 10**6
    consts = arith.landau_constants(10**6)
    prod = arith.mertens_3mod4(D)
    main = arith.mertens_3mod4_main_term(D, consts)
    rel = abs(prod - main) / main
    return rel <= 0.01, f"product {prod:.6f} vs main term {main:.6f}, " \
                        f"rel gap {rel:.2e}", ""


def _progression_check():
    z = 10**6
    consts = arith.landau_constants(10**6)
    worst = 0.0
    details = []
    for (Q, a) in ((4, 1), (12, 1), (8, 5)):
        cnt = counting.progression_count(z, a, Q)
        _dot, ddot = arith.residue_class_parts(Q)
        main = (math.sqrt(2) * consts.c0 * (ddot / arith.euler_phi(ddot))
                * z / (Q * math.sqrt(math.log(z))))
        rel = abs(cnt - main) / main
        worst = max(worst, rel)
        details.append(f"(Q={Q},a={a}): {rel:.4f}")
    hand = counting.progression_count(100, 1, 4)
    ok = worst <= 0.15 and hand == 15
    return ok, f"max rel gap {worst:.4f}; count(z=100,1 mod 4) = {hand}", \
        "; ".join(details)


def _mobius_check():
    worst = 0
    for inst in (demo_instance(), bilinear_instance()):
        for t in (1, 2, 3, 5, 8, 13, 20):
            r = counting.mobius_residual(inst, t)
            worst = max(worst, abs(r))
            if r != 0:
                return False, f"residual {r} at t={t} ({inst.label})", ""
    return True, "residual 0 for both instances, t <= 20", ""


def suite_sieve(budget=None, seed=0):
    return [
        _check("landau-normalized", _landau_normalized_check,
               "count * sqrt(log 1e7)/1e7 within 2% of 1/(sqrt2 C0)"),
        _check("landau-sieve-vs-pairs", _landau_oracle_check,
               "exact match for all x <= 1e4"),
        _check("mertens-product", _mertens_check,
               "relative error < 1% at D = 1e6"),
        _check("sieve-progressions", _progression_check,
               "within 15% of the main term at z = 1e6"),
        _check("mobius-identity", _mobius_check,
               "residual identically 0 at t <= 20"),
    ]


# ---------------------------------------------------------------------------
# expsums suite
# ---------------------------------------------------------------------------

def _arc_consistency_check():
    x = 10**7
    consts = arith.landau_constants(10**6)
    scale = math.sqrt(math.log(x)) / x
    worst_rel, worst_abs = 0.0, 0.0
    U = 2.0**22
    for q in (1, 2, 3, 4, 8, 12):
        row, _tail = expsums.arc_factor_row(q, U)
        for a1 in range(q):
            emp = expsums.twisted_two_squares_sum(x, a1, q) * scale
            pred = math.sqrt(2) * consts.c0 * row[a1]
            gap = abs(emp - pred)
            if abs(pred) > 1e-12:
                rel = gap / abs(pred)
                if gap > 0.02 and rel > 0.10:
                    return False, f"q={q} a1={a1}: gap {gap:.4f} " \
                                  f"(rel {rel:.3f})", ""
                if gap <= 0.02:
                    worst_abs = max(worst_abs, gap)
                else:
                    worst_rel = max(worst_rel, rel)
            elif gap > 0.02:
                return False, f"q={q} a1={a1}: gap {gap:.4f} at zero " \
                              "prediction", ""
            else:
                worst_abs = max(worst_abs, gap)
    anchor = expsums.arc_factor(0, 1, U)
    anchor_gap = abs(anchor.value.real - 1.0 / (2 * consts.c0 ** 2))
    if anchor_gap > anchor.error_bound:
        return False, f"anchor gap {anchor_gap:.2e} > tail " \
                      f"{anchor.error_bound:.2e}", ""
    return True, (f"worst rel {worst_rel:.4f}, worst abs {worst_abs:.4f}; "
                  f"anchor gap {anchor_gap:.2e} <= tail "
                  f"{anchor.error_bound:.2e}"), ""


def _birch_identity_check():
    insts = (four_squares_instance(), bilinear_instance())
    worst_crt = 0.0
    for inst in insts:
        for q in range(2, 61):
            fs = arith.factor(q).factors
            if len(fs) < 2:
                continue
            S = expsums.birch_sum_table(inst, q)
            q1 = fs[0][0] ** fs[0][1]
            q2 = q // q1
            A = pow(q2, -1, q1)
            B = pow(q1, -1, q2)
            S1 = expsums.birch_sum_table(inst, q1)
            S2 = expsums.birch_sum_table(inst, q2)
            aa = np.arange(q)
            crt = S1[np.ix_((aa * A) % q1, (aa * A) % q1)] \
                * S2[np.ix_((aa * B) % q2, (aa * B) % q2)]
            gap = float(np.abs(S - crt).max()) / q ** inst.n
            worst_crt = max(worst_crt, gap)
            if gap > 1e-9:
                return False, f"CRT gap {gap:.2e} at q={q} ({inst.label})", ""
    worst_orth = 0.0
    for inst in insts:
        for q in range(1, 31):
            S = expsums.birch_sum_table(inst, q)
            lhs = complex(S[0, :].sum())
            rhs = q * expsums.residue_zero_count(inst, q)
            gap = abs(lhs - rhs) / q ** inst.n
            worst_orth = max(worst_orth, gap)
            if gap > 1e-9:
                return False, f"orthogonality gap {gap:.2e} at q={q} " \
                              f"({inst.label})", ""
    return True, (f"CRT gap <= {worst_crt:.2e}, orthogonality gap <= "
                  f"{worst_orth:.2e} (relative to q^n)"), ""


def suite_expsums(budget=None, seed=0):
    return [
        _check("arc-consistency", _arc_consistency_check,
               "empirical twisted sums within max(10% rel, 0.02 abs) of "
               "sqrt(2) C0 F(a1,q) x/sqrt(log x) at x = 1e7; exact anchor"),
        _check("birch-identities", _birch_identity_check,
               "CRT multiplicativity (q <= 60) and orthogonality (q <= 30), "
               "both to 1e-9 relative"),
    ]


# ---------------------------------------------------------------------------
# padic suite
# ---------------------------------------------------------------------------

def _local_bridge_checks(budget):
    inst = four_squares_instance()
    out = []

    t0 = time.monotonic()
    e3 = expsums.local_series_odd(inst, 3, m_max=3, budget=budget)
    l3 = padic.soluble_density(inst, 3, 5, budget=budget)
    lhs = e3.value.real * (1 - 1.0 / 3)
    rel3 = abs(lhs - l3.density) / l3.density
    out.append(CheckResult(
        name="local-bridge-3",
        passed=rel3 <= 0.05,
        measured=f"series*(1-1/3) = {lhs:.5f} vs density {l3.density:.5f}, "
                 f"rel gap {rel3:.4f}",
        expected="within 5% at level N = 5",
        runtime_s=time.monotonic() - t0))

    t0 = time.monotonic()
    e2 = expsums.local_series_two(inst, rho_max=6, budget=budget)
    l2 = padic.soluble_density(inst, 2, 6, budget=budget)
    rel2 = abs(e2.value.real - l2.density) / l2.density
    out.append(CheckResult(
        name="local-bridge-2",
        passed=rel2 <= 0.05,
        measured=f"series = {e2.value.real:.5f} vs density {l2.density:.5f}, "
                 f"rel gap {rel2:.4f}",
        expected="within 5% at level N = 6",
        runtime_s=time.monotonic() - t0))

    t0 = time.monotonic()
    gap3 = (l3.density_high - l3.density_low) / l3.density_high
    gap2 = (l2.density_high - l2.density_low) / l2.density_high
    out.append(CheckResult(
        name="local-bracket-gaps",
        passed=gap3 <= 0.05 and gap2 <= 0.05,
        measured=f"bracket gaps: p=3 {gap3:.2e}, p=2 {gap2:.2e}",
        expected="soluble/insoluble bracket < 5% at the stated levels",
        runtime_s=time.monotonic() - t0))
    return out


def suite_padic(budget=None, seed=0):
    return _local_bridge_checks(budget or padic.DEFAULT_BUDGET)


# ---------------------------------------------------------------------------
# archimedean suite
# ---------------------------------------------------------------------------

def _mc_rows_csv(est) -> str:
    lines = ["epsilon,volume_estimate,std_error,samples,seed"]
    for (eps, j, se, n_i) in est.rows:
        lines.append(f"{eps:.10g},{j:.12g},{se:.12g},{n_i},{est.seed}")
    lines.append(f"0,{est.value.real:.12g},{est.std_error:.12g},"
                 f"{est.samples},{est.seed}")
    return "\n".join(lines)


def suite_archimedean(budget=None, seed=0):
    inst = four_squares_instance()
    out = []

    t0 = time.monotonic()
    i0 = archimedean.oscillatory_box_integral(inst, (0, 0), 10**4, seed=seed)
    out.append(CheckResult(
        name="oscillatory-zero-exact",
        passed=(i0.value == complex(2.0 ** inst.n) and i0.std_error == 0.0),
        measured=f"value {i0.value}, std_error {i0.std_error}",
        expected=f"exact {2**inst.n} with zero error (short-circuit)",
        runtime_s=time.monotonic() - t0))

    t0 = time.monotonic()
    j_shell = archimedean.real_density(inst, samples=10**6, seed=seed)
    j_fiber = archimedean.real_density_coarea(inst, samples=10**6, seed=seed)
    gap = abs(j_shell.value.real - j_fiber.value.real)
    sigma = math.hypot(j_shell.std_error, j_fiber.std_error)
    out.append(CheckResult(
        name="real-density-dual",
        passed=gap <= 2 * sigma,
        measured=f"shell {j_shell.value.real:.4f}+-{j_shell.std_error:.4f} "
                 f"vs fibre {j_fiber.value.real:.4f}+-{j_fiber.std_error:.4f}"
                 f", gap {gap:.4f}",
        expected="agreement within 2 combined sigma at 1e6 samples",
        runtime_s=time.monotonic() - t0))

    t0 = time.monotonic()
    again = archimedean.real_density(inst, samples=10**6, seed=seed)
    same = _mc_rows_csv(j_shell) == _mc_rows_csv(again)
    out.append(CheckResult(
        name="mc-determinism",
        passed=same,
        measured=f"identical bytes: {same}",
        expected="same seed -> identical CSV bytes",
        runtime_s=time.monotonic() - t0))
    return out


# ---------------------------------------------------------------------------
# constant suite
# ---------------------------------------------------------------------------

def suite_constant(budget=None, seed=0):
    budget = budget or expsums.DEFAULT_SUM_BUDGET
    inst = four_squares_instance()
    out = []

    t0 = time.monotonic()
    l_qsum = expsums.singular_series(inst, Q=16, budget=budget)
    l_fact = expsums.singular_series_factored(inst, p_max=13, budget=budget)
    gap = abs(l_qsum.value.real - l_fact.value.real) / abs(l_fact.value.real)
    out.append(CheckResult(
        name="series-factorization",
        passed=gap <= 0.15,
        measured=f"q-sum(Q=16) {l_qsum.value.real:.4f} vs factored "
                 f"{l_fact.value.real:.4f}, rel gap {gap:.3f}",
        expected="agreement within 15% at the stated truncations",
        runtime_s=time.monotonic() - t0,
        note=("known failure: the q-sum terms do not decay at n = 4 "
              "(lambda0 < 0), so the Q = 16 truncation sits far below the "
              "local product; see series-shell-diagnostic for the "
              "structural identity")))

    t0 = time.monotonic()
    # structural shell identity: prime-power q-terms reproduce the local
    # series shells after removing the even-square normalization
    diag_ok = True
    worst = 0.0
    terms = l_qsum.shells
    for p, m_list in ((3, (1, 2)), (5, (1,))):
        if p % 4 == 3:
            ser = expsums.local_series_odd(inst, p, m_max=max(m_list),
                                           budget=budget)
            base = ser.shells[0].real
            for m in m_list:
                lhs = terms[p**m - 1].real / terms[0].real
                rhs = ser.shells[m].real / base
                worst = max(worst, abs(lhs - rhs))
                if abs(lhs - rhs) > 1e-3:
                    diag_ok = False
        else:
            # first shell of the 1-mod-4 factor: level-1 density increment
            dens = padic.hypersurface_density(inst, p, 1, budget=budget)
            lhs = terms[p - 1].real / terms[0].real
            rhs = dens.density - 1.0
            worst = max(worst, abs(lhs - rhs))
            if abs(lhs - rhs) > 5e-3:
                diag_ok = False
    out.append(CheckResult(
        name="series-shell-diagnostic",
        passed=diag_ok,
        measured=f"max shell mismatch {worst:.2e}",
        expected="prime-power q-terms match local-series shells",
        runtime_s=time.monotonic() - t0,
        gating=True))

    t0 = time.monotonic()
    consts = arith.landau_constants(10**6)
    J = archimedean.real_density(inst, samples=10**6, seed=seed)
    prod = padic.local_product(inst, p_max=13, budget=budget)
    c1 = constant.leading_constant_series(inst, J, l_fact, consts)
    c1q = constant.leading_constant_series(inst, J, l_qsum, consts)
    c2 = constant.leading_constant_tamagawa(inst, J, prod)
    agree = constant.route_agreement(c1, c2)
    out.append(CheckResult(
        name="route-agreement",
        passed=agree["relative_gap"] <= 0.10,
        measured=f"series route {c1.c_phi:.4f} vs local route {c2.c_phi:.4f}"
                 f", rel gap {agree['relative_gap']:.4f}",
        expected="within 10% with matched prime content (p <= 13)",
        runtime_s=time.monotonic() - t0,
        note=(f"series route with the raw Q=16 q-sum gives {c1q.c_phi:.4f}; "
              "the q-sum truncation is non-convergent at n = 4 and is "
              "reported, not used, by default")))
    out.append(CheckResult(
        name="constant-positive",
        passed=c1.c_phi > 0 and c2.c_phi > 0,
        measured=f"route values {c1.c_phi:.4f}, {c2.c_phi:.4f}",
        expected="strictly positive",
        runtime_s=0.0))

    t0 = time.monotonic()
    rows = []
    for t in (100, 200):
        rec = counting.projective_count(inst, t, method="moebius")
        pred = constant.predicted_count(c2, inst, t)
        rows.append(f"t={t}: measured {rec.raw_count}, normalized "
                    f"{rec.normalized:.4f}, predicted {pred:.0f}, ratio "
                    f"{rec.raw_count / pred:.3f}")
    out.append(CheckResult(
        name="smoke-normalized-counts",
        passed=True,
        measured="; ".join(rows),
        expected="reported only (never gating)",
        runtime_s=time.monotonic() - t0,
        gating=False,
        note="the dimension condition behind the asymptotic needs n > 12; "
             "at n = 4 the ratio is indicative only"))
    return out


def run_suites(names, budget=None, seed=0):
    """Run the named suites ('all' for everything); returns CheckResults."""
    table = {
        "arith": suite_arith,
        "sieve": suite_sieve,
        "expsums": suite_expsums,
        "padic": suite_padic,
        "archimedean": suite_archimedean,
        "constant": suite_constant,
    }
    if isinstance(names, str):
        names = [names]
    todo = list(SUITES) if "all" in names else names
    out = []
    for name in todo:
        if name not in table:
            raise arith.DomainError(
                f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
        out.extend(table[name](budget=budget, seed=seed))
    return out
