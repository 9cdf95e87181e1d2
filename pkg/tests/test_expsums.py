import math
from math import gcd

import numpy as np
import pytest

from fibrecount import arith, expsums
from fibrecount.forms import Form, Instance


@pytest.fixture(scope="module")
def split_squares():
    # f1 = x0^2, f2 = x1^2: one-dimensional Gauss sums in each slot
    return Instance(f1=Form(2, 2, ((1, (2, 0)),)),
                    f2=Form(2, 2, ((1, (0, 2)),)),
                    n=2, d=2, box_max_m=1, label="split-squares")


def test_birch_sum_small(split_squares):
    assert expsums.birch_sum(split_squares, (0, 0), 1) == 1
    assert abs(expsums.birch_sum(split_squares, (1, 1), 2)) < 1e-12
    # sum over x0 of e(x0^2/3) is the quadratic Gauss sum 1+2e(1/3) = i sqrt3
    val = expsums.birch_sum(split_squares, (1, 0), 3)
    assert val == pytest.approx(3j * math.sqrt(3), abs=1e-9)


def test_birch_table_matches_literal(four_squares):
    q = 9
    S = expsums.birch_sum_table(four_squares, q)
    for (a1, a2) in ((1, 0), (2, 5), (4, 4)):
        lit = expsums.birch_sum_single(four_squares, a1, a2, q)
        assert S[a1, a2] == pytest.approx(lit, abs=1e-7)


def test_birch_crt_path(four_squares):
    for q in (6, 12, 45):
        direct = expsums.birch_sum(four_squares, (1, 2), q, method="direct")
        crt = expsums.birch_sum(four_squares, (1, 2), q, method="crt")
        assert abs(direct - crt) < 1e-9 * q**four_squares.n


def test_birch_conjugation(four_squares):
    q = 7
    S = expsums.birch_sum_table(four_squares, q)
    for a1 in range(q):
        for a2 in range(q):
            assert S[(q - a1) % q, (q - a2) % q] == \
                pytest.approx(np.conj(S[a1, a2]), abs=1e-9)


def test_twisted_sum_plain():
    assert expsums.twisted_two_squares_sum(10, 0, 1) == pytest.approx(7.0)


def test_arc_factor_anchor_and_tail():
    consts = arith.landau_constants(10**6)
    for q in (1, 3, 4, 12):
        near = expsums.arc_factor(1 % q if q > 1 else 0, q, 2.0**18)
        far = expsums.arc_factor(1 % q if q > 1 else 0, q, 2.0**20)
        assert abs(near.value - far.value) <= near.error_bound
    anchor = expsums.arc_factor(0, 1, 2.0**22)
    assert abs(anchor.value.real - 1 / (2 * consts.c0**2)) <= anchor.error_bound
    assert anchor.error_kind == "rigorous"


def test_arc_factor_conjugation():
    for q in (3, 4, 8, 12):
        row, _ = expsums.arc_factor_row(q, 2.0**18)
        for a1 in range(q):
            assert row[(q - a1) % q] == pytest.approx(np.conj(row[a1]),
                                                      abs=1e-12)


def test_arc_factor_bounded_by_series():
    for q in range(1, 51):
        row, _ = expsums.arc_factor_row(q, 2.0**18)
        bound = expsums.arc_factor_series_bound(q, 2.0**18)
        assert np.abs(row).max() <= bound + 1e-12


def test_gcd_phase_sum_values():
    assert expsums.gcd_phase_sum(0, 1, 1) == pytest.approx(1.0)
    # l = 0 is excluded since gcd(0, p) = p != 1; every unit term carries
    # the weight (1 - 1/p)^(-1)
    for p, a in ((5, 1), (7, 3), (11, 2)):
        expect = -(1 - 1 / p) ** -1
        assert expsums.gcd_phase_sum(a, p, 1) == pytest.approx(expect,
                                                               abs=1e-9)


def test_gcd_phase_sum_matches_literal_loop():
    def vp(m, p):
        v = 0
        while m % p == 0:
            m //= p
            v += 1
        return v

    def literal(a, q, k):
        qfactors = [(p, vp(q, p)) for p in range(2, q + 1)
                    if q % p == 0 and all(p % r for r in range(2, p))]
        out = 0j
        for l in range(q):
            if (gcd(l, q) if l else q) != gcd(k * k, q):
                continue
            w = 1.0
            if l != 0:  # l = 0 has infinite valuation everywhere: weight 1
                for p, e in qfactors:
                    if vp(l, p) < e:
                        w *= p / (p - 1)
            out += w * np.exp(-2j * np.pi * a * l / q)
        return out

    for (a, q, k) in ((1, 9, 3), (2, 12, 2), (0, 8, 1), (3, 18, 3), (1, 5, 1)):
        assert expsums.gcd_phase_sum(a, q, k) == pytest.approx(
            literal(a, q, k), abs=1e-9)


def test_gcd_phase_sum_kappa_saturation(four_squares):
    # once k^2 is divisible by q the constraint pins l = 0 and the sum is 1
    assert expsums.gcd_phase_sum(5, 9, 3) == pytest.approx(1.0)
    assert expsums.gcd_phase_sum(5, 9, 9) == pytest.approx(1.0)


def test_local_series_odd_truncation_base(four_squares):
    ser = expsums.local_series_odd(four_squares, 3, kappa_max=0, m_max=0)
    assert ser.value == pytest.approx(1.0)


def test_local_series_odd_shells_decay(four_squares):
    ser = expsums.local_series_odd(four_squares, 3, m_max=3)
    mags = [abs(s) for s in ser.shells[1:]]
    assert all(a > b for a, b in zip(mags, mags[1:]))
    assert ser.error_kind == "heuristic"


def test_local_series_two_base_shell(four_squares):
    ser = expsums.local_series_two(four_squares, rho_max=0, t_max=40)
    assert ser.value.real == pytest.approx(0.5, abs=1e-9)


def test_singular_series_first_term(four_squares):
    consts = arith.landau_constants(10**6)
    s = expsums.singular_series(four_squares, Q=1)
    assert s.value.real == pytest.approx(1 / (2 * consts.c0**2), abs=5e-3)
    s12 = expsums.singular_series(four_squares, Q=12)
    assert abs(s12.value.imag) < 1e-6


def test_singular_series_factored_structure(four_squares):
    fac = expsums.singular_series_factored(four_squares, p_max=5, rho_max=4)
    parts = fac.shells[0]
    prod = parts["2"].value * parts["3"].value * parts["5"].density
    assert fac.value == pytest.approx(prod)


def test_modular_phase_validation():
    with pytest.raises(arith.DomainError):
        expsums.ModularPhase(a1=5, q=3)
    with pytest.raises(arith.DomainError):
        expsums.ModularPhase(a1=0, q=0)


def test_birch_sum_accepts_phase_object(four_squares):
    ph = expsums.ModularPhase(a1=1, q=9, a2=2)
    assert expsums.birch_sum(four_squares, ph) == pytest.approx(
        expsums.birch_sum(four_squares, (1, 2), 9), abs=1e-12)
