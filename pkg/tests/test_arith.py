import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibrecount import arith


def trial_division(m):
    """Independent factorization oracle."""
    m = abs(m)
    out = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            out[d] = out.get(d, 0) + 1
            m //= d
        d += 1
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return tuple(sorted(out.items()))


def test_factor_examples():
    assert arith.factor(60).factors == ((2, 2), (3, 1), (5, 1))
    assert arith.factor(60).sign == 1
    assert arith.factor(-9).factors == ((3, 2),)
    assert arith.factor(-9).sign == -1
    assert arith.factor(10**6 + 3).factors == trial_division(10**6 + 3)


def test_factor_zero_rejected():
    with pytest.raises(arith.DomainError):
        arith.factor(0)


@given(st.integers(-10**6, 10**6).filter(lambda m: m != 0))
def test_factor_roundtrip(m):
    fz = arith.factor(m)
    prod = fz.sign
    for p, e in fz.factors:
        assert arith.is_prime(p)
        prod *= p**e
    assert prod == m


def test_factor_large_semiprime():
    p, q = 1000003, 1000033
    assert arith.factor(p * q).factors == ((p, 1), (q, 1))


def test_conic_soluble_global_examples():
    assert arith.conic_soluble_global(2) == 1
    assert arith.conic_soluble_global(3) == 0
    assert arith.conic_soluble_global(45) == 1  # 45 = 36 + 9, v_3 even
    assert arith.conic_soluble_global(-4) == 0
    with pytest.raises(arith.DomainError):
        arith.conic_soluble_global(0)


def _check_decomposition(m):
    soluble = arith.conic_soluble_global(m)
    try:
        t, k, r = arith.two_squares_decomposition(m)
        assert m == 2**t * k**2 * r
        assert arith.only_1mod4_factors(r) == 1
        for p, _ in (arith.factor(k).factors if k > 1 else ()):
            assert p % 4 == 3
        assert soluble == 1
    except arith.DomainError:
        assert soluble == 0


def test_two_squares_decomposition_characterizes_indicator():
    for m in range(1, 10**4 + 1):
        _check_decomposition(m)


@given(st.integers(1, 10**5))
def test_two_squares_decomposition_sampled(m):
    _check_decomposition(m)


def test_only_1mod4_examples():
    assert arith.only_1mod4_factors(1) == 1
    assert arith.only_1mod4_factors(65) == 1
    assert arith.only_1mod4_factors(6) == 0


@given(st.integers(1, 1000), st.integers(1, 1000))
def test_only_1mod4_completely_multiplicative(m, k):
    assert arith.only_1mod4_factors(m * k) == \
        arith.only_1mod4_factors(m) * arith.only_1mod4_factors(k)


def test_ramanujan_examples():
    assert arith.ramanujan_sum(1, 5) == 1
    assert arith.ramanujan_sum(9, 3) == -3
    assert arith.ramanujan_sum(4, 2) == -2


@given(st.integers(1, 120), st.integers(0, 200))
def test_ramanujan_formula_vs_direct(q, a):
    direct = arith.ramanujan_sum_direct(q, a)
    exact = arith.ramanujan_sum(q, a)
    assert abs(direct - exact) < 1e-9 * max(q, 1)
    assert abs(direct.imag) < 1e-9 * max(q, 1)


def test_conic_soluble_local_examples():
    assert arith.conic_soluble_local(7, 2) == 0
    assert arith.conic_soluble_local(9, 3) == 1
    assert arith.conic_soluble_local(3, 5) == 1
    assert arith.conic_soluble_local(5, math.inf) == 1
    assert arith.conic_soluble_local(-5, math.inf) == 0
    with pytest.raises(arith.DomainError):
        arith.conic_soluble_local(0, 3)
    with pytest.raises(arith.DomainError):
        arith.conic_soluble_local(5, 6)


def test_landau_constants():
    tiny = arith.landau_constants(3)
    assert tiny.c0 == pytest.approx(math.sqrt(1 - 1 / 9))
    big = arith.landau_constants(10**6)
    mid = arith.landau_constants(10**4)
    assert mid.c0 >= big.c0  # each extra factor is < 1
    assert 0.7625 <= big.landau_K <= 0.7660
    assert big.landau_K * math.sqrt(2) * big.c0 == pytest.approx(1.0, abs=1e-15)
    assert big.c0_error < mid.c0_error
    with pytest.raises(arith.DomainError):
        arith.landau_constants(2)


def test_mertens_examples():
    assert arith.mertens_3mod4(4) == pytest.approx(2 / 3)
    p3 = arith.mertens_3mod4(10**3)
    p6 = arith.mertens_3mod4(10**6)
    ratio = p3 / p6
    expect = math.sqrt(math.log(10**6) / math.log(10**3))
    assert abs(ratio - expect) / expect < 0.02


def test_residue_class_parts():
    assert arith.residue_class_parts(60) == (5, 3)
    assert arith.residue_class_parts(1) == (1, 1)
    assert arith.residue_class_parts(325) == (325, 1)


def test_phi_tau_moebius():
    assert arith.euler_phi(9) == 6
    assert arith.euler_phi(1) == 1
    assert arith.divisor_tau(12) == 6
    for p in (2, 3, 97):
        assert arith.divisor_tau(p) == 2
    mu = arith.moebius_sieve(200)
    for m in range(1, 201):
        assert arith.moebius(m) == int(mu[m])
