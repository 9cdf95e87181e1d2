import math

import pytest

from fibrecount import constant
from fibrecount.archimedean import McEstimate
from fibrecount.arith import ArithConstants, DomainError
from fibrecount.expsums import TruncatedValue


def _mc(value, se=0.0):
    return McEstimate(value=complex(value), std_error=se, samples=1000, seed=0)


def _tv(value, err=0.0, kind="rigorous"):
    return TruncatedValue(value=complex(value), truncation_params={},
                          error_bound=err, error_kind=kind)


def _c0(value=1.0):
    return ArithConstants(c0=value, c0_prime_cutoff=3, c0_error=0.0,
                          landau_K=1 / (math.sqrt(2) * value))


def test_zeta_direct():
    assert constant.zeta_direct(2) == pytest.approx(math.pi**2 / 6, abs=1e-12)
    assert constant.zeta_direct(4) == pytest.approx(math.pi**4 / 90, abs=1e-12)
    with pytest.raises(DomainError):
        constant.zeta_direct(1.0)


def test_error_exponent():
    assert constant.error_exponent(2) == pytest.approx(1 / 640)
    assert constant.error_exponent(4) == pytest.approx(1 / (5 * 3 * 2**9))
    assert constant.error_exponent(6) == pytest.approx(1 / (5 * 5 * 2**11))
    with pytest.raises(DomainError):
        constant.error_exponent(3)


def test_route1_synthetic(four_squares):
    c = constant.leading_constant_series(four_squares, _mc(1.0), _tv(2.0),
                                         _c0(1.0))
    assert c.c_phi == pytest.approx(1 / constant.zeta_direct(2))
    assert c.epsilon_d == pytest.approx(1 / 640)
    assert not c.warnings


def test_route1_imaginary_warning(four_squares):
    c = constant.leading_constant_series(four_squares, _mc(1.0),
                                         _tv(2.0 + 0.5j), _c0(1.0))
    assert c.warnings


def test_route1_refuses_small_ndmd(demo):
    with pytest.raises(DomainError, match="n - d"):
        constant.leading_constant_series(demo, _mc(1.0), _tv(1.0), _c0())


def test_route2_synthetic(four_squares):
    c = constant.leading_constant_tamagawa(
        four_squares, _mc(math.sqrt(math.pi)), _tv(math.sqrt(2)))
    assert c.c_phi == pytest.approx(1.0)
    assert c.c_phi > 0


def test_predicted_count(four_squares):
    c = constant.leading_constant_tamagawa(
        four_squares, _mc(math.sqrt(math.pi)), _tv(math.sqrt(2)))
    assert constant.predicted_count(c, four_squares, math.e) == \
        pytest.approx(math.e**2)
    t = 37.0
    ratio = constant.predicted_count(c, four_squares, 2 * t) \
        / constant.predicted_count(c, four_squares, t)
    expect = 2**2 * math.sqrt(math.log(t) / math.log(2 * t))
    assert ratio == pytest.approx(expect, rel=1e-12)
    with pytest.raises(DomainError):
        constant.predicted_count(c, four_squares, 1.5)


def test_error_propagation_first_order(four_squares):
    c = constant.leading_constant_series(
        four_squares, _mc(2.0, se=0.2), _tv(3.0, err=0.3), _c0(1.0))
    # relative errors add: 0.1 + 0.1 + 0 = 0.2
    assert c.combined_error == pytest.approx(0.2 * c.c_phi)
    assert c.error_kind == "heuristic"


def test_route_agreement_fields():
    a = constant.ConstantBreakdown(
        route="singular_series", J=1, C0=1, L_phi=2 + 0j, local_product=float("nan"),
        zeta_ndmd=1.6, d=2, c_phi=10.0, combined_error=1.0, epsilon_d=1 / 640)
    b = constant.ConstantBreakdown(
        route="tamagawa", J=1, C0=float("nan"), L_phi=complex(float("nan")),
        local_product=3.0, zeta_ndmd=float("nan"), d=2, c_phi=11.0,
        combined_error=0.5, epsilon_d=1 / 640)
    agree = constant.route_agreement(a, b)
    assert agree["gap"] == pytest.approx(1.0)
    assert agree["relative_gap"] == pytest.approx(1.0 / 10.5)
    assert agree["combined_error"] == pytest.approx(1.5)


def test_csv_roundtrip():
    a = constant.ConstantBreakdown(
        route="tamagawa", J=1, C0=float("nan"), L_phi=complex(float("nan")),
        local_product=3.0, zeta_ndmd=float("nan"), d=2, c_phi=11.0,
        combined_error=0.5, epsilon_d=1 / 640)
    row = a.csv_row()
    assert row.startswith("tamagawa,")
    assert row.count(",") == constant.ConstantBreakdown.csv_header().count(",")


def test_route_gap_shrinks_with_tighter_truncation(four_squares):
    # tightening both truncations one notch narrows the route gap
    import fibrecount as fc
    consts = fc.landau_constants(10**6)
    J = fc.real_density(four_squares, samples=10**6, seed=0)
    gaps = []
    for pm in (7, 13):
        lf = fc.singular_series_factored(four_squares, p_max=pm)
        pr = fc.local_product(four_squares, p_max=pm)
        c1 = fc.leading_constant_series(four_squares, J, lf, consts)
        c2 = fc.leading_constant_tamagawa(four_squares, J, pr)
        gaps.append(abs(c1.c_phi - c2.c_phi))
    assert gaps[1] < gaps[0]
