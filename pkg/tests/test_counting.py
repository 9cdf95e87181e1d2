import numpy as np
import pytest

from fibrecount import counting
from fibrecount.arith import DomainError
from fibrecount.counting import BudgetExceededError


def test_box_count_demo(demo):
    # the four points (+-1, +-1); the origin never counts
    assert counting.count_soluble_fibre_points(demo, 1) == 4
    assert counting.count_soluble_fibre_points(
        demo, 1, include_zero_fibres=True) == 4
    assert counting.count_soluble_fibre_points(demo, 0) == 0


def test_box_count_monotone_and_even(demo, bilinear):
    prev = 0
    for P in range(1, 8):
        cnt = counting.count_soluble_fibre_points(bilinear, P)
        assert cnt >= prev
        assert cnt % 2 == 0  # x -> -x symmetry, even degree
        prev = cnt


def test_projective_demo(demo):
    rec = counting.projective_count(demo, 1)
    assert rec.raw_count == 2  # (1:1) and (1:-1)
    rec3 = counting.projective_count(demo, 3)
    assert rec3.raw_count == 2


def test_projective_paths_agree(four_squares, bilinear):
    for inst in (four_squares, bilinear):
        for t in (3, 6, 9):
            direct = counting.projective_count(inst, t, method="direct")
            moeb = counting.projective_count(inst, t, method="moebius")
            assert direct.raw_count == moeb.raw_count


def test_split_matches_slab(four_squares, bilinear):
    for inst in (four_squares, bilinear):
        for P in (2, 5, 7):
            for incl in (False, True):
                a = counting.count_soluble_fibre_points(
                    inst, P, include_zero_fibres=incl, method="split")
                b = counting.count_soluble_fibre_points(
                    inst, P, include_zero_fibres=incl, method="slab")
                assert a == b


def test_mobius_residual_zero(demo, bilinear):
    for inst in (demo, bilinear):
        for t in (1, 2, 3, 7, 12):
            assert counting.mobius_residual(inst, t) == 0


def test_parallel_determinism(four_squares):
    a = counting.count_soluble_fibre_points(four_squares, 6, method="slab",
                                            threads=1)
    b = counting.count_soluble_fibre_points(four_squares, 6, method="slab",
                                            threads=4)
    assert a == b


def test_budget_refusal(four_squares):
    with pytest.raises(BudgetExceededError, match="budget"):
        counting.count_soluble_fibre_points(four_squares, 50, method="slab",
                                            budget=10**4)
    with pytest.raises(BudgetExceededError):
        counting.projective_count(four_squares, 50, method="direct",
                                  budget=10**4)


def test_two_squares_count():
    assert counting.two_squares_count(10) == 7  # 1,2,4,5,8,9,10
    x = 2000
    assert counting.two_squares_count(x) == counting.two_squares_count_pairs(x)


def test_two_squares_sieve_matches_pairs_exhaustively():
    x = 10**4
    ok = counting.two_squares_sieve(x)
    hit = np.zeros(x + 1, dtype=bool)
    for a in range(0, int(x**0.5) + 1):
        b = np.arange(0, int((x - a * a) ** 0.5) + 1)
        hit[a * a + b * b] = True
    assert np.array_equal(ok[1:], hit[1:])


def test_progression_count():
    assert counting.progression_count(100, 1, 4) == 15
    with pytest.raises(DomainError, match="multiple of 4"):
        counting.progression_count(100, 1, 6)
    with pytest.raises(DomainError, match="coprime"):
        counting.progression_count(100, 2, 4)
    with pytest.raises(DomainError, match="1 mod 4"):
        counting.progression_count(100, 3, 4)
    with pytest.raises(DomainError, match="at least Q"):
        counting.progression_count(3, 1, 4)


def test_count_record_csv(demo):
    rec = counting.projective_count(demo, 5)
    assert counting.CountRecord.csv_header() == \
        "label,t,raw_count,normalized,include_zero,wall_time_s"
    row = rec.csv_row()
    assert row.startswith("demo-pair,5,2,")
    assert row.count(",") == 5
