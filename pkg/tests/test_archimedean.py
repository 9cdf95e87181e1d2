import math

import pytest

from fibrecount import archimedean
from fibrecount.arith import DomainError
from fibrecount.forms import Form, Instance


def test_zero_phase_short_circuit(four_squares):
    est = archimedean.oscillatory_box_integral(four_squares, (0, 0), 10**4)
    assert est.value == complex(16.0)
    assert est.std_error == 0.0


def test_conjugate_symmetry(four_squares):
    # identical sample streams make the two estimates exactly conjugate
    a = archimedean.oscillatory_box_integral(four_squares, (0.7, 1.3),
                                             5 * 10**4, seed=11)
    b = archimedean.oscillatory_box_integral(four_squares, (-0.7, -1.3),
                                             5 * 10**4, seed=11)
    assert abs(a.value - b.value.conjugate()) < 1e-10


def test_oscillatory_decay(four_squares):
    small = archimedean.oscillatory_box_integral(four_squares, (1, 0),
                                                 2 * 10**5, seed=3)
    large = archimedean.oscillatory_box_integral(four_squares, (10, 0),
                                                 2 * 10**5, seed=3)
    assert abs(large.value) < abs(small.value)


def test_min_samples():
    inst_forms = (Form(2, 2, ((1, (2, 0)), (1, (0, 2)))),)
    with pytest.raises(DomainError):
        archimedean.oscillatory_box_integral(
            Instance(f1=inst_forms[0], f2=Form(2, 2, ((1, (2, 0)),
                                                      (-1, (0, 2)))),
                     n=2, d=2, box_max_m=2), (1, 0), 10)


def test_linear_slab_oracle():
    # f2 = t0 cuts the box in a flat slab: the restricted surface density
    # is exactly 2^(n-1) = 8 (f1 = sum of squares is nonnegative)
    f1 = Form(4, 2, tuple((1, tuple(2 * (i == j) for j in range(4)))
                          for i in range(4)))
    f2 = Form(4, 1, ((1, (1, 0, 0, 0)),))
    est = archimedean.real_density_forms(f1, f2, 4, samples=2 * 10**5, seed=5)
    assert abs(est.value.real - 8.0) <= 4 * est.std_error + 1e-9


def test_real_density_dual_estimators(bilinear):
    shell = archimedean.real_density(bilinear, samples=3 * 10**5, seed=2)
    fiber = archimedean.real_density_coarea(bilinear, samples=3 * 10**5,
                                            seed=2)
    sigma = math.hypot(shell.std_error, fiber.std_error)
    assert abs(shell.value.real - fiber.value.real) <= 3 * sigma


def test_real_density_frozen_value(four_squares):
    # quadrature oracle: J = int g(c)^2 dc over [0, 2] with g the density
    # of x^2+y^2 on [-1,1]^2: g = pi for c <= 1, pi - 4 acos(1/sqrt(c))
    # beyond; numerically 11.0904
    est = archimedean.real_density(four_squares, samples=10**6, seed=0)
    assert est.value.real == pytest.approx(11.0904, abs=max(
        5 * est.std_error, 0.08))


def test_determinism_and_box_max_independence(four_squares):
    a = archimedean.real_density(four_squares, samples=10**5, seed=42)
    b = archimedean.real_density(four_squares, samples=10**5, seed=42)
    assert a.value == b.value and a.rows == b.rows
    other = Instance(f1=four_squares.f1, f2=four_squares.f2, n=4, d=2,
                     box_max_m=1000, label="wide",
                     sigma_bound=four_squares.sigma_bound)
    c = archimedean.real_density(other, samples=10**5, seed=42)
    assert c.value == a.value


def test_schedule_validation(four_squares):
    with pytest.raises(DomainError, match="decreasing"):
        archimedean.real_density(four_squares,
                                 epsilon_schedule=(0.1, 0.2, 0.05))
    with pytest.raises(DomainError, match="3 epsilon"):
        archimedean.real_density(four_squares, epsilon_schedule=(0.1, 0.05))


def test_strict_positive_flag(four_squares):
    # f1 >= 0 everywhere for this instance: the boundary convention is
    # measure-zero and both readings agree on the same seed
    a = archimedean.real_density(four_squares, samples=10**5, seed=9)
    b = archimedean.real_density(four_squares, samples=10**5, seed=9,
                                 strict_positive=True)
    assert a.value == b.value


def test_shell_levels_consistent_with_extrapolation(four_squares):
    est = archimedean.real_density(four_squares, samples=10**6, seed=0)
    j0 = est.value.real
    # recover the fitted slope from the two extreme levels
    (e_a, j_a, se_a, _), (e_b, j_b, se_b, _) = est.rows[0], est.rows[-1]
    slope = (j_a - j_b) / (e_a - e_b)
    for (eps, j, se, _n) in est.rows:
        fitted = j0 + slope * eps
        assert abs(j - fitted) <= 3 * se
