import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lattice_cbc.kernel import (
    SUPPORTED_ALPHA,
    bernoulli_number,
    bernoulli_poly,
    build_omega_table,
    psi_value,
    zeta_even,
    zeta_real,
)
from lattice_cbc.linalg_fast import is_prime

PRIMES = [p for p in range(2, 200) if is_prime(p)]


@pytest.mark.parametrize("arg, expected", [
    (2, math.pi ** 2 / 6),
    (4, math.pi ** 4 / 90),
    (8, math.pi ** 8 / 9450),
])
def test_zeta_even_closed_forms(arg, expected):
    assert zeta_even(arg) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("arg", range(2, 33, 2))
def test_zeta_even_against_mpmath(arg):
    assert zeta_even(arg) == pytest.approx(float(mpmath.zeta(arg)), rel=1e-14)


@pytest.mark.parametrize("bad", [0, -2, 3, 34, 2.0])
def test_zeta_even_rejects(bad):
    with pytest.raises(ValueError):
        zeta_even(bad)


@pytest.mark.parametrize("x, tol, expected", [
    (2.0, 1e-10, 1.6449340668482264),
    (3.0, 1e-10, 1.2020569031595942),
    (1.5, 1e-8, 2.6123753486854883),
])
def test_zeta_real_examples(x, tol, expected):
    assert abs(zeta_real(x, tol) - expected) <= tol


@given(st.floats(min_value=1.05, max_value=20.0))
def test_zeta_real_matches_mpmath(x):
    assert abs(zeta_real(x, 1e-12) - float(mpmath.zeta(x))) <= 1e-12 * max(1.0, float(mpmath.zeta(x)))


def test_zeta_real_rejects_divergent():
    with pytest.raises(ValueError):
        zeta_real(1.0)


def test_bernoulli_numbers():
    assert bernoulli_number(1) == -0.5
    assert bernoulli_number(2) == pytest.approx(1 / 6)
    assert bernoulli_number(8) == pytest.approx(-1 / 30)


@pytest.mark.parametrize("alpha, x, expected", [
    (2, 0.0, 1 / 6),
    (2, 0.5, -1 / 12),
    (4, 0.0, -1 / 30),
])
def test_bernoulli_poly_examples(alpha, x, expected):
    assert bernoulli_poly(alpha, x) == pytest.approx(expected, abs=1e-15)


@given(st.sampled_from(SUPPORTED_ALPHA), st.floats(min_value=0.0, max_value=1.0))
def test_bernoulli_poly_matches_mpmath(alpha, x):
    assert bernoulli_poly(alpha, x) == pytest.approx(float(mpmath.bernpoly(alpha, x)), abs=1e-13)


def test_bernoulli_poly_errors():
    with pytest.raises(ValueError):
        bernoulli_poly(3, 0.5)
    with pytest.raises(ValueError):
        bernoulli_poly(2, 1.5)


def test_omega_table_n5_alpha2():
    t = build_omega_table(5, 2)
    assert t.omega0[0] == pytest.approx(math.pi ** 2 / 3, rel=1e-14)
    assert t.omega0[1] == pytest.approx(0.13159473, abs=1e-8)
    # frozen from the truncated series oracle below
    assert t.omega0[1] == pytest.approx(2 * math.pi ** 2 * (0.04 - 0.2 + 1 / 6), rel=1e-13)


def truncated_series(n, alpha, m, H=200_000):
    h = np.arange(1, H + 1, dtype=float)
    head = 2.0 * math.fsum(np.cos(2 * np.pi * h * m / n) / h ** alpha)
    return head, 2.0 / ((alpha - 1) * H ** (alpha - 1))


@pytest.mark.parametrize("n, alpha", [(5, 2), (7, 2), (13, 4), (31, 4), (11, 6), (7, 8)])
def test_omega_matches_series(n, alpha):
    t = build_omega_table(n, alpha)
    for m in range(n):
        approx, tail = truncated_series(n, alpha, m)
        assert abs(t.omega0[m] - approx) <= tail + 1e-8


@pytest.mark.parametrize("n", [3, 5, 7, 101, 1009])
@pytest.mark.parametrize("alpha", SUPPORTED_ALPHA)
def test_omega_symmetry_and_origin(n, alpha):
    t = build_omega_table(n, alpha)
    assert t.omega0[0] == pytest.approx(t.zeta_alpha, rel=1e-12)
    assert np.array_equal(t.omega0[1:], t.omega0[1:][::-1]) or np.allclose(
        t.omega0[1:], t.omega0[1:][::-1], rtol=0, atol=1e-13 * abs(t.omega0[0]))


@pytest.mark.parametrize("n, alpha", [(n, a) for n in PRIMES for a in SUPPORTED_ALPHA if n >= 3 and float(n) ** a <= 1e6])
def test_row_sum_identity(n, alpha):
    # the sum cancels down to n^(1-alpha), so relative 1e-9 is only resolvable for moderate n^alpha
    t = build_omega_table(n, alpha)
    for z in (1, n - 1, max(1, n // 3)):
        s = math.fsum(t.omega(z, np.arange(n)))
        assert s == pytest.approx(t.zeta_alpha * n ** (1 - alpha), rel=1e-9)


@given(st.sampled_from([p for p in PRIMES if p >= 3]), st.data())
def test_permutation_property(n, data):
    z = data.draw(st.integers(min_value=1, max_value=n - 1))
    t = build_omega_table(n, 2)
    assert np.array_equal(np.sort(t.omega(z, np.arange(n))), np.sort(t.omega0))


def test_build_omega_table_errors():
    with pytest.raises(ValueError):
        build_omega_table(9, 2)
    with pytest.raises(ValueError):
        build_omega_table(7, 3)


def test_psi_value_examples():
    t = build_omega_table(11, 2)
    assert psi_value(t, 0) == pytest.approx(4 * math.pi ** 4 / 45, rel=1e-13)
    assert psi_value(t, 0) == pytest.approx(8.6585858698, rel=1e-10)
    assert all(psi_value(t, m) >= -t.zeta_2alpha for m in range(11))
    assert t.zeta_2alpha == pytest.approx(2.1646464675, rel=1e-10)
    with pytest.raises(IndexError):
        psi_value(t, 11)


def test_omega_table_is_read_only():
    t = build_omega_table(7, 2)
    with pytest.raises(ValueError):
        t.omega0[0] = 0.0
