"""Periodic Korobov kernel, Bernoulli polynomials and zeta values.

For even smoothness ``alpha`` the one-dimensional kernel

    omega(z, k) = sum_{h != 0} exp(2 pi i k h z / n) / |h|^alpha

depends only on ``m = k z mod n`` and has the closed form

    omega0(m) = (2 pi)^alpha / ((-1)^(alpha/2 + 1) alpha!) * B_alpha(m / n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .linalg_fast import is_prime

SUPPORTED_ALPHA = (2, 4, 6, 8)

# Monomial coefficients, lowest degree first.
_BERNOULLI_POLY = {
    2: (Fraction(1, 6), Fraction(-1), Fraction(1)),
    4: (Fraction(-1, 30), Fraction(0), Fraction(1), Fraction(-2), Fraction(1)),
    6: (Fraction(1, 42), Fraction(0), Fraction(-1, 2), Fraction(0),
        Fraction(5, 2), Fraction(-3), Fraction(1)),
    8: (Fraction(-1, 30), Fraction(0), Fraction(2, 3), Fraction(0),
        Fraction(-7, 3), Fraction(0), Fraction(14, 3), Fraction(-4), Fraction(1)),
}


@lru_cache(maxsize=None)
def bernoulli_number(k: int) -> Fraction:
    """Exact Bernoulli number B_k with the convention B_1 = -1/2."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    b = [Fraction(1)]
    for m in range(1, k + 1):
        acc = Fraction(0)
        for j in range(m):
            acc += math.comb(m + 1, j) * b[j]
        b.append(-acc / (m + 1))
    return b[k]


def zeta_even(two_m: int) -> float:
    """Riemann zeta at an even positive integer via the Bernoulli closed form."""
    if not isinstance(two_m, (int, np.integer)) or two_m <= 0 or two_m % 2:
        raise ValueError(f"zeta_even needs an even positive integer, got {two_m!r}")
    if two_m > 32:
        raise ValueError("zeta_even is limited to arguments <= 32")
    m = two_m // 2
    b = bernoulli_number(two_m)
    val = (-1) ** (m + 1) * b * Fraction(1, 2 * math.factorial(two_m))
    return float(val) * (2.0 * math.pi) ** two_m


def _rising(x: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= x + i
    return out


def zeta_real(x: float, tol: float = 1e-12) -> float:
    """Riemann zeta for real ``x > 1`` with absolute error at most ``tol``.

    Direct summation up to ``H - 1`` followed by the integral tail
    ``H^(1-x)/(x-1)`` and Euler-Maclaurin boundary corrections. ``H`` is
    doubled until the first omitted correction is below ``tol / 2``.
    """
    if not x > 1.0:
        raise ValueError("zeta_real requires x > 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_corr = 6

    def remainder(h):
        k = n_corr + 1
        coef = abs(float(bernoulli_number(2 * k))) / math.factorial(2 * k)
        return coef * _rising(x, 2 * k - 1) * h ** (-x - 2 * k + 1)

    h = 16
    while remainder(h) > tol / 2:
        h *= 2
    terms = np.arange(1, h, dtype=float) ** (-x)
    head = math.fsum(terms[::-1])
    tail = h ** (1.0 - x) / (x - 1.0) + 0.5 * h ** (-x)
    for k in range(1, n_corr + 1):
        coef = float(bernoulli_number(2 * k)) / math.factorial(2 * k)
        tail += coef * _rising(x, 2 * k - 1) * h ** (-x - 2 * k + 1)
    return head + tail


def bernoulli_poly(alpha: int, x):
    """Bernoulli polynomial B_alpha evaluated at ``x`` (scalar or array)."""
    try:
        coeffs = _BERNOULLI_POLY[alpha]
    except (KeyError, TypeError):
        raise ValueError(f"unsupported alpha {alpha!r}; expected one of {SUPPORTED_ALPHA}") from None
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("bernoulli_poly is defined here on [0, 1] only")
    # Horner, highest degree first
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + float(c)
    return out if out.ndim else float(out)


def omega_scale(alpha: int) -> float:
    """The factor (2 pi)^alpha / ((-1)^(alpha/2+1) alpha!)."""
    sign = -1.0 if (alpha // 2 + 1) % 2 else 1.0
    return (2.0 * math.pi) ** alpha / (sign * math.factorial(alpha))


@dataclass(frozen=True, eq=False)
class OmegaTable:
    """Kernel values omega0[m] for m in Z_n, plus 2 zeta(alpha) and 2 zeta(2 alpha)."""

    n: int
    alpha: int
    omega0: np.ndarray = field(repr=False)
    zeta_alpha: float
    zeta_2alpha: float

    def psi0(self, exact: bool = True) -> np.ndarray:
        """Row of psi = omega^2 - 2 zeta(2 alpha); ``exact=False`` drops the shift."""
        sq = self.omega0 ** 2
        return sq - self.zeta_2alpha if exact else sq

    def omega(self, z: int, k) -> np.ndarray:
        """omega(z, k) for scalar z and array-like k."""
        k = np.asarray(k, dtype=np.int64)
        return self.omega0[(k * z) % self.n]


def build_omega_table(n: int, alpha: int) -> OmegaTable:
    if alpha not in SUPPORTED_ALPHA:
        raise ValueError(f"unsupported alpha {alpha!r}; expected one of {SUPPORTED_ALPHA}")
    if not is_prime(n):
        raise ValueError(f"n = {n} is not prime")
    m = np.arange(n, dtype=float)
    omega0 = omega_scale(alpha) * bernoulli_poly(alpha, m / n)
    omega0.setflags(write=False)
    return OmegaTable(
        n=n,
        alpha=alpha,
        omega0=omega0,
        zeta_alpha=2.0 * zeta_even(alpha),
        zeta_2alpha=2.0 * zeta_even(2 * alpha),
    )


def psi_value(table: OmegaTable, m: int) -> float:
    if not 0 <= m < table.n:
        raise IndexError(f"residue {m} outside Z_{table.n}")
    return float(table.omega0[m] ** 2 - table.zeta_2alpha)
