"""A priori bounds on S_d(z) and on the worst-case L2 approximation error.

With ``c = 2 zeta(alpha lambda)``, ``S0 = sum_u gamma_u^lambda c^|u|`` and
``S1 = sum_{u != {}} |u| gamma_u^lambda c^|u|``:

    S_d(z)   <= [tau / n * S1 * S0]^(1/lambda)
    e        <= (1/M + M S_d)^(1/2)
    e        <= sqrt(2) tau^(1/(2 lambda)) n^(-1/(4 lambda)) (S1 + 1)^(1/lambda)

the last one with ``M = n^(1/(2 lambda))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .kernel import zeta_real
from .weights import MAX_ENUM_DIM, WeightFamily, WeightKind, all_subset_gammas, subset_sizes


def _check_lambda(alpha: int, lam: float) -> None:
    if alpha < 2:
        raise ValueError("alpha must be at least 2")
    if not (1.0 / alpha < lam <= 1.0):
        raise ValueError(f"lambda must lie in (1/alpha, 1] = ({1.0 / alpha}, 1], got {lam}")


def tau(alpha: int, lam: float) -> float:
    _check_lambda(alpha, lam)
    return max(6.0, 2.5 + 2.0 ** (2.0 * alpha * lam + 1.0))


def elementary_symmetric(x) -> np.ndarray:
    """e_0..e_d of the entries of ``x`` by the O(d^2) recurrence."""
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.size + 1)
    e[0] = 1.0
    for i, v in enumerate(x):
        e[1 : i + 2] = e[1 : i + 2] + v * e[0 : i + 1]
    return e


def weighted_sums(w: WeightFamily, d: int, lam: float, c: float) -> tuple[float, float]:
    """(S0, S1) for the first ``d`` coordinates of ``w``."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    if d != w.d:
        raise ValueError(f"weights are defined for d = {w.d}")
    kind = w.kind
    if kind is WeightKind.PRODUCT:
        t = np.power(w.gamma, lam) * c
        S0 = float(np.prod(1.0 + t))
        return S0, S0 * float(np.sum(t / (1.0 + t)))
    if kind is WeightKind.SPOD:
        if d > MAX_ENUM_DIM:
            raise ValueError(f"SPOD weighted sums need subset enumeration, limited to d <= {MAX_ENUM_DIM}")
        g = all_subset_gammas(w)
        card = subset_sizes(d)
        terms = np.power(g, lam) * np.power(c, card)
        return float(np.sum(terms)), float(np.sum(card * terms))
    e = elementary_symmetric(np.power(w.coordinate_gamma(), lam))
    ell = np.arange(d + 1)
    terms = np.power(w.Gamma_upto(d), lam) * np.power(c, ell) * e
    return float(np.sum(terms)), float(np.sum(ell * terms))


def brute_weighted_sums(w: WeightFamily, d: int, lam: float, c: float) -> tuple[float, float]:
    """Reference (S0, S1) by enumerating all 2^d subsets."""
    g = all_subset_gammas(w)
    card = subset_sizes(d)
    terms = np.power(g, lam) * np.power(c, card)
    return float(np.sum(terms)), float(np.sum(card * terms))


@dataclass(frozen=True)
class BoundInputs:
    alpha: int
    lam: float
    n: int
    d: int
    weights: WeightFamily
    M: Union[float, str] = "auto"

    def __post_init__(self):
        _check_lambda(self.alpha, self.lam)
        if self.M != "auto" and not (float(self.M) > 0):
            raise ValueError("M must be positive or 'auto'")

    @property
    def M_value(self) -> float:
        if self.M == "auto":
            return float(self.n) ** (1.0 / (2.0 * self.lam))
        return float(self.M)

    @property
    def c(self) -> float:
        return 2.0 * zeta_real(self.alpha * self.lam, tol=1e-12)


def sd_bound(inp: BoundInputs) -> float:
    S0, S1 = weighted_sums(inp.weights, inp.d, inp.lam, inp.c)
    return (tau(inp.alpha, inp.lam) / inp.n * S1 * S0) ** (1.0 / inp.lam)


def error_bound(inp: BoundInputs) -> tuple[float, float]:
    """(general, simplified) worst-case error bounds."""
    M = inp.M_value
    general = math.sqrt(1.0 / M + M * sd_bound(inp))
    _, S1 = weighted_sums(inp.weights, inp.d, inp.lam, inp.c)
    lam = inp.lam
    simplified = (math.sqrt(2.0) * tau(inp.alpha, lam) ** (1.0 / (2.0 * lam))
                  * inp.n ** (-1.0 / (4.0 * lam)) * (S1 + 1.0) ** (1.0 / lam))
    return general, simplified


def bound_report(inp: BoundInputs) -> dict:
    S0, S1 = weighted_sums(inp.weights, inp.d, inp.lam, inp.c)
    general, simplified = error_bound(inp)
    return {
        "tau": tau(inp.alpha, inp.lam),
        "S0": S0,
        "S1": S1,
        "sd_bound": sd_bound(inp),
        "error_bound_general": general,
        "error_bound_simplified": simplified,
        "M": inp.M_value,
    }


def initial_error(w: WeightFamily, d: int) -> float:
    """max over subsets u of gamma_u^(1/2)."""
    if d != w.d:
        raise ValueError(f"weights are defined for d = {w.d}")
    kind = w.kind
    if kind is WeightKind.PRODUCT:
        best = float(np.prod(np.maximum(1.0, w.gamma)))
    elif kind in (WeightKind.ORDER_DEPENDENT, WeightKind.FINITE_ORDER):
        best = float(np.max(w.Gamma_upto(d)))
    elif kind is WeightKind.POD:
        top = np.sort(w.gamma)[::-1]
        prods = np.concatenate([[1.0], np.cumprod(top)])
        best = float(np.max(w.Gamma[: d + 1] * prods))
    else:
        if d > MAX_ENUM_DIM:
            raise ValueError(f"initial error by enumeration limited to d <= {MAX_ENUM_DIM}")
        best = float(np.max(all_subset_gammas(w)))
    return math.sqrt(best)
