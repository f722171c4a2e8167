"""Convergence study and cost-scaling benchmarks."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cbc import construct
from .weights import WeightFamily, study_weights

STUDY_PRIMES = (503, 1009, 2003, 4001, 8009)
EXTENDED_PRIMES = STUDY_PRIMES + (16007, 32003, 64007, 128021)
STUDY_CHOICES = {2: ("product", "pod"), 4: ("product", "pod", "spod")}

# empirical rates the study is expected to reproduce
REFERENCE_RATES = {
    (2, "pod"): -1.3,
    (2, "product"): -1.6,
    (4, "spod"): -3.1,
    (4, "pod"): -3.3,
    (4, "product"): -3.5,
}


@dataclass
class ConvergenceConfig:
    alphas: tuple = (2, 4)
    d_list: tuple = (5, 10)
    n_list: tuple = STUDY_PRIMES
    choices: dict = field(default_factory=lambda: dict(STUDY_CHOICES))
    workers: int = 1


@dataclass
class ConvergenceRow:
    weight_label: str
    alpha: int
    d: int
    n: int
    Sd: float


def fit_slope(n_values, Sd_values) -> float:
    """Least-squares slope of log S_d against log n."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(Sd_values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def convergence_study(cfg: ConvergenceConfig, progress=None) -> list[ConvergenceRow]:
    rows = []
    for alpha in cfg.alphas:
        for choice in cfg.choices[alpha]:
            for d in cfg.d_list:
                w = study_weights(choice, d, alpha)
                for n in cfg.n_list:
                    gv = construct(n, d, w, alpha, workers=cfg.workers)
                    rows.append(ConvergenceRow(choice, alpha, d, n, gv.Sd))
                    if progress:
                        progress(rows[-1])
    return rows


def group_slopes(rows: list[ConvergenceRow]) -> dict:
    """{(alpha, label, d): slope} over each group's n values."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.alpha, r.weight_label, r.d), []).append((r.n, r.Sd))
    return {k: fit_slope(*zip(*v)) for k, v in groups.items() if len(v) >= 2}


def time_construct(n: int, d: int, w: WeightFamily, alpha: int, repeats: int = 3, workers: int = 1) -> float:
    """Best-of-``repeats`` wall time of one construction."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        construct(n, d, w, alpha, workers=workers)
        best = min(best, time.perf_counter() - t0)
    return best


@dataclass
class DoublingTest:
    label: str
    family: str
    vary: str  # "n" or "d"
    values: tuple
    fixed: int
    cap: float
    sigma: int = 1


# per-doubling time ratio caps
DOUBLING_TESTS = (
    DoublingTest("product, n doubling", "product", "n", (1009, 2003, 4001), fixed=8, cap=2.6),
    DoublingTest("POD, d doubling", "pod", "d", (16, 32, 64), fixed=1009, cap=4.8),
    DoublingTest("SPOD sigma=2, d doubling", "spod", "d", (8, 16, 32), fixed=1009, cap=9.5, sigma=2),
)


def bench_family(family: str, d: int, sigma: int = 2) -> WeightFamily:
    """Deterministic weights for timing runs (decaying like the study weights)."""
    j = np.arange(1, d + 1, dtype=float)
    if family == "product":
        return WeightFamily.product(j ** -3.0)
    if family == "order_dependent":
        return WeightFamily.order_dependent(0.5 ** np.arange(d + 1), d)
    if family == "pod":
        return study_weights("pod", d, 2)
    if family == "spod":
        from .weights import factorial_over_power, log_rescale_parameter

        log_a = log_rescale_parameter(d)
        gnu = np.exp(log_a) * (2.0 * j[:, None] ** -3.0) ** np.arange(1, sigma + 1)[None, :]
        return WeightFamily.spod(factorial_over_power(d * sigma, log_a), gnu)
    raise ValueError(f"unknown family {family!r}")


def run_doubling(test: DoublingTest, alpha: int = 2, repeats: int = 3, workers: int = 1) -> dict:
    times = []
    for v in test.values:
        n, d = (v, test.fixed) if test.vary == "n" else (test.fixed, v)
        times.append(time_construct(n, d, bench_family(test.family, d, test.sigma), alpha, repeats, workers))
    ratios = [b / a for a, b in zip(times[:-1], times[1:])]
    return {
        "label": test.label,
        "values": list(test.values),
        "seconds": times,
        "ratios": ratios,
        "cap": test.cap,
        "passed": all(r <= test.cap for r in ratios),
    }


def scaling_exponent(xs, ts) -> float:
    """Fitted exponent p in t ~ x^p."""
    return fit_slope(xs, ts)
