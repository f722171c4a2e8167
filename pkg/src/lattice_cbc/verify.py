"""Small-scale cross-checks of every fast path against its reference.

``run_checks`` returns one :class:`CheckResult` per named group. The CLI
``verify`` command prints them and exits nonzero on any failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .approx import brute_index_set, build_index_set
from .bounds import BoundInputs, brute_weighted_sums, sd_bound, weighted_sums
from .cbc import construct, eval_Sd, precompute_spod_G
from .kernel import build_omega_table
from .linalg_fast import (
    apply_kernel_matrix,
    build_plan,
    hankel_apply,
    is_prime,
    naive_apply_kernel_matrix,
    naive_hankel_apply,
)
from .weights import WeightFamily, equivalent_family, rescale_pod

SMALL_PRIMES = (5, 7, 11, 13)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_family(kind: str, d: int, rng: np.random.Generator, sigma: int = 2) -> WeightFamily:
    """A random member of ``kind`` with parameters drawn from (0.05, 1.5)."""
    u = lambda *shape: rng.uniform(0.05, 1.5, size=shape)  # noqa: E731
    if kind == "product":
        return WeightFamily.product(u(d))
    if kind == "order_dependent":
        return WeightFamily.order_dependent(np.concatenate([[1.0], u(d)]), d)
    if kind == "finite_order":
        return WeightFamily.finite_order(np.concatenate([[1.0], u(2)]), 2, d)
    if kind == "pod":
        return WeightFamily.pod(np.concatenate([[1.0], u(d)]), u(d))
    if kind == "spod":
        return WeightFamily.spod(np.concatenate([[1.0], u(d * sigma)]), u(d, sigma))
    raise ValueError(f"unknown kind {kind!r}")


ORACLE_FAMILIES = (
    ("product", 2), ("order_dependent", 2), ("finite_order", 2),
    ("pod", 2), ("spod", 1), ("spod", 2),
)


def pod_counterpart(w: WeightFamily) -> Optional[WeightFamily]:
    """POD family equivalent to an SPOD family with sigma = 1."""
    return equivalent_family(w)


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(1e-300, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) / scale


def check_kernel(rng) -> tuple[bool, str]:
    worst = 0.0
    for n in (5, 7, 31, 61):
        for alpha in (2, 4, 6, 8):
            t = build_omega_table(n, alpha)
            worst = max(worst,
                        abs(t.omega0[0] / t.zeta_alpha - 1.0),
                        float(np.max(np.abs(t.omega0[1:] - t.omega0[1:][::-1]))))
            # the row sum cancels to n^(1-alpha); resolvable while n^alpha is moderate
            if float(n) ** alpha <= 1e6:
                worst = max(worst, abs(math.fsum(t.omega0) / (t.zeta_alpha * n ** (1 - alpha)) - 1.0))
    return worst <= 1e-9, f"worst identity deviation {worst:.2e}"


def check_circulant(rng) -> tuple[bool, str]:
    worst = 0.0
    for n in [p for p in range(3, 62) if is_prime(p)]:
        plan = build_plan(n)
        for alpha in (2, 4):
            t = build_omega_table(n, alpha)
            for row in (t.omega0, t.psi0()):
                sym = plan.prepare(row)
                for _ in range(20):
                    x = rng.standard_normal(n)
                    worst = max(worst, _rel(apply_kernel_matrix(plan, sym, x)[1:],
                                            naive_apply_kernel_matrix(row, x)[1:]))
    return worst <= 1e-9, f"max relative error {worst:.2e}"


def check_hankel(rng) -> tuple[bool, str]:
    worst = 0.0
    for m in range(1, 41, 3):
        for s in range(1, m + 1, max(1, m // 4)):
            for out_len in sorted({1, max(1, m // 2), m}):
                c = rng.standard_normal(m)
                x = rng.standard_normal(s)
                worst = max(worst, _rel(hankel_apply(c, x, out_len), naive_hankel_apply(c, x, out_len)))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def check_oracle_cbc(rng, primes=SMALL_PRIMES, dims=(2, 3, 4), draws: int = 1) -> tuple[bool, str]:
    bad = []
    count = 0
    for kind, sigma in ORACLE_FAMILIES:
        for n in primes:
            for d in dims:
                for _ in range(draws):
                    w = random_family(kind, d, rng, sigma)
                    fast = construct(n, d, w, 2, workers=1)
                    slow = construct(n, d, w, 2, brute=True, workers=1)
                    count += 1
                    if not np.array_equal(fast.z, slow.z) or _rel(fast.T, slow.T) > 1e-9:
                        bad.append(f"{kind}/sigma={sigma} n={n} d={d}")
    return not bad, f"{count} constructions" + (f"; mismatches: {bad[:3]}" if bad else "")


def check_sigma1(rng, configs: int = 8) -> tuple[bool, str]:
    bad = []
    worst_off = 0.0
    for i in range(configs):
        d = int(rng.integers(2, 6))
        n = int(rng.choice([7, 11, 13, 31]))
        w = random_family("spod", d, rng, sigma=1)
        pod = pod_counterpart(w)
        a = construct(n, d, w, 2, workers=1)
        b = construct(n, d, pod, 2, workers=1)
        if not np.array_equal(a.z, b.z) or abs(a.Sd - b.Sd) > 1e-12 * abs(b.Sd):
            bad.append(f"config {i}")
        for G in precompute_spod_G(w, d, 1, build_omega_table(n, 2).zeta_2alpha)[1:]:
            off = G - np.diag(np.diag(G))
            worst_off = max(worst_off, float(np.max(np.abs(off))) / float(np.max(np.abs(np.diag(G)))))
    ok = not bad and worst_off <= 1e-12
    return ok, f"{configs} configs, max off-diagonal ratio {worst_off:.1e}" + (f"; mismatches: {bad}" if bad else "")


def check_equivalences(rng) -> tuple[bool, str]:
    bad = []
    for a in (0.25, 1.0):
        d, n = 4, 13
        w = WeightFamily.product(np.full(d, a))
        od = equivalent_family(w)
        x, rx = construct(n, d, w, 2, workers=1, keep_rows=True)
        y, ry = construct(n, d, od, 2, workers=1, keep_rows=True)
        if not np.array_equal(x.z, y.z) or max(_rel(p[1:], q[1:]) for p, q in zip(rx, ry)) > 1e-12:
            bad.append(f"product a={a}")
    d, n = 4, 31
    w = random_family("pod", d, rng)
    base, rb = construct(n, d, w, 2, workers=1, keep_rows=True)
    for a in (0.5, 2.0, math.exp(math.lgamma(d + 1) / d)):
        r, rr = construct(n, d, rescale_pod(w, a), 2, workers=1, keep_rows=True)
        if not np.array_equal(base.z, r.z) or max(_rel(p[1:], q[1:]) for p, q in zip(rr, rb)) > 1e-12:
            bad.append(f"pod rescale a={a:.3g}")
    return not bad, "constant product vs order dependent, POD rescale" + (f"; failures: {bad}" if bad else "")


def check_index_sets(rng) -> tuple[bool, str]:
    bad = []
    count = 0
    for kind in ("product", "order_dependent", "pod", "spod"):
        for d in (1, 2, 3):
            w = random_family(kind, d, rng)
            for M in (0.5, 4.0, 50.0):
                count += 1
                if build_index_set(w, M, 2).as_set() != brute_index_set(w, M, 2).as_set():
                    bad.append(f"{kind} d={d} M={M}")
    return not bad, f"{count} index sets" + (f"; mismatches: {bad}" if bad else "")


def check_bounds(rng) -> tuple[bool, str]:
    bad = []
    for kind, sigma in ORACLE_FAMILIES:
        d = 4
        w = random_family(kind, d, rng, sigma)
        s = weighted_sums(w, d, 0.8, 2.5)
        b = brute_weighted_sums(w, d, 0.8, 2.5)
        if abs(s[0] - b[0]) > 1e-11 * b[0] or abs(s[1] - b[1]) > 1e-11 * max(b[1], 1e-300):
            bad.append(f"sums {kind}")
        n = 31
        gv = construct(n, d, w, 2, workers=1)
        if not eval_Sd(n, d, w, 2, gv.z) <= sd_bound(BoundInputs(alpha=2, lam=1.0, n=n, d=d, weights=w)) + 1e-12:
            bad.append(f"bound {kind}")
    return not bad, "weighted sums vs enumeration, S_d below its bound" + (f"; failures: {bad}" if bad else "")


CHECKS: dict[str, Callable] = {
    "kernel_identities": check_kernel,
    "circulant_matvec": check_circulant,
    "hankel_matvec": check_hankel,
    "oracle_cbc": check_oracle_cbc,
    "sigma1_reduction": check_sigma1,
    "weight_equivalences": check_equivalences,
    "index_set_brute": check_index_sets,
    "bounds": check_bounds,
}


def run_checks(seed: int = 0, names=None) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        rng = np.random.default_rng([seed, len(out)])
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash counts as a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
