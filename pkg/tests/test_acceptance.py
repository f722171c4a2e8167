"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time
import warnings

import numpy as np
import pytest

from lattice_cbc.approx import approximate, brute_index_set, build_index_set
from lattice_cbc.bounds import BoundInputs, sd_bound
from lattice_cbc.cbc import construct, eval_Sd, precompute_spod_G
from lattice_cbc.experiments import (
    DOUBLING_TESTS,
    REFERENCE_RATES,
    ConvergenceConfig,
    convergence_study,
    group_slopes,
    run_doubling,
)
from lattice_cbc.kernel import build_omega_table
from lattice_cbc.linalg_fast import (
    apply_kernel_matrix,
    build_plan,
    hankel_apply,
    is_prime,
    naive_apply_kernel_matrix,
    naive_hankel_apply,
)
from lattice_cbc.verify import ORACLE_FAMILIES, random_family
from lattice_cbc.weights import WeightFamily, equivalent_family, rescale_pod

SLOPE_TOL = 0.35
SLOPE_SPREAD = 0.3


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str, soft: bool = False):
        status = "PASS" if ok else ("WARN" if soft else "FAIL")
        with capsys.disabled():
            print(f"\n{status} criterion {number}: {detail}")
    return emit


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b))) / max(1e-300, float(np.max(np.abs(b))))


def test_1_oracle_equivalence(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad, count = [], 0
    for kind, sigma in ORACLE_FAMILIES:
        for n in (5, 7, 11, 13, 31):
            for d in (2, 3, 4, 6):
                for _ in range(5):
                    w = random_family(kind, d, rng, sigma)
                    fast = construct(n, d, w, 2, workers=1)
                    slow = construct(n, d, w, 2, brute=True, workers=1)
                    count += 1
                    if not np.array_equal(fast.z, slow.z) or _rel(fast.T, slow.T) > 1e-9:
                        bad.append((kind, sigma, n, d))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120
    report(1, ok, f"{count} fast vs brute constructions, {len(bad)} mismatches, {elapsed:.1f}s (limit 120s)")
    assert ok, bad[:5]


def test_2_sigma1_reduction(report):
    rng = np.random.default_rng(202)
    worst_sd, worst_off, bad = 0.0, 0.0, 0
    for _ in range(20):
        d = int(rng.integers(2, 7))
        n = int(rng.choice([7, 11, 13, 31, 61, 101]))
        w = random_family("spod", d, rng, sigma=1)
        a = construct(n, d, w, 2, workers=1)
        b = construct(n, d, equivalent_family(w), 2, workers=1)
        bad += not np.array_equal(a.z, b.z)
        worst_sd = max(worst_sd, abs(a.Sd - b.Sd) / b.Sd)
        for G in precompute_spod_G(w, d, 1, build_omega_table(n, 2).zeta_2alpha)[1:]:
            off = G - np.diag(np.diag(G))
            worst_off = max(worst_off, float(np.max(np.abs(off))) / float(np.max(np.abs(np.diag(G)))))
    ok = bad == 0 and worst_sd <= 1e-12 and worst_off <= 1e-12
    report(2, ok, f"20 configs, {bad} z mismatches, max |dSd|/Sd {worst_sd:.1e}, max off-diagonal {worst_off:.1e}")
    assert ok


def test_3_weight_equivalences(report):
    rng = np.random.default_rng(303)
    worst, bad = 0.0, []
    for a in (0.3, 1.0, 1.7):
        for n, d in ((13, 4), (101, 5)):
            w = WeightFamily.product(np.full(d, a))
            x, rx = construct(n, d, w, 2, workers=1, keep_rows=True)
            y, ry = construct(n, d, equivalent_family(w), 2, workers=1, keep_rows=True)
            err = max(_rel(p[1:], q[1:]) for p, q in zip(rx, ry))
            worst = max(worst, err)
            if not np.array_equal(x.z, y.z) or err > 1e-12:
                bad.append(f"product a={a} n={n}")
    for n, d in ((31, 4), (127, 6)):
        w = random_family("pod", d, rng)
        base, rb = construct(n, d, w, 2, workers=1, keep_rows=True)
        for a in (0.5, 2.0, math.exp(math.lgamma(d + 1) / d)):
            r, rr = construct(n, d, rescale_pod(w, a), 2, workers=1, keep_rows=True)
            err = max(_rel(p[1:], q[1:]) for p, q in zip(rr, rb))
            worst = max(worst, err)
            if not np.array_equal(base.z, r.z) or err > 1e-12:
                bad.append(f"pod a={a:.3g} n={n}")
    ok = not bad
    report(3, ok, f"constant product vs order dependent and POD rescale, max row deviation {worst:.1e}")
    assert ok, bad


def test_4_structured_matvecs(report):
    rng = np.random.default_rng(404)
    worst_c = worst_h = 0.0
    for n in [p for p in range(3, 62) if is_prime(p)]:
        plan = build_plan(n)
        for alpha in (2, 4):
            t = build_omega_table(n, alpha)
            for row in (t.omega0, t.psi0()):
                sym = plan.prepare(row)
                for _ in range(20):
                    x = rng.standard_normal(n)
                    worst_c = max(worst_c, _rel(apply_kernel_matrix(plan, sym, x)[1:],
                                                naive_apply_kernel_matrix(row, x)[1:]))
    for m in range(1, 41):
        for s in sorted({1, max(1, m // 2), m}):
            for out_len in sorted({1, max(1, m // 3), m}):
                for _ in range(20):
                    c, x = rng.standard_normal(m), rng.standard_normal(s)
                    worst_h = max(worst_h, _rel(hankel_apply(c, x, out_len), naive_hankel_apply(c, x, out_len)))
    ok = worst_c <= 1e-9 and worst_h <= 1e-9
    report(4, ok, f"circulant max rel error {worst_c:.1e}, Hankel max rel error {worst_h:.1e} (limit 1e-9)")
    assert ok


def test_5_convergence_rates(report):
    t0 = time.perf_counter()
    slopes = group_slopes(convergence_study(ConvergenceConfig()))
    lines, ok = [], True
    for (alpha, label), ref in REFERENCE_RATES.items():
        s5, s10 = slopes[(alpha, label, 5)], slopes[(alpha, label, 10)]
        good = abs(s5 - ref) <= SLOPE_TOL and abs(s10 - ref) <= SLOPE_TOL and abs(s5 - s10) <= SLOPE_SPREAD
        ok &= good
        lines.append(f"{label}/alpha={alpha}: {s5:.3f}, {s10:.3f} (ref {ref})")
    report(5, ok, "; ".join(lines) + f"; {time.perf_counter() - t0:.1f}s")
    assert ok


def test_6_bound_soundness(report):
    rng = np.random.default_rng(606)
    count, bad = 0, []
    for kind, sigma in ORACLE_FAMILIES:
        for n in (5, 31, 127, 257):
            for d in (1, 3, 6):
                if kind == "finite_order" and d < 2:
                    continue
                for alpha in (2, 4):
                    w = random_family(kind, d, rng, sigma)
                    gv = construct(n, d, w, alpha, workers=1)
                    bound = sd_bound(BoundInputs(alpha=alpha, lam=1.0, n=n, d=d, weights=w))
                    count += 1
                    if not eval_Sd(n, d, w, alpha, gv.z) <= bound + 1e-12:
                        bad.append((kind, n, d, alpha))
    ok = not bad
    report(6, ok, f"{count} constructed vectors, {len(bad)} above the S_d bound")
    assert ok, bad


def test_7_cost_scaling(report):
    lines, ok = [], True
    for test in DOUBLING_TESTS:
        res = run_doubling(test, repeats=3)
        ok &= res["passed"]
        lines.append(f"{test.label} ratios {', '.join(f'{r:.2f}' for r in res['ratios'])} (cap {test.cap})")
    # soft criterion: timing on shared hardware only warns
    report(7, ok, "; ".join(lines), soft=True)
    if not ok:
        warnings.warn("doubling time ratios exceeded their caps")


def test_8_approximation(report):
    rng = np.random.default_rng(808)
    done, attempts, worst = 0, 0, 0.0
    while done < 10 and attempts < 200:
        attempts += 1
        d = int(rng.integers(1, 4))
        n = int(rng.choice([61, 89, 101, 127]))
        w = random_family("product", d, rng)
        z = construct(n, d, w, 2).z
        A = build_index_set(w, float(rng.uniform(2, 10)), 2)
        keys = (A.frequencies @ z) % n
        picks = A.frequencies[rng.choice(len(A), size=min(3, len(A)), replace=False)]
        spectrum = np.unique(np.vstack([picks, -picks]), axis=0)
        # alias free: no other member of A shares a residue with the spectrum
        if any(int(np.sum(keys == int(g @ z) % n)) != 1 for g in spectrum):
            continue
        amp = rng.standard_normal(len(picks))
        ph = rng.uniform(0, 2 * np.pi, len(picks))

        def f(X, picks=picks, amp=amp, ph=ph):
            return np.cos(2 * np.pi * X @ picks.T.astype(float) + ph) @ amp

        X = rng.random((100, d))
        worst = max(worst, float(np.max(np.abs(approximate(f, A, n, z)(X) - f(X)))))
        done += 1
    idx_bad, idx_count = [], 0
    for kind in ("product", "order_dependent", "pod", "spod"):
        for d in (1, 2, 3, 4):
            w = random_family(kind, d, rng)
            for M in (0.5, 5.0, 60.0):
                idx_count += 1
                if build_index_set(w, M, 2).as_set() != brute_index_set(w, M, 2).as_set():
                    idx_bad.append((kind, d, M))
    ok = done == 10 and worst <= 1e-10 and not idx_bad
    report(8, ok, f"{done} reconstructions, max pointwise error {worst:.1e}; "
                  f"{idx_count} index sets vs box scan, {len(idx_bad)} mismatches")
    assert ok
