import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lattice_cbc import cbc
from lattice_cbc.cbc import (
    GeneratingVector,
    assemble_VW,
    brute_force_Sd,
    brute_force_VW,
    cbc_step,
    construct,
    criterion_row,
    eval_Sd,
    generating_vector_from_dict,
    make_state,
    naive_criterion_row,
    precompute_pod_C,
    precompute_spod_G,
    prepare_kernels,
    update_state,
)
from lattice_cbc.kernel import build_omega_table
from lattice_cbc.verify import ORACLE_FAMILIES, random_family
from lattice_cbc.weights import (
    WeightFamily,
    all_subset_gammas,
    equivalent_family,
    study_weights,
)

ZETA4x2 = math.pi ** 4 / 45  # 2 zeta(4)


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


# -- precomputation ---------------------------------------------------------

def test_pod_C_examples():
    w = WeightFamily.pod([1, 1, 1, 1], [1.0, 2.0, 3.0])
    C = precompute_pod_C(w, 3, ZETA4x2)
    assert C[3, 0] == 1.0
    assert C[2, 1] == pytest.approx(ZETA4x2 * 9)
    assert C[1, 2] == pytest.approx(ZETA4x2 ** 2 * 36)
    assert C[1, 2] == pytest.approx(168.685, rel=1e-5)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_pod_C_matches_enumeration(d, seed):
    r = np.random.default_rng(seed)
    w = WeightFamily.pod(np.concatenate([[1.0], r.uniform(0, 1, d)]), r.uniform(0, 2, d))
    C = precompute_pod_C(w, d, 1.7)
    for s in range(1, d + 1):
        ref = np.zeros(d - s + 1)
        for sub in subsets(range(s + 1, d + 1)):
            ref[len(sub)] += 1.7 ** len(sub) * math.prod(w.gamma[j - 1] ** 2 for j in sub)
        assert np.allclose(C[s, : d - s + 1], ref, rtol=1e-12, atol=0)
        assert np.all(C[s, d - s + 1:] == 0)


def G_enumerated(w, d, s, zeta2a):
    sigma = w.sigma
    r = (d - s) * sigma + 1
    G = np.zeros((r, r))
    for sub in subsets(range(s + 1, d + 1)):
        Q = np.zeros(r)
        for nu in itertools.product(range(1, sigma + 1), repeat=len(sub)):
            Q[sum(nu)] += math.prod(w.gamma_nu[j - 1, v - 1] for j, v in zip(sub, nu))
        G += zeta2a ** len(sub) * np.outer(Q, Q)
    return G


def test_spod_G_examples(rng):
    w = random_family("spod", 3, rng, sigma=2)
    G = precompute_spod_G(w, 3, 2, ZETA4x2)
    assert np.array_equal(G[3], [[1.0]])
    assert np.allclose(G[1], G_enumerated(w, 3, 1, ZETA4x2), rtol=1e-12, atol=0)
    for Gs in G[1:]:
        assert Gs[0, 0] == 1.0 and np.array_equal(Gs, Gs.T)


@pytest.mark.parametrize("d", [2, 4, 6])
def test_spod_G_sigma1_is_diagonal_C(d, rng):
    w = random_family("spod", d, rng, sigma=1)
    G = precompute_spod_G(w, d, 1, ZETA4x2)
    C = precompute_pod_C(equivalent_family(w), d, ZETA4x2)
    for s in range(1, d + 1):
        assert np.allclose(np.diag(G[s]), C[s, : d - s + 1], rtol=1e-13)
        assert np.count_nonzero(G[s] - np.diag(np.diag(G[s]))) == 0


@pytest.mark.parametrize("d, sigma", [(3, 3), (4, 2)])
def test_spod_G_all_steps(d, sigma, rng):
    w = random_family("spod", d, rng, sigma=sigma)
    G = precompute_spod_G(w, d, sigma, 2.3)
    for s in range(1, d + 1):
        assert np.allclose(G[s], G_enumerated(w, d, s, 2.3), rtol=1e-12, atol=0)


def test_spod_G_short_gamma():
    w = WeightFamily.spod(np.ones(7), np.ones((3, 2)))
    with pytest.raises(ValueError):
        precompute_spod_G(w, 4, 2, 1.0)


# -- assembly and steps -----------------------------------------------------

def test_assemble_first_step_product():
    g = np.array([0.7, 0.4, 0.2])
    w = WeightFamily.product(g)
    om = build_omega_table(7, 2)
    V, W = assemble_VW(make_state(w, om), 1)
    expected = g[0] ** 2 * np.prod(1 + om.zeta_2alpha * g[1:] ** 2)
    assert np.allclose(V, expected, rtol=1e-14) and np.allclose(W, expected / g[0], rtol=1e-14)


def test_assemble_last_step_order_dependent():
    d, n = 3, 11
    w = WeightFamily.order_dependent([1, 0.8, 0.5, 0.3], d)
    om = build_omega_table(n, 2)
    state = make_state(w, om)
    for z in (1, 4):
        state.update(z, om)
    V, _ = assemble_VW(state, d)
    assert np.allclose(V, (w.Gamma[1 : d + 1] @ state.P[:d]) ** 2, rtol=1e-13)


def test_assemble_pod_matches_brute():
    d, n = 4, 7
    w = WeightFamily.pod([1 / math.factorial(k) for k in range(5)], np.arange(1, 5, dtype=float) ** -2)
    om = build_omega_table(n, 2)
    state = make_state(w, om)
    state.update(1, om)
    V, W = assemble_VW(state, 2)
    Vb, Wb = brute_force_VW(all_subset_gammas(w), [1], 2, d, om)
    assert np.allclose(V, Vb, rtol=1e-10, atol=0) and np.allclose(W, Wb, rtol=1e-10, atol=0)


def test_assemble_state_mismatch():
    om = build_omega_table(7, 2)
    state = make_state(WeightFamily.product([1.0, 1.0]), om)
    with pytest.raises(ValueError):
        assemble_VW(state, 2)


@pytest.mark.parametrize("kind, sigma", ORACLE_FAMILIES)
def test_first_step_row_is_constant(kind, sigma, rng):
    n, d = 31, 4
    w = random_family(kind, d, rng, sigma)
    om = build_omega_table(n, 2)
    z, row, T = cbc_step(make_state(w, om), prepare_kernels(om))
    assert z == 1
    assert np.nanmax(row) - np.nanmin(row) <= 1e-9 * np.nanmax(np.abs(row))


def test_step_matches_exhaustive_search():
    n = 5
    w = WeightFamily.product([1.0, 1.0])
    scores = {z2: brute_force_Sd(n, w, 2, [1, z2]) for z2 in range(1, n)}
    best = min(scores.values())
    expected = min(z for z, v in scores.items() if v <= best * (1 + 1e-12))
    assert construct(n, 2, w, 2).z[1] == expected


@pytest.mark.parametrize("kind, sigma", ORACLE_FAMILIES)
def test_fft_rows_match_naive_rows(kind, sigma, rng):
    n, d = 37, 4
    w = random_family(kind, d, rng, sigma)
    om = build_omega_table(n, 4)
    kern = prepare_kernels(om)
    state = make_state(w, om)
    for s in range(1, d + 1):
        V, W = state.assemble(s)
        fast, slow = criterion_row(kern, V, W)[1:], naive_criterion_row(om, V, W)[1:]
        assert np.max(np.abs(fast - slow)) <= 1e-9 * np.max(np.abs(slow))
        state.update(int(np.argmin(slow)) + 1, om)


def test_update_examples():
    n = 7
    om = build_omega_table(n, 2)
    od = make_state(WeightFamily.order_dependent([1, 1, 1], 2), om)
    update_state(od, 1, om)
    assert np.allclose(od.P[1], om.omega0)
    pod = make_state(WeightFamily.pod([1, 1, 1], [0.3, 0.2]), om)
    update_state(pod, 1, om)
    assert np.allclose(pod.P[1], 0.3 * om.omega0)
    sp = make_state(WeightFamily.spod(np.ones(5), [[0.3, 0.6], [0.1, 0.2]]), om)
    update_state(sp, 1, om)
    assert np.allclose(sp.P[2], 0.6 * om.omega0) and np.allclose(sp.P[1], 0.3 * om.omega0)
    assert np.all(sp.P[0] == 1.0)


# -- construction -----------------------------------------------------------

def test_construct_d1():
    w = WeightFamily.product([0.5])
    gv = construct(11, 1, w, 2)
    assert list(gv.z) == [1] and gv.Sd == gv.T[0]


def test_construct_product_matches_brute():
    w = WeightFamily.product(2.0 ** -np.arange(1, 4))
    a = construct(7, 3, w, 2)
    b = construct(7, 3, w, 2, brute=True)
    assert np.array_equal(a.z, b.z) and a.Sd == pytest.approx(b.Sd, rel=1e-12)


def test_sigma1_spod_equals_pod(rng):
    w = random_family("spod", 4, rng, sigma=1)
    a = construct(11, 4, w, 2)
    b = construct(11, 4, equivalent_family(w), 2)
    assert np.array_equal(a.z, b.z)
    assert abs(a.Sd - b.Sd) <= 1e-12 * b.Sd


@given(st.sampled_from(ORACLE_FAMILIES), st.sampled_from([5, 7, 11, 13]), st.integers(2, 4),
       st.sampled_from([2, 4]), st.integers(0, 2**32 - 1))
def test_oracle_equivalence(fam, n, d, alpha, seed):
    kind, sigma = fam
    w = random_family(kind, d, np.random.default_rng(seed), sigma)
    a = construct(n, d, w, alpha, workers=1)
    b = construct(n, d, w, alpha, brute=True, workers=1)
    assert np.array_equal(a.z, b.z)
    assert np.max(np.abs(a.T - b.T)) <= 1e-9 * np.max(np.abs(b.T))


@pytest.mark.parametrize("choice, alpha, z, Sd", [
    ("product", 2, [1, 12, 8, 5], 0.5973280056953482),
    ("pod", 2, [1, 9, 14, 5], 2.124310639932303),
    ("spod", 4, [1, 9, 14, 5], 0.049215079280214895),
])
def test_golden_vectors(choice, alpha, z, Sd):
    # frozen from the brute-force subset-sum path
    gv = construct(31, 4, study_weights(choice, 4, alpha), alpha)
    assert list(gv.z) == z
    assert gv.Sd == pytest.approx(Sd, rel=1e-12)


@pytest.mark.parametrize("kind, sigma", ORACLE_FAMILIES)
def test_nonnegative_T_and_running_sum(kind, sigma, rng):
    w = random_family(kind, 5, rng, sigma)
    gv = construct(101, 5, w, 2)
    assert np.all(gv.T >= -1e-9 * max(1.0, gv.Sd))
    assert gv.z[0] == 1 and np.all((gv.z >= 1) & (gv.z <= 100))
    assert eval_Sd(101, 5, w, 2, gv.z) == pytest.approx(gv.Sd, rel=1e-12)


def test_threaded_assembly_is_identical(monkeypatch, rng):
    monkeypatch.setattr(cbc, "_PARALLEL_MIN_N", 1)
    for kind, sigma in ORACLE_FAMILIES:
        w = random_family(kind, 5, rng, sigma)
        a = construct(211, 5, w, 2, workers=1)
        b = construct(211, 5, w, 2, workers=3)
        assert np.array_equal(a.z, b.z) and np.allclose(a.T, b.T, rtol=1e-13)


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("LATTICE_CBC_THREADS", "3")
    assert cbc._resolve_workers(None) == 3
    assert cbc._resolve_workers(2) == 2


def test_construct_errors():
    w = WeightFamily.product([1.0, 1.0])
    with pytest.raises(ValueError):
        construct(9, 2, w, 2)
    with pytest.raises(ValueError):
        construct(7, 3, w, 2)


# -- scoring ----------------------------------------------------------------

def test_eval_sd_zero_weights():
    w = WeightFamily.product([0.0, 0.0, 0.0])
    assert eval_Sd(7, 3, w, 2, [1, 2, 3]) == 0.0


def test_eval_sd_matches_brute():
    w = WeightFamily.product([1.0, 1.0])
    assert eval_Sd(5, 2, w, 2, [1, 1]) == pytest.approx(brute_force_Sd(5, w, 2, [1, 1]), rel=1e-12)


def test_eval_sd_range_check():
    w = WeightFamily.product([1.0, 1.0])
    with pytest.raises(ValueError):
        eval_Sd(5, 2, w, 2, [1, 5])
    with pytest.raises(ValueError):
        eval_Sd(5, 2, w, 2, [1])


def test_brute_VW_product_closed_form(rng):
    d, n = 6, 11
    g = rng.uniform(0.1, 1.2, d)
    w = WeightFamily.product(g)
    om = build_omega_table(n, 2)
    z = [1, 3, 5, 2, 7, 4]
    P = np.ones(n)
    for s in range(1, d + 1):
        V, W = brute_force_VW(all_subset_gammas(w), z, s, d, om)
        tail = np.prod(1 + om.zeta_2alpha * g[s:] ** 2)
        assert np.allclose(V, g[s - 1] ** 2 * P * tail, rtol=1e-10)
        assert np.allclose(W, g[s - 1] * P * tail, rtol=1e-10)
        P *= (1 + g[s - 1] * om.omega(z[s - 1], np.arange(n))) ** 2


def test_brute_VW_vanishes_when_s_excluded():
    # gamma_u = 0 whenever u contains coordinate 2
    w = WeightFamily.product([0.5, 0.0, 0.7])
    om = build_omega_table(7, 2)
    V, W = brute_force_VW(all_subset_gammas(w), [1], 2, 3, om)
    assert np.all(V == 0) and np.all(W == 0)


def test_brute_limit():
    om = build_omega_table(5, 2)
    with pytest.raises(ValueError):
        brute_force_VW(np.ones(1 << 15), [], 1, 15, om)


def test_json_round_trip():
    w = study_weights("pod", 3, 2)
    gv = construct(31, 3, w, 2)
    doc = json.loads(gv.to_json())
    assert doc["tie_break"] == "smallest_z" and doc["z"][0] == 1
    back = generating_vector_from_dict(doc)
    assert np.array_equal(back.z, gv.z) and back.Sd == gv.Sd
    assert eval_Sd(31, 3, back.weights, 2, back.z) == pytest.approx(gv.Sd, rel=1e-12)
    assert isinstance(back, GeneratingVector)
