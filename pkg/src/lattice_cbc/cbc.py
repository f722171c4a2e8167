"""Fast component-by-component construction of rank-1 lattice generating vectors.

Each step s minimizes

    T_{d,s}(z) = (1/n) sum_k psi(z, k) V_{d,s}(k) + (2/n) sum_k omega(z, k) W_{d,s}(k)

over z in {1..n-1}; the two sums are applied to all candidates at once
through the Rader-reordered kernel matrices. ``V`` and ``W`` are assembled
from per-family state that is updated after every step:

* product:         one n-vector P_{s-1}(k)
* order dependent: rows P_{s-1,l}(k), Hankel products with Gamma, diagonal
                   binom(d-s, m) [2 zeta(2 alpha)]^m
* POD:             as order dependent with gamma_j factors and the C table
* SPOD:            rows P_{s-1,l}(k), l <= (s-1) sigma, Hankel products with
                   Gamma* and Gamma, full quadratic forms with G_{d,s}

The brute-force path evaluates V and W by summing gamma_u over subsets and
is the reference every fast path is tested against.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernel import OmegaTable, build_omega_table
from .linalg_fast import CirculantPlan, apply_kernel_matrix, build_plan, hankel_apply_pair
from .weights import (
    WeightFamily,
    WeightKind,
    all_subset_gammas,
    weight_to_spec,
)

# Candidates within TIE_EPS_FACTOR * eps * B (B the Cauchy-Schwarz bound on
# the two inner products, which also bounds the FFT round-off) or TIE_RTOL
# relative of the row minimum count as tied; the smallest z wins. Measured
# FFT errors stay below 1.1 eps B for n <= 8009.
TIE_EPS_FACTOR = 8.0
TIE_RTOL = 1e-12
BRUTE_MAX_DIM = 14
_PARALLEL_MIN_N = 8192


@dataclass
class GeneratingVector:
    n: int
    d: int
    alpha: int
    z: np.ndarray
    T: np.ndarray
    Sd: float
    weights: Optional[WeightFamily] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "d": int(self.d),
            "alpha": int(self.alpha),
            "weights": weight_to_spec(self.weights) if self.weights is not None else None,
            "z": [int(v) for v in self.z],
            "T": [float(v) for v in self.T],
            "Sd": float(self.Sd),
            "tie_break": "smallest_z",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _suffix_products(factors: np.ndarray) -> np.ndarray:
    """out[s] = prod_{j > s} factors[j-1] for s = 0..d (1-based j)."""
    d = factors.size
    out = np.ones(d + 1)
    for s in range(d - 1, -1, -1):
        out[s] = out[s + 1] * factors[s]
    return out


def precompute_pod_C(w: WeightFamily, d: int, zeta2a: float) -> np.ndarray:
    """Triangular table C[s, m] = e_m(2 zeta(2 alpha) gamma_j^2 : j = s+1..d).

    Row ``s`` (1..d) holds ``m = 0..d-s``; everything else is zero. For
    order dependent weights (gamma_j = 1) this is binom(d-s, m) [2 zeta]^m.
    """
    g = w.coordinate_gamma()[:d]
    C = np.zeros((d + 1, d + 1))
    C[d, 0] = 1.0
    for s in range(d - 1, 0, -1):
        f = zeta2a * g[s] ** 2  # gamma_{s+1}
        C[s, 0] = 1.0
        C[s, 1 : d - s + 1] = C[s + 1, 1 : d - s + 1] + f * C[s + 1, 0 : d - s]
    return C


def precompute_spod_G(w: WeightFamily, d: int, sigma: int, zeta2a: float) -> list:
    """Matrices G_{d,s} of order (d-s) sigma + 1 for s = 1..d (index 0 unused)."""
    if w.Gamma.size < d * sigma + 1:
        raise ValueError("Gamma sequence too short for SPOD precomputation")
    G: list = [None] * (d + 1)
    G[d] = np.ones((1, 1))
    for s in range(d - 1, 0, -1):
        prev = G[s + 1]
        r_prev = prev.shape[0]
        r = (d - s) * sigma + 1
        cur = np.zeros((r, r))
        cur[:r_prev, :r_prev] = prev
        gam = w.gamma_nu[s]  # coordinate s + 1
        for nu in range(1, sigma + 1):
            for nup in range(1, sigma + 1):
                cur[nu : nu + r_prev, nup : nup + r_prev] += zeta2a * gam[nu - 1] * gam[nup - 1] * prev
        if not np.allclose(cur, cur.T, rtol=1e-13, atol=0.0):
            raise AssertionError("G matrix lost symmetry")
        G[s] = cur
    return G


def _column_map(fn, P: np.ndarray, workers: int):
    """Apply ``fn`` to column blocks of P and concatenate the (V, W) pieces."""
    n = P.shape[1]
    if workers <= 1 or n < _PARALLEL_MIN_N:
        return fn(P)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    blocks = [P[:, a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, blocks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


class CbcState:
    """Per-family search state; ``s`` counts the components already chosen."""

    kind: WeightKind

    def __init__(self, w: WeightFamily, omega: OmegaTable, workers: int = 1):
        self.w = w
        self.d = w.d
        self.n = omega.n
        self.zeta2a = omega.zeta_2alpha
        self.workers = workers
        self.s = 0
        self.z_chosen: list[int] = []
        self.T_history: list[float] = []

    def assemble(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def update(self, z_s: int, omega: OmegaTable) -> None:
        raise NotImplementedError

    def _omega_col(self, z_s: int, omega: OmegaTable) -> np.ndarray:
        return omega.omega(z_s, np.arange(self.n))


class ProductState(CbcState):
    kind = WeightKind.PRODUCT

    def __init__(self, w, omega, workers=1):
        super().__init__(w, omega, workers)
        self.gamma = np.array(w.gamma)
        self.P = np.ones(self.n)
        self.tail = _suffix_products(1.0 + self.zeta2a * self.gamma ** 2)

    def assemble(self, s):
        g = self.gamma[s - 1]
        base = self.P * self.tail[s]
        return g * g * base, g * base

    def update(self, z_s, omega):
        g = self.gamma[self.s]
        self.P *= (1.0 + g * self._omega_col(z_s, omega)) ** 2
        if np.any(self.P < 0):
            raise AssertionError("product state went negative")
        self.s += 1
        self.z_chosen.append(int(z_s))


class HankelState(CbcState):
    """Order dependent, finite order and POD weights."""

    def __init__(self, w, omega, workers=1):
        super().__init__(w, omega, workers)
        self.kind = w.kind
        d = self.d
        # rows of P that can ever meet a nonzero Gamma
        self.cap = min(d, w.q) if w.kind is WeightKind.FINITE_ORDER else d
        self.Gamma = w.Gamma_upto(d)
        self.g = w.coordinate_gamma()
        self.P = np.zeros((self.cap + 1, self.n))
        self.P[0] = 1.0
        self.D = precompute_pod_C(w, d, self.zeta2a)

    def assemble(self, s):
        d = self.d
        L = min(s - 1, self.cap)
        out_len = d - s + 1
        if self.kind is WeightKind.FINITE_ORDER:
            out_len = min(out_len, self.w.q)
        c1 = self.Gamma[1 : out_len + L + 1]
        c0 = self.Gamma[0 : out_len + L]
        diag = self.D[s, :out_len][:, None]
        g = self.g[s - 1]

        def block(P):
            p = P[: L + 1]
            h1, h0 = hankel_apply_pair(c1, c0, p, out_len)
            dh1 = diag * h1
            return g * g * np.sum(dh1 * h1, axis=0), g * np.sum(dh1 * h0, axis=0)

        return _column_map(block, self.P, self.workers)

    def update(self, z_s, omega):
        s = self.s + 1
        coef = self.g[s - 1] * self._omega_col(z_s, omega)
        for ell in range(min(s, self.cap), 0, -1):
            self.P[ell] += coef * self.P[ell - 1]
        self.s = s
        self.z_chosen.append(int(z_s))


class SpodState(CbcState):
    kind = WeightKind.SPOD

    def __init__(self, w, omega, workers=1):
        super().__init__(w, omega, workers)
        self.sigma = w.sigma
        d, sigma = self.d, self.sigma
        self.Gamma = np.array(w.Gamma[: d * sigma + 1])
        self.P = np.zeros((d * sigma + 1, self.n))
        self.P[0] = 1.0
        self.G = precompute_spod_G(w, d, sigma, self.zeta2a)

    def gamma_star(self, s: int) -> np.ndarray:
        """Gamma*_i = sum_nu gamma_{s,nu} Gamma_{i+nu} for i = 0..(d-1) sigma."""
        d, sigma = self.d, self.sigma
        length = (d - 1) * sigma + 1
        out = np.zeros(length)
        for nu in range(1, sigma + 1):
            out += self.w.gamma_nu[s - 1, nu - 1] * self.Gamma[nu : nu + length]
        return out

    def assemble(self, s):
        d, sigma = self.d, self.sigma
        L = (s - 1) * sigma
        r = (d - s) * sigma + 1
        c_star = self.gamma_star(s)
        c0 = self.Gamma[: (d - 1) * sigma + 1]
        G = self.G[s]

        def block(P):
            p = P[: L + 1]
            A, B = hankel_apply_pair(c_star, c0, p, r)
            GA = G @ A
            return np.sum(A * GA, axis=0), np.sum(GA * B, axis=0)

        return _column_map(block, self.P, self.workers)

    def update(self, z_s, omega):
        s = self.s + 1
        sigma = self.sigma
        om = self._omega_col(z_s, omega)
        gam = self.w.gamma_nu[s - 1]
        for ell in range(s * sigma, 0, -1):
            acc = np.zeros(self.n)
            for nu in range(1, min(sigma, ell) + 1):
                acc += gam[nu - 1] * self.P[ell - nu]
            self.P[ell] += om * acc
        self.s = s
        self.z_chosen.append(int(z_s))


class BruteForceState(CbcState):
    """Reference state: V and W by direct subset sums over a 2^d gamma table."""

    kind = None

    def __init__(self, w, omega, workers=1, gamma_table=None):
        super().__init__(w, omega, workers)
        if self.d > BRUTE_MAX_DIM:
            raise ValueError(f"brute force limited to d <= {BRUTE_MAX_DIM}")
        self.table = all_subset_gammas(w) if gamma_table is None else np.asarray(gamma_table)
        self.omega_tab = omega

    def assemble(self, s):
        return brute_force_VW(self.table, self.z_chosen, s, self.d, self.omega_tab)

    def update(self, z_s, omega):
        self.s += 1
        self.z_chosen.append(int(z_s))


def brute_force_VW(gamma_table, z_prefix, s: int, d: int, omega: OmegaTable):
    """V_{d,s}(k), W_{d,s}(k) by explicit sums over w in {s+1..d}, u in {1..s-1}.

    ``gamma_table[mask]`` is gamma_u for the subset encoded by ``mask``.
    """
    if d > BRUTE_MAX_DIM:
        raise ValueError(f"brute force limited to d <= {BRUTE_MAX_DIM}")
    n = omega.n
    k = np.arange(n)
    om = [omega.omega(z, k) for z in z_prefix[: s - 1]]
    # products over u in {1..s-1}, indexed by mask of the first s-1 bits
    prods = np.ones((1 << (s - 1), n))
    for mask in range(1, 1 << (s - 1)):
        j = mask.bit_length() - 1
        prods[mask] = prods[mask ^ (1 << j)] * om[j]
    bit_s = 1 << (s - 1)
    V = np.zeros(n)
    W = np.zeros(n)
    rest = d - s
    for wmask in range(1 << rest):
        wbits = wmask << s
        card = bin(wmask).count("1")
        a = np.zeros(n)
        b = np.zeros(n)
        for umask in range(1 << (s - 1)):
            a += gamma_table[umask | bit_s | wbits] * prods[umask]
            b += gamma_table[umask | wbits] * prods[umask]
        factor = omega.zeta_2alpha ** card
        V += factor * a * a
        W += factor * a * b
    return V, W


def make_state(w: WeightFamily, omega: OmegaTable, workers: int = 1, brute: bool = False) -> CbcState:
    if brute:
        return BruteForceState(w, omega, workers)
    if w.kind is WeightKind.PRODUCT:
        return ProductState(w, omega, workers)
    if w.kind is WeightKind.SPOD:
        return SpodState(w, omega, workers)
    return HankelState(w, omega, workers)


def assemble_VW(state: CbcState, s: int) -> tuple[np.ndarray, np.ndarray]:
    if state.s != s - 1:
        raise ValueError(f"state is at step {state.s}, cannot assemble step {s}")
    return state.assemble(s)


def update_state(state: CbcState, z_s: int, omega: OmegaTable) -> CbcState:
    state.update(z_s, omega)
    return state


@dataclass(frozen=True, eq=False)
class SearchKernels:
    """Kernel rows and their Rader symbols for one (n, alpha)."""

    omega: OmegaTable
    plan: CirculantPlan
    omega_sym: object
    psi_sym: object
    psi_row: np.ndarray
    omega_norm: float
    psi_norm: float


def prepare_kernels(omega: OmegaTable, plan: Optional[CirculantPlan] = None) -> SearchKernels:
    plan = plan or build_plan(omega.n)
    psi_row = omega.psi0(exact=True)
    return SearchKernels(
        omega=omega,
        plan=plan,
        omega_sym=plan.prepare(omega.omega0),
        psi_sym=plan.prepare(psi_row),
        psi_row=psi_row,
        omega_norm=float(np.linalg.norm(omega.omega0)),
        psi_norm=float(np.linalg.norm(psi_row)),
    )


def criterion_row(kern: SearchKernels, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """T(z) for every z = 1..n-1 (entry 0 is NaN)."""
    n = kern.omega.n
    return (apply_kernel_matrix(kern.plan, kern.psi_sym, V) / n
            + 2.0 / n * apply_kernel_matrix(kern.plan, kern.omega_sym, W))


def naive_criterion_row(omega: OmegaTable, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """T(z) for every z by the O(n^2) double loop."""
    n = omega.n
    k = np.arange(n)
    psi = omega.psi0(exact=True)
    row = np.full(n, np.nan)
    for z in range(1, n):
        idx = (k * z) % n
        row[z] = (psi[idx] @ V) / n + 2.0 / n * (omega.omega0[idx] @ W)
    return row


def criterion_at(omega: OmegaTable, z: int, V: np.ndarray, W: np.ndarray) -> float:
    """T at a single candidate z, summed with compensated (fsum) accumulation."""
    n = omega.n
    idx = (np.arange(n) * z) % n
    psi = omega.omega0[idx] ** 2 - omega.zeta_2alpha
    terms = np.concatenate([psi * V, 2.0 * omega.omega0[idx] * W])
    return math.fsum(terms) / n


def select_candidate(row: np.ndarray, scale: float) -> int:
    """Smallest z whose criterion is within the tie tolerance of the minimum."""
    vals = row[1:]
    best = float(np.min(vals))
    tol = TIE_EPS_FACTOR * np.finfo(float).eps * scale + TIE_RTOL * abs(best)
    return int(np.flatnonzero(vals <= best + tol)[0]) + 1


def term_scale(kern: SearchKernels, V: np.ndarray, W: np.ndarray) -> float:
    """Cauchy-Schwarz bound on |T(z)| from the two inner products."""
    n = kern.omega.n
    return (kern.psi_norm * float(np.linalg.norm(V)) + 2.0 * kern.omega_norm * float(np.linalg.norm(W))) / n


def cbc_step(state: CbcState, kern: SearchKernels, naive: bool = False) -> tuple[int, np.ndarray, float]:
    """One search step: returns (z_s, criterion row, T at z_s)."""
    s = state.s + 1
    V, W = state.assemble(s)
    if naive:
        row = naive_criterion_row(kern.omega, V, W)
    else:
        row = criterion_row(kern, V, W)
    if s == 1:
        z_s = 1
    else:
        z_s = select_candidate(row, term_scale(kern, V, W))
    return z_s, row, criterion_at(kern.omega, z_s, V, W)


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("LATTICE_CBC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def construct(
    n: int,
    d: int,
    w: WeightFamily,
    alpha: int,
    *,
    brute: bool = False,
    workers: Optional[int] = None,
    keep_rows: bool = False,
    omega: Optional[OmegaTable] = None,
):
    """Build a generating vector of length ``d`` for ``n`` (prime) points.

    ``brute=True`` switches to the subset-sum reference for V and W and the
    O(n^2) criterion row. With ``keep_rows`` the per-step criterion rows are
    returned as a second value.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if d > w.d:
        raise ValueError(f"weights defined for d = {w.d} only, requested d = {d}")
    if d < w.d:
        raise ValueError("the weight family dimension must equal the target dimension d")
    omega = omega or build_omega_table(n, alpha)
    if omega.n != n or omega.alpha != alpha:
        raise ValueError("omega table does not match (n, alpha)")
    kern = prepare_kernels(omega)
    state = make_state(w, omega, _resolve_workers(workers), brute=brute)
    rows = []
    for _ in range(d):
        z_s, row, T_s = cbc_step(state, kern, naive=brute)
        state.T_history.append(T_s)
        state.update(z_s, omega)
        if keep_rows:
            rows.append(row)
    Sd = 0.0
    for t in state.T_history:
        Sd += t
    gv = GeneratingVector(
        n=n, d=d, alpha=alpha,
        z=np.array(state.z_chosen, dtype=np.int64),
        T=np.array(state.T_history),
        Sd=Sd,
        weights=w,
    )
    return (gv, rows) if keep_rows else gv


def eval_Sd(n: int, d: int, w: WeightFamily, alpha: int, z, *, brute: bool = False, per_step: bool = False):
    """S_d(z) for a given generating vector, summed step by step."""
    z = [int(v) for v in z]
    if len(z) != d:
        raise ValueError(f"z must have {d} components")
    if any(not 1 <= v <= n - 1 for v in z):
        raise ValueError("components of z must lie in 1..n-1")
    omega = build_omega_table(n, alpha)
    state = make_state(w, omega, 1, brute=brute)
    T = []
    for s in range(1, d + 1):
        V, W = state.assemble(s)
        T.append(criterion_at(omega, z[s - 1], V, W))
        state.update(z[s - 1], omega)
    total = 0.0
    for t in T:
        total += t
    return (total, np.array(T)) if per_step else total


def brute_force_Sd(n: int, w: WeightFamily, alpha: int, z) -> float:
    """S_d(z) with V, W from explicit subset sums."""
    return eval_Sd(n, len(z), w, alpha, z, brute=True)


def generating_vector_from_dict(doc: dict) -> GeneratingVector:
    from .weights import parse_weight_spec

    w = parse_weight_spec(doc["weights"]) if doc.get("weights") else None
    return GeneratingVector(
        n=int(doc["n"]), d=int(doc["d"]), alpha=int(doc["alpha"]),
        z=np.array(doc["z"], dtype=np.int64), T=np.array(doc.get("T", []), dtype=float),
        Sd=float(doc.get("Sd", float("nan"))), weights=w,
    )
