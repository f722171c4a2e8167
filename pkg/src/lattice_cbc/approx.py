"""Lattice-based trigonometric approximation.

The approximant keeps the frequencies of ``A_d(M) = {h : r(h) <= M}`` with

    r(h) = prod_{j in supp(h)} |h_j|^alpha / gamma_{supp(h)}

and takes their coefficients from lattice samples. The coefficient of ``h``
depends on the lattice only through ``h . z mod n``, so one length-n DFT of
the samples serves every frequency.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .weights import MAX_ENUM_DIM, WeightFamily, WeightKind, all_subset_gammas

DEFAULT_CAP = 10_000_000
# pruning is relaxed by this factor so rounding never drops a member
_PRUNE_SLACK = 1.0 + 1e-12


@dataclass
class IndexSet:
    d: int
    M: float
    alpha: int
    frequencies: np.ndarray = field(repr=False)  # (N, d) int64
    r_values: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.frequencies.shape[0])

    def as_set(self) -> set:
        return {tuple(int(v) for v in h) for h in self.frequencies}


class _SupportWeights:
    """gamma_u and superset maxima gamma_sup(u) looked up by bitmask."""

    def __init__(self, w: WeightFamily):
        self.w = w
        self.d = w.d
        if w.kind is WeightKind.PRODUCT:
            self.table = None
            self.gamma = [float(g) for g in w.gamma]
            self.cap = [max(1.0, g) for g in self.gamma]
            self.base = math.prod(self.cap)
        else:
            if self.d > MAX_ENUM_DIM:
                raise ValueError(
                    f"index sets for {w.kind.value} weights need subset tables, limited to d <= {MAX_ENUM_DIM}")
            self.table = all_subset_gammas(w)
            sup = self.table.copy()
            masks = np.arange(sup.size)
            for j in range(self.d):
                lacking = masks[(masks >> j) & 1 == 0]
                sup[lacking] = np.maximum(sup[lacking], sup[lacking | (1 << j)])
            self.sup = sup

    def gamma_of(self, mask: int) -> float:
        if self.table is not None:
            return float(self.table[mask])
        out = 1.0
        for j in range(self.d):
            if mask >> j & 1:
                out *= self.gamma[j]
        return out

    def sup_of(self, mask: int) -> float:
        if self.table is not None:
            return float(self.sup[mask])
        out = self.base
        for j in range(self.d):
            if mask >> j & 1:
                out = out / self.cap[j] * self.gamma[j]
        return out


def _r_from(abs_h, alpha: int, gamma_u: float) -> float:
    prod = 1.0
    for v in abs_h:
        if v:
            prod *= float(v) ** alpha
    return prod / gamma_u if gamma_u > 0 else math.inf


def r_of(w: WeightFamily, h, alpha: int) -> float:
    """Decay weight r(h); +inf when gamma of the support vanishes."""
    h = [abs(int(v)) for v in h]
    if len(h) != w.d:
        raise ValueError(f"h must have {w.d} components")
    supp = [j + 1 for j, v in enumerate(h) if v]
    return _r_from(h, alpha, w.gamma_subset(supp))


def _sign_expand(abs_rows: list, r_vals: list, d: int):
    freqs = []
    rs = []
    for row, r in zip(abs_rows, r_vals):
        nz = [j for j in range(d) if row[j]]
        for signs in range(1 << len(nz)):
            h = list(row)
            for b, j in enumerate(nz):
                if signs >> b & 1:
                    h[j] = -h[j]
            freqs.append(h)
            rs.append(r)
    arr = np.array(freqs, dtype=np.int64).reshape(-1, d)
    return arr, np.array(rs, dtype=float)


def _finish(abs_rows, r_vals, d, M, alpha, cap) -> IndexSet:
    total = sum(1 << sum(1 for v in row if v) for row in abs_rows)
    if total > cap:
        raise ValueError(f"index set has {total} elements, above the cap {cap}")
    freqs, rs = _sign_expand(abs_rows, r_vals, d)
    if freqs.shape[0]:
        order = np.lexsort(freqs.T[::-1])
        freqs, rs = freqs[order], rs[order]
    return IndexSet(d=d, M=float(M), alpha=alpha, frequencies=freqs, r_values=rs)


def build_index_set(w: WeightFamily, M: float, alpha: int, cap: int = DEFAULT_CAP) -> IndexSet:
    """Enumerate A_d(M) by depth-first search over coordinates.

    Partial vectors are pruned with ``prod |h_j|^alpha > M gamma_sup(u)``,
    where ``u`` is the support so far and gamma_sup the largest weight of any
    superset; signs are expanded at the end.
    """
    d = w.d
    sw = _SupportWeights(w)
    abs_rows: list = []
    r_vals: list = []
    if not M > 0:
        return _finish(abs_rows, r_vals, d, M, alpha, cap)
    h = [0] * d
    limit = M * _PRUNE_SLACK

    def visit(j: int, mask: int, prod: float):
        if len(abs_rows) > cap:
            raise ValueError(f"index set exceeds the cap {cap}")
        if j == d:
            r = _r_from(h, alpha, sw.gamma_of(mask))
            if r <= M:
                abs_rows.append(tuple(h))
                r_vals.append(r)
            return
        h[j] = 0
        visit(j + 1, mask, prod)
        new_mask = mask | (1 << j)
        bound = limit * sw.sup_of(new_mask)
        v = 1
        while True:
            p = prod * float(v) ** alpha
            if p > bound:
                break
            h[j] = v
            visit(j + 1, new_mask, p)
            v += 1
        h[j] = 0

    visit(0, 0, 1.0)
    return _finish(abs_rows, r_vals, d, M, alpha, cap)


def brute_index_set(w: WeightFamily, M: float, alpha: int) -> IndexSet:
    """Reference enumeration: scan the box [-H, H]^d, H = ceil((M max gamma_u)^(1/alpha))."""
    d = w.d
    sw = _SupportWeights(w)
    gmax = float(np.max(all_subset_gammas(w)))
    H = int(math.ceil((max(M, 0.0) * gmax) ** (1.0 / alpha))) if M > 0 else 0
    rows = []
    rs = []
    for h in np.ndindex(*([H + 1] * d)):
        mask = sum(1 << j for j in range(d) if h[j])
        r = _r_from(h, alpha, sw.gamma_of(mask))
        if r <= M:
            rows.append(tuple(int(v) for v in h))
            rs.append(r)
    return _finish(rows, rs, d, M, alpha, DEFAULT_CAP)


def lattice_points(n: int, z) -> np.ndarray:
    """The n points {k z / n} as an (n, d) array."""
    z = np.asarray(z, dtype=np.int64)
    k = np.arange(n, dtype=np.int64)[:, None]
    return ((k * z[None, :]) % n) / n


def lattice_coefficients(samples, A: IndexSet, z, n: Optional[int] = None) -> np.ndarray:
    """Coefficients F[(h . z) mod n] / n aligned with ``A.frequencies``."""
    samples = np.asarray(samples)
    n = samples.shape[0] if n is None else n
    if samples.shape[0] != n:
        raise ValueError("one sample per lattice point is required")
    z = np.asarray(getattr(z, "z", z), dtype=np.int64)
    if z.size != A.d:
        raise ValueError("generating vector and index set dimensions differ")
    F = np.fft.fft(samples)
    idx = (A.frequencies @ (z % n)) % n if len(A) else np.zeros(0, dtype=np.int64)
    return F[idx] / n


def direct_coefficients(samples, A: IndexSet, z, n: Optional[int] = None) -> np.ndarray:
    """Reference O(n |A|) evaluation of the lattice coefficients."""
    samples = np.asarray(samples)
    n = samples.shape[0] if n is None else n
    z = np.asarray(getattr(z, "z", z), dtype=np.int64)
    k = np.arange(n)
    out = np.empty(len(A), dtype=complex)
    for i, h in enumerate(A.frequencies):
        phase = (k * int(h @ z)) % n
        out[i] = np.sum(samples * np.exp(-2j * np.pi * phase / n)) / n
    return out


def evaluate_approximant(coeffs, A: IndexSet, x) -> np.ndarray:
    """Real part of sum_h coeff_h exp(2 pi i h . x) at one point or an (m, d) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != A.d:
        raise ValueError(f"points must have {A.d} coordinates")
    if len(A) == 0:
        vals = np.zeros(X.shape[0])
    else:
        phases = np.exp(2j * np.pi * (X @ A.frequencies.T.astype(float)))
        vals = (phases @ np.asarray(coeffs, dtype=complex)).real
    return float(vals[0]) if single else vals


@dataclass
class Approximant:
    """Callable wrapper around an index set and its coefficients."""

    A: IndexSet
    coeffs: np.ndarray = field(repr=False)

    def __call__(self, x):
        return evaluate_approximant(self.coeffs, self.A, x)


def approximate(f: Callable, A: IndexSet, n: int, z) -> Approximant:
    """Sample ``f`` on the lattice and return the truncated Fourier approximant."""
    pts = lattice_points(n, np.asarray(getattr(z, "z", z)))
    samples = np.asarray(f(pts))
    return Approximant(A=A, coeffs=lattice_coefficients(samples, A, z, n))


def l2_error_estimate(f: Callable, approximant: Callable, num_samples: int, seed: int) -> float:
    """Monte Carlo root-mean-square of f - approximant over uniform points."""
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    d = approximant.A.d if isinstance(approximant, Approximant) else None
    if d is None:
        raise TypeError("approximant must be an Approximant")
    rng = np.random.default_rng(seed)
    X = rng.random((num_samples, d))
    diff = np.asarray(f(X), dtype=float) - approximant(X)
    return float(np.sqrt(np.mean(diff ** 2)))


def index_set_to_csv(A: IndexSet) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"h_{j + 1}" for j in range(A.d)] + ["r_value"])
    for h, r in zip(A.frequencies, A.r_values):
        wr.writerow([int(v) for v in h] + [format(float(r), ".17g")])
    return buf.getvalue()


def coefficients_to_csv(A: IndexSet, coeffs) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"h_{j + 1}" for j in range(A.d)] + ["re", "im"])
    for h, c in zip(A.frequencies, coeffs):
        wr.writerow([int(v) for v in h] + [format(float(c.real), ".17g"), format(float(c.imag), ".17g")])
    return buf.getvalue()
