"""Structured fast matrix-vector products.

Two products drive the search:

* the ``(n-1) x n`` kernel matrices ``[K(k z mod n)]`` for prime ``n``, which
  become a length ``n-1`` cyclic convolution after Rader's reordering of rows
  by ``g^a`` and columns by ``g^-b`` (``g`` a primitive root), with the
  ``k = 0`` column added separately;
* upper-left blocks of Hankel matrices, applied by reversing the input and
  doing one linear convolution.

All convolutions are zero-padded to a power of two and done with real FFTs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


def is_prime(n: int) -> bool:
    """Deterministic trial division."""
    n = int(n)
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(m: int) -> list[int]:
    """Distinct prime factors of ``m`` by trial division."""
    out = []
    p = 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        out.append(m)
    return out


def primitive_root(n: int) -> int:
    """Smallest generator of the multiplicative group modulo prime ``n >= 3``."""
    if n == 2 or not is_prime(n):
        raise ValueError(f"primitive_root needs a prime n >= 3, got {n}")
    order = n - 1
    factors = prime_factors(order)
    for g in range(2, n):
        if all(pow(g, order // p, n) != 1 for p in factors):
            return g
    raise AssertionError("unreachable for prime n")


def next_pow2(m: int) -> int:
    return 1 << max(0, int(m - 1).bit_length())


def _linear_convolve(a: np.ndarray, b: np.ndarray, size: int) -> np.ndarray:
    # a is 1-D, b may carry trailing batch axes; convolution along axis 0
    nfft = next_pow2(size)
    fa = np.fft.rfft(a, nfft)
    fb = np.fft.rfft(b, nfft, axis=0)
    if fb.ndim > 1:
        fa = fa.reshape((-1,) + (1,) * (fb.ndim - 1))
    return np.fft.irfft(fa * fb, nfft, axis=0)[:size]


def cyclic_convolve(u, v) -> np.ndarray:
    """w[i] = sum_j u[j] v[(i - j) mod m] via a zero-padded power-of-two FFT."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("cyclic_convolve expects two 1-D vectors of equal length")
    m = u.size
    if m == 0:
        raise ValueError("empty input")
    full = _linear_convolve(u, v, 2 * m - 1)
    w = full[:m].copy()
    w[: m - 1] += full[m:]
    return w


@dataclass(frozen=True, eq=False)
class KernelSymbol:
    """A kernel row prepared for repeated application with one plan."""

    row0: float
    spectrum: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class CirculantPlan:
    """Rader reordering for a prime modulus.

    ``row_order[a] = g^a mod n`` and ``col_order[b] = g^-b mod n``; entry
    ``(a, b)`` of the reordered matrix is ``K(g^(a-b))``, a circulant.
    """

    n: int
    g: int
    row_order: np.ndarray = field(repr=False)
    col_order: np.ndarray = field(repr=False)
    fft_size: int

    def prepare(self, kernel_row) -> KernelSymbol:
        kernel_row = np.asarray(kernel_row, dtype=float)
        if kernel_row.shape != (self.n,):
            raise ValueError(f"kernel row must have length {self.n}")
        # c[i] = K(g^i)
        spectrum = np.fft.rfft(kernel_row[self.row_order], self.fft_size)
        return KernelSymbol(row0=float(kernel_row[0]), spectrum=spectrum)


def build_plan(n: int) -> CirculantPlan:
    if n == 2:
        # the multiplicative group is trivial
        order = np.array([1], dtype=np.int64)
        return CirculantPlan(n=2, g=1, row_order=order, col_order=order, fft_size=4)
    g = primitive_root(n)
    m = n - 1
    row = np.empty(m, dtype=np.int64)
    acc = 1
    for a in range(m):
        row[a] = acc
        acc = acc * g % n
    ginv = pow(g, n - 2, n)
    col = np.empty(m, dtype=np.int64)
    acc = 1
    for b in range(m):
        col[b] = acc
        acc = acc * ginv % n
    return CirculantPlan(n=n, g=g, row_order=row, col_order=col, fft_size=next_pow2(2 * m - 1))


def apply_kernel_matrix(plan: CirculantPlan, kernel: Union[KernelSymbol, np.ndarray], x) -> np.ndarray:
    """y[z] = sum_k K(k z mod n) x[k] for z = 1..n-1, returned as a length-n
    array indexed by z (entry 0 is unused and set to NaN)."""
    if not isinstance(kernel, KernelSymbol):
        kernel = plan.prepare(kernel)
    x = np.asarray(x, dtype=float)
    n = plan.n
    if x.shape != (n,):
        raise ValueError(f"x must have length {n}")
    m = n - 1
    u = x[plan.col_order]
    full = np.fft.irfft(kernel.spectrum * np.fft.rfft(u, plan.fft_size), plan.fft_size)
    w = full[:m].copy()
    w[: m - 1] += full[m : 2 * m - 1]
    y = np.full(n, np.nan)
    y[plan.row_order] = w + kernel.row0 * x[0]
    return y


def naive_apply_kernel_matrix(kernel_row, x) -> np.ndarray:
    """Reference O(n^2) evaluation of apply_kernel_matrix."""
    kernel_row = np.asarray(kernel_row, dtype=float)
    x = np.asarray(x, dtype=float)
    n = kernel_row.size
    k = np.arange(n)
    y = np.full(n, np.nan)
    for z in range(1, n):
        y[z] = kernel_row[(k * z) % n] @ x
    return y


def hankel_apply(c, x, out_len: int) -> np.ndarray:
    """Upper-left ``out_len x s`` block of the Hankel matrix H(c_1..c_m) times x.

    ``y[t] = sum_l c[t + l] x[l]`` (0-based), entries past the end of ``c``
    read as zero. ``x`` may be 2-D with shape ``(s, batch)``; each column is
    transformed independently.
    """
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    m = c.size
    s = x.shape[0]
    if s < 1 or s > m:
        raise ValueError(f"input length {s} must satisfy 1 <= s <= len(c) = {m}")
    if not 1 <= out_len <= m:
        raise ValueError(f"out_len {out_len} must satisfy 1 <= out_len <= {m}")
    full = _linear_convolve(c, x[::-1], m + s - 1)
    return full[s - 1 : s - 1 + out_len]


def hankel_apply_pair(c_a, c_b, x, out_len: int) -> tuple[np.ndarray, np.ndarray]:
    """hankel_apply for two sequences of equal length sharing one transform of x."""
    c_a = np.asarray(c_a, dtype=float)
    c_b = np.asarray(c_b, dtype=float)
    x = np.asarray(x, dtype=float)
    if c_a.shape != c_b.shape:
        raise ValueError("both Hankel sequences must have the same length")
    m = c_a.size
    s = x.shape[0]
    if s < 1 or s > m:
        raise ValueError(f"input length {s} must satisfy 1 <= s <= len(c) = {m}")
    if not 1 <= out_len <= m:
        raise ValueError(f"out_len {out_len} must satisfy 1 <= out_len <= {m}")
    nfft = next_pow2(m + s - 1)
    fx = np.fft.rfft(x[::-1], nfft, axis=0)
    shape = (-1,) + (1,) * (fx.ndim - 1)
    out = []
    for c in (c_a, c_b):
        full = np.fft.irfft(np.fft.rfft(c, nfft).reshape(shape) * fx, nfft, axis=0)
        out.append(full[s - 1 : s - 1 + out_len])
    return out[0], out[1]


def naive_hankel_apply(c, x, out_len: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    m = c.size
    ext = np.concatenate([c, np.zeros(out_len + x.shape[0])])
    y = np.zeros((out_len,) + x.shape[1:])
    for t in range(out_len):
        for ell in range(x.shape[0]):
            y[t] += ext[t + ell] * x[ell]
    return y
