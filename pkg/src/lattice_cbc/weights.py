"""Weight families gamma_u for the weighted Korobov space.

Coordinates are 1-based throughout (``u`` is a subset of ``{1, ..., d}``);
where subsets are enumerated, bit ``j - 1`` of an integer mask marks
coordinate ``j``.

Supported families::

    product           gamma_u = prod_{j in u} gamma_j
    order_dependent   gamma_u = Gamma_{|u|}
    finite_order      order dependent with Gamma_l = 0 for l > q
    pod               gamma_u = Gamma_{|u|} prod_{j in u} gamma_j
    spod              gamma_u = sum_{nu in {1..sigma}^|u|} Gamma_{|nu|} prod_{j in u} gamma_{j, nu_j}
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

MAX_ENUM_DIM = 20


class WeightKind(str, enum.Enum):
    PRODUCT = "product"
    ORDER_DEPENDENT = "order_dependent"
    FINITE_ORDER = "finite_order"
    POD = "pod"
    SPOD = "spod"


class WeightSpecError(ValueError):
    """Malformed weight specification document."""


def _as_param(values, name: str, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightFamily:
    """Immutable description of a structured weight sequence.

    Build instances with the classmethod constructors rather than directly.
    """

    kind: WeightKind
    d: int
    gamma: Optional[np.ndarray] = field(default=None, repr=False)
    Gamma: Optional[np.ndarray] = field(default=None, repr=False)
    q: Optional[int] = None
    sigma: Optional[int] = None
    gamma_nu: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        d = self.d
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ValueError("d must be a positive integer")
        kind = self.kind
        if kind in (WeightKind.PRODUCT, WeightKind.POD):
            if self.gamma is None or self.gamma.shape != (d,):
                raise ValueError(f"{kind.value} weights need gamma_j of length d = {d}")
        if kind is not WeightKind.PRODUCT:
            if self.Gamma is None or self.Gamma.size == 0:
                raise ValueError(f"{kind.value} weights need a Gamma sequence")
            if self.Gamma[0] != 1.0:
                raise ValueError("Gamma_0 must equal 1")
        if kind in (WeightKind.ORDER_DEPENDENT, WeightKind.POD) and self.Gamma.size < d + 1:
            raise ValueError(f"Gamma must have at least d + 1 = {d + 1} entries")
        if kind is WeightKind.FINITE_ORDER:
            if self.q is None or self.q < 1:
                raise ValueError("finite order weights need q >= 1")
            if self.Gamma.size != self.q + 1:
                raise ValueError("finite order Gamma must list Gamma_0..Gamma_q")
        if kind is WeightKind.SPOD:
            if self.sigma is None or self.sigma < 1:
                raise ValueError("SPOD weights need sigma >= 1")
            if self.gamma_nu is None or self.gamma_nu.shape != (d, self.sigma):
                raise ValueError(f"gamma_nu must have shape (d, sigma) = ({d}, {self.sigma})")
            if self.Gamma.size < d * self.sigma + 1:
                raise ValueError(f"Gamma must have at least d*sigma + 1 = {d * self.sigma + 1} entries")

    # -- constructors -----------------------------------------------------
    @classmethod
    def product(cls, gamma) -> "WeightFamily":
        g = _as_param(gamma, "gamma")
        return cls(WeightKind.PRODUCT, d=g.size, gamma=g)

    @classmethod
    def order_dependent(cls, Gamma, d: int) -> "WeightFamily":
        return cls(WeightKind.ORDER_DEPENDENT, d=d, Gamma=_as_param(Gamma, "Gamma"))

    @classmethod
    def finite_order(cls, Gamma, q: int, d: int) -> "WeightFamily":
        G = np.array(Gamma, dtype=float)
        if G.size > q + 1:
            if np.any(G[q + 1 :] != 0):
                raise ValueError("finite order weights must have Gamma_l = 0 for l > q")
            G = G[: q + 1]
        return cls(WeightKind.FINITE_ORDER, d=d, Gamma=_as_param(G, "Gamma"), q=int(q))

    @classmethod
    def pod(cls, Gamma, gamma) -> "WeightFamily":
        g = _as_param(gamma, "gamma")
        return cls(WeightKind.POD, d=g.size, gamma=g, Gamma=_as_param(Gamma, "Gamma"))

    @classmethod
    def spod(cls, Gamma, gamma_nu) -> "WeightFamily":
        gn = _as_param(gamma_nu, "gamma_nu", ndim=2)
        return cls(WeightKind.SPOD, d=gn.shape[0], Gamma=_as_param(Gamma, "Gamma"),
                   sigma=gn.shape[1], gamma_nu=gn)

    # -- accessors --------------------------------------------------------
    def Gamma_upto(self, L: int) -> np.ndarray:
        """Gamma_0..Gamma_L; finite order weights are zero-extended past q."""
        if self.kind is WeightKind.PRODUCT:
            raise ValueError("product weights have no order-dependent part")
        if L < self.Gamma.size:
            return np.array(self.Gamma[: L + 1])
        if self.kind is WeightKind.FINITE_ORDER:
            return np.concatenate([self.Gamma, np.zeros(L + 1 - self.Gamma.size)])
        raise IndexError(f"Gamma_{L} requested but only {self.Gamma.size} entries stored")

    def coordinate_gamma(self) -> np.ndarray:
        """Per-coordinate factors gamma_j (ones for pure order dependent weights)."""
        if self.kind in (WeightKind.PRODUCT, WeightKind.POD):
            return np.array(self.gamma)
        if self.kind is WeightKind.SPOD:
            raise ValueError("SPOD weights have no single per-coordinate factor")
        return np.ones(self.d)

    def gamma_subset(self, u: Iterable[int]) -> float:
        return gamma_subset(self, u)

    def describe(self) -> str:
        extra = ""
        if self.kind is WeightKind.FINITE_ORDER:
            extra = f", q={self.q}"
        elif self.kind is WeightKind.SPOD:
            extra = f", sigma={self.sigma}"
        return f"{self.kind.value}(d={self.d}{extra})"


def _spod_degree_poly(w: WeightFamily, coords) -> np.ndarray:
    """Coefficients Q_t = sum over nu in {1..sigma}^|u| with |nu| = t of prod gamma_{j,nu_j}."""
    poly = np.ones(1)
    for j in coords:
        step = np.concatenate([[0.0], w.gamma_nu[j - 1]])
        poly = np.convolve(poly, step)
    return poly


def gamma_subset(w: WeightFamily, u: Iterable[int]) -> float:
    """The weight gamma_u for a subset ``u`` of ``{1, ..., d}``."""
    coords = sorted(set(int(j) for j in u))
    if coords and (coords[0] < 1 or coords[-1] > w.d):
        raise IndexError(f"subset {coords} not contained in {{1..{w.d}}}")
    size = len(coords)
    kind = w.kind
    if kind is WeightKind.PRODUCT:
        return float(np.prod(w.gamma[[j - 1 for j in coords]])) if coords else 1.0
    if kind in (WeightKind.ORDER_DEPENDENT, WeightKind.FINITE_ORDER):
        return float(w.Gamma_upto(size)[size])
    if kind is WeightKind.POD:
        prod = float(np.prod(w.gamma[[j - 1 for j in coords]])) if coords else 1.0
        return float(w.Gamma[size]) * prod
    poly = _spod_degree_poly(w, coords)
    return float(poly @ w.Gamma[: poly.size])


def all_subset_gammas(w: WeightFamily) -> np.ndarray:
    """gamma_u for every mask in ``range(2**d)``; ``d <= 20``."""
    d = w.d
    if d > MAX_ENUM_DIM:
        raise ValueError(f"subset enumeration limited to d <= {MAX_ENUM_DIM}")
    masks = np.arange(1 << d, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(d)) & 1
    card = bits.sum(axis=1)
    kind = w.kind
    if kind in (WeightKind.ORDER_DEPENDENT, WeightKind.FINITE_ORDER):
        return w.Gamma_upto(d)[card]
    if kind in (WeightKind.PRODUCT, WeightKind.POD):
        prod = np.where(bits == 1, w.gamma[None, :], 1.0).prod(axis=1)
        return prod if kind is WeightKind.PRODUCT else w.Gamma[card] * prod
    # SPOD: split coordinates in halves and combine the degree polynomials
    sigma = w.sigma
    lo_d = d // 2
    hi_d = d - lo_d

    def polys(offset, count):
        out = np.zeros((1 << count, count * sigma + 1))
        out[0, 0] = 1.0
        for mask in range(1, 1 << count):
            j = mask.bit_length() - 1
            prev = out[mask ^ (1 << j)]
            step = np.concatenate([[0.0], w.gamma_nu[offset + j]])
            out[mask] = np.convolve(prev, step)[: out.shape[1]]
        return out

    q_lo = polys(0, lo_d)
    q_hi = polys(lo_d, hi_d)
    G = w.Gamma[: d * sigma + 1]
    r_lo = q_lo.shape[1]
    r_hi = q_hi.shape[1]
    # shifted[t, t'] = Gamma_{t + t'}
    shifted = np.array([[G[t + tp] for tp in range(r_hi)] for t in range(r_lo)])
    result = np.empty(1 << d)
    proj = q_lo @ shifted  # (2^lo, r_hi)
    for hi_mask in range(1 << hi_d):
        result[hi_mask << lo_d : (hi_mask + 1) << lo_d] = proj @ q_hi[hi_mask]
    return result


def subset_sizes(d: int) -> np.ndarray:
    masks = np.arange(1 << d, dtype=np.int64)
    return ((masks[:, None] >> np.arange(d)) & 1).sum(axis=1)


def mask_to_subset(mask: int) -> tuple[int, ...]:
    return tuple(j + 1 for j in range(mask.bit_length()) if mask >> j & 1)


def rescale_pod(w: WeightFamily, a: float) -> WeightFamily:
    """Equivalent POD weights with Gamma_l / a^l and a * gamma_j."""
    if w.kind is not WeightKind.POD:
        raise ValueError("rescale_pod applies to POD weights only")
    if not (np.isfinite(a) and a > 0):
        raise ValueError("rescale parameter must be positive and finite")
    ell = np.arange(w.Gamma.size)
    Gamma = w.Gamma / np.power(float(a), ell)
    return WeightFamily.pod(Gamma, a * w.gamma)


def equivalent_family(w: WeightFamily) -> Optional[WeightFamily]:
    """A simpler family with the same gamma_u, or None when no reduction applies."""
    d = w.d
    if w.kind is WeightKind.PRODUCT:
        if np.all(w.gamma == w.gamma[0]):
            a = float(w.gamma[0])
            return WeightFamily.order_dependent(a ** np.arange(d + 1), d)
        return None
    if w.kind is not WeightKind.SPOD:
        return None
    if w.sigma == 1:
        return WeightFamily.pod(w.Gamma[: d + 1], w.gamma_nu[:, 0])
    tail = w.Gamma[1 : d * w.sigma + 1]
    if np.all(tail == tail[0]):
        b = float(tail[0])
        gamma_tilde = w.gamma_nu.sum(axis=1)
        if b == 1.0:
            return WeightFamily.product(gamma_tilde)
        return WeightFamily.pod(np.concatenate([[1.0], np.full(d, b)]), gamma_tilde)
    return None


def log_rescale_parameter(d: int) -> float:
    """log of a = (d!)^(1/d)."""
    return math.lgamma(d + 1) / d


def factorial_over_power(L: int, log_a: float) -> np.ndarray:
    """l! / a^l for l = 0..L, accumulated in log space."""
    ell = np.arange(L + 1)
    logs = np.array([math.lgamma(k + 1) for k in ell]) - ell * log_a
    return np.exp(logs)


def study_weights(choice: str, d: int, alpha: int) -> WeightFamily:
    """The three weight choices used in the convergence study.

    ``product``: gamma_j = j^(-1.5 alpha); ``pod``: Gamma_l = l!/a^l,
    gamma_j = a j^(-1.5 alpha); ``spod``: sigma = alpha/2, Gamma_l = l!/a^l,
    gamma_{j,nu} = a (2 j^(-1.5 alpha))^nu; with a = (d!)^(1/d).
    """
    choice = str(choice).lower()
    if alpha not in (2, 4):
        raise ValueError("the study weights are defined for alpha in {2, 4}")
    if d < 1:
        raise ValueError("d must be positive")
    base = np.arange(1, d + 1, dtype=float) ** (-1.5 * alpha)
    if choice == "product":
        return WeightFamily.product(base)
    log_a = log_rescale_parameter(d)
    a = math.exp(log_a)
    if choice == "pod":
        return WeightFamily.pod(factorial_over_power(d, log_a), a * base)
    if choice == "spod":
        sigma = alpha // 2
        nu = np.arange(1, sigma + 1)
        gamma_nu = a * (2.0 * base[:, None]) ** nu[None, :]
        return WeightFamily.spod(factorial_over_power(d * sigma, log_a), gamma_nu)
    raise ValueError(f"unknown weight choice {choice!r}")


# -- JSON weight specification ------------------------------------------------

def _resolve_a(doc: dict, d: int) -> float:
    raw = doc.get("rescale_a", "auto")
    if raw == "auto":
        return math.exp(log_rescale_parameter(d))
    try:
        a = float(raw)
    except (TypeError, ValueError):
        raise WeightSpecError(f"rescale_a must be 'auto' or a number, got {raw!r}") from None
    if not (math.isfinite(a) and a > 0):
        raise WeightSpecError("rescale_a must be positive")
    return a


def _coef(value, a: float) -> float:
    if value == "a":
        return a
    return float(value)


def _parse_gamma(spec, d: int, alpha, a: float) -> np.ndarray:
    if not isinstance(spec, dict):
        raise WeightSpecError("gamma must be an object")
    if "explicit" in spec:
        vals = np.array(spec["explicit"], dtype=float)
        if vals.size < d:
            raise WeightSpecError(f"gamma.explicit needs {d} entries")
        return vals[:d]
    if spec.get("named") == "power":
        eta = spec.get("eta")
        if eta is None:
            if alpha is None:
                raise WeightSpecError("power gamma needs eta (or alpha for eta = 1.5 alpha)")
            eta = 1.5 * alpha
        c = _coef(spec.get("c", 1.0), a)
        return c * np.arange(1, d + 1, dtype=float) ** (-float(eta))
    raise WeightSpecError(f"unrecognized gamma spec {spec!r}")


def _parse_Gamma(spec, L: int, a: float) -> np.ndarray:
    if not isinstance(spec, dict):
        raise WeightSpecError("Gamma must be an object")
    if "explicit" in spec:
        return np.array(spec["explicit"], dtype=float)
    named = spec.get("named")
    if named == "factorial_over_a":
        return factorial_over_power(L, math.log(a))
    if named == "factorial":
        return factorial_over_power(L, 0.0)
    if named == "constant":
        out = np.full(L + 1, float(spec["value"]))
        out[0] = 1.0
        return out
    raise WeightSpecError(f"unrecognized Gamma spec {spec!r}")


def _parse_gamma_nu(spec, d: int, sigma: int, alpha, a: float) -> np.ndarray:
    if isinstance(spec, list):
        arr = np.array(spec, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < d or arr.shape[1] != sigma:
            raise WeightSpecError(f"gamma_nu must be a {d} x {sigma} matrix")
        return arr[:d]
    if isinstance(spec, dict) and spec.get("named") == "spod_power":
        eta = spec.get("eta", None if alpha is None else 1.5 * alpha)
        if eta is None:
            raise WeightSpecError("spod_power needs eta or alpha")
        c = _coef(spec.get("c", 1.0), a)
        base = float(spec.get("base", 1.0)) * np.arange(1, d + 1, dtype=float) ** (-float(eta))
        return c * base[:, None] ** np.arange(1, sigma + 1)[None, :]
    raise WeightSpecError(f"unrecognized gamma_nu spec {spec!r}")


def parse_weight_spec(doc) -> WeightFamily:
    """Build a WeightFamily from a weight specification document (dict or JSON text).

    ``rescale_a`` (``"auto"`` means ``(d!)^(1/d)``) supplies the parameter
    ``a`` used by ``{"named": "factorial_over_a"}`` and by ``"c": "a"``.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise WeightSpecError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise WeightSpecError("weight spec must be a JSON object")
    try:
        kind = WeightKind(doc["kind"])
        d = int(doc["d"])
    except (KeyError, ValueError, TypeError) as exc:
        raise WeightSpecError(f"weight spec needs a valid kind and d: {exc}") from None
    if d < 1:
        raise WeightSpecError("d must be positive")
    alpha = doc.get("alpha")
    try:
        a = _resolve_a(doc, d)
        if kind is WeightKind.PRODUCT:
            return WeightFamily.product(_parse_gamma(doc.get("gamma"), d, alpha, a))
        if kind is WeightKind.ORDER_DEPENDENT:
            return WeightFamily.order_dependent(_parse_Gamma(doc.get("Gamma"), d, a), d)
        if kind is WeightKind.FINITE_ORDER:
            q = int(doc["q"])
            G = _parse_Gamma(doc.get("Gamma"), q, a)
            return WeightFamily.finite_order(G, q, d)
        if kind is WeightKind.POD:
            return WeightFamily.pod(_parse_Gamma(doc.get("Gamma"), d, a),
                                    _parse_gamma(doc.get("gamma"), d, alpha, a))
        sigma = int(doc["sigma"])
        return WeightFamily.spod(_parse_Gamma(doc.get("Gamma"), d * sigma, a),
                                 _parse_gamma_nu(doc.get("gamma_nu"), d, sigma, alpha, a))
    except WeightSpecError:
        raise
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise WeightSpecError(str(exc)) from None


def weight_to_spec(w: WeightFamily) -> dict:
    """Explicit (fully materialized) weight specification document."""
    doc = {"kind": w.kind.value, "d": int(w.d)}
    if w.gamma is not None:
        doc["gamma"] = {"explicit": [float(v) for v in w.gamma]}
    if w.Gamma is not None:
        doc["Gamma"] = {"explicit": [float(v) for v in w.Gamma]}
    if w.q is not None:
        doc["q"] = int(w.q)
    if w.sigma is not None:
        doc["sigma"] = int(w.sigma)
        doc["gamma_nu"] = [[float(v) for v in row] for row in w.gamma_nu]
    return doc
