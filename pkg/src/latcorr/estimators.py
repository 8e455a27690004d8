"""Covariance / correlation estimators from grid counts, and their
asymptotic-variance machinery.

Everything is computed from rate-normalized increments
``ytil[k] = (Y[k] - Y[k-1]) / (a_n * delta_n)`` of the observed counts.
With ``d[k] = ytil[k] - ytil[k-1]`` (k = 2..b_n) the (co)variance estimator is

    S^{ab} = sum_k d^a[k] * d^b[k],          C = S^{12} / sqrt(S^{11} S^{22})

and the three estimators of the 3x3 matrix `Gamma` (pair order
(1,2), (1,1), (2,2)) are quadratic functionals of the per-pair product
series ``D^p[k] = d^a[k] * d^b[k]``:

* quadratic, lag-2 cross-term corrected (``gamma_v1``),
* quadratic in lag-2 differences (``gamma_v2``),
* kernel-windowed (``gamma_kernel``), window = ``n(h)`` grid steps.

The asymptotic variance of C is the quadratic form ``xi = v' G v`` with
weights ``v = (1/sqrt(S11 S22), -S12/(2 sqrt(S11^3 S22)),
-S12/(2 sqrt(S11 S22^3)))``; no matrix square root is ever taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .sim import CountPath

__all__ = [
    "PAIRS",
    "DegenerateDataError",
    "TildeSeries",
    "CovEstimate",
    "GammaMatrix",
    "XiValue",
    "BandwidthSpec",
    "ConfidenceInterval",
    "tilde_series",
    "increment_products",
    "estimate_S",
    "estimate_correlation",
    "gamma_v1",
    "gamma_v2",
    "kernel_partial",
    "gamma_kernel",
    "correlation_weights",
    "estimate_xi",
    "confidence_interval",
]

# Index order of all 3-vectors and of GammaMatrix rows/columns.
PAIRS: tuple[tuple[int, int], ...] = ((1, 2), (1, 1), (2, 2))

# Kernel bandwidth exponents named as in the simulation study.
VARIANT_EXPONENTS = {"w": 0.25, "m": 0.5, "n": 0.75}


class DegenerateDataError(Exception):
    """Raised when S11*S22 = 0, so correlation-type quantities are undefined."""


@dataclass(frozen=True)
class TildeSeries:
    """Rate-normalized count increments, ``ytil[k]`` for k = 1..b_n."""

    y1: np.ndarray  # (b_n,)
    y2: np.ndarray  # (b_n,)

    def __post_init__(self):
        if len(self.y1) != len(self.y2):
            raise ValueError("y1 and y2 must have equal length")
        if len(self.y1) < 2:
            raise ValueError("need at least two intervals")

    @property
    def b_n(self) -> int:
        return len(self.y1)


@dataclass(frozen=True)
class CovEstimate:
    """The 3-vector (S12, S11, S22) of (co)variance estimates."""

    s12: float
    s11: float
    s22: float


@dataclass(frozen=True)
class GammaMatrix:
    """Symmetric 3x3 matrix indexed by PAIRS = ((1,2), (1,1), (2,2))."""

    values: np.ndarray  # (3, 3)

    def __post_init__(self):
        if self.values.shape != (3, 3):
            raise ValueError("GammaMatrix requires a 3x3 array")

    def entry(self, p: tuple[int, int], q: tuple[int, int]) -> float:
        return float(self.values[PAIRS.index(p), PAIRS.index(q)])


@dataclass(frozen=True)
class XiValue:
    """Nonnegative asymptotic-variance estimate; ``clamped`` records whether
    the raw quadratic form was negative and got truncated at 0."""

    xi: float
    clamped: bool


@dataclass(frozen=True)
class BandwidthSpec:
    """Kernel window width: either an explicit ``h`` in time units or an
    exponent ``e`` giving ``h = T * b_n**(-e)``.

    The derived window length is ``n(h) = floor(h * b_n / T)`` grid steps,
    clamped below at 1.
    """

    h: float | None = None
    exponent: float | None = None

    def __post_init__(self):
        if (self.h is None) == (self.exponent is None):
            raise ValueError("specify exactly one of h or exponent")

    @classmethod
    def explicit(cls, h: float) -> "BandwidthSpec":
        return cls(h=h)

    @classmethod
    def from_exponent(cls, e: float) -> "BandwidthSpec":
        return cls(exponent=e)

    @classmethod
    def for_variant(cls, variant: str) -> "BandwidthSpec":
        """Bandwidth for the named kernel variants 'w', 'm', 'n'."""
        return cls(exponent=VARIANT_EXPONENTS[variant])

    def resolve(self, b_n: int, T: float) -> tuple[float, int]:
        """Return ``(h, n_h)`` for a given grid."""
        h = self.h if self.h is not None else T * float(b_n) ** (-self.exponent)
        if not 0.0 < h <= T:
            raise ValueError(f"bandwidth h={h} outside (0, T]")
        # guard band: grid times that equal h exactly must stay inside the
        # window despite rounding in h*b_n/T
        n_h = max(int(math.floor(h * b_n / T * (1.0 + 1e-12))), 1)
        return h, n_h


@dataclass(frozen=True)
class ConfidenceInterval:
    """Plug-in normal interval for the correlation, raw and clipped to [-1, 1]."""

    lo_raw: float
    hi_raw: float
    lo: float
    hi: float
    lo_clamped: bool
    hi_clamped: bool
    level: float


def tilde_series(counts: CountPath, a_n: float, delta_n: float) -> TildeSeries:
    """Convert cumulative counts to rate-normalized increments."""
    if a_n <= 0:
        raise ValueError("a_n must be positive")
    if delta_n <= 0:
        raise ValueError("delta_n must be positive")
    scale = 1.0 / (a_n * delta_n)
    return TildeSeries(
        y1=np.diff(counts.y1).astype(np.float64) * scale,
        y2=np.diff(counts.y2).astype(np.float64) * scale,
    )


def increment_products(tilde: TildeSeries) -> dict[tuple[int, int], np.ndarray]:
    """Per-pair product series ``D^p[k] = d^a[k] d^b[k]``, k = 2..b_n.

    Each array has length ``b_n - 1``; index 0 corresponds to k = 2.
    """
    d1 = np.diff(tilde.y1)
    d2 = np.diff(tilde.y2)
    return {(1, 2): d1 * d2, (1, 1): d1 * d1, (2, 2): d2 * d2}


def estimate_S(tilde: TildeSeries) -> CovEstimate:
    """(Co)variance estimator S = (S12, S11, S22) from increment products."""
    prods = increment_products(tilde)
    return CovEstimate(
        s12=float(np.sum(prods[(1, 2)])),
        s11=float(np.sum(prods[(1, 1)])),
        s22=float(np.sum(prods[(2, 2)])),
    )


def estimate_correlation(S: CovEstimate) -> float:
    """Correlation estimate C = S12/sqrt(S11 S22), independent of a_n.

    Raises
    ------
    DegenerateDataError
        If S11*S22 = 0 (e.g. constant increments in one coordinate).
    """
    denom2 = S.s11 * S.s22
    if denom2 <= 0.0:
        raise DegenerateDataError("S11*S22 = 0: correlation undefined")
    c = S.s12 / math.sqrt(denom2)
    # Cauchy-Schwarz holds up to a few ulps; keep the contract |C| <= 1.
    return min(1.0, max(-1.0, c))


def _symmetric_from_upper(fill) -> np.ndarray:
    g = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            g[i, j] = g[j, i] = fill(PAIRS[i], PAIRS[j])
    return g


def gamma_v1(tilde: TildeSeries, T: float) -> GammaMatrix:
    """Quadratic Gamma estimator with lag-2 cross-term correction.

    Entry (p, q) is ``(9/8) * (b_n/T) * [ sum_k D^p_k D^q_k
    - 1/2 sum_k (D^p_k D^q_{k+2} + D^p_{k+2} D^q_k) ]`` where the first sum
    runs over k = 2..b_n and the second over k = 2..b_n-2 (empty for
    b_n < 4).
    """
    prods = increment_products(tilde)
    scale = 9.0 / 8.0 * tilde.b_n / T

    def fill(p, q):
        Dp, Dq = prods[p], prods[q]
        main = np.sum(Dp * Dq)
        cross = np.sum(Dp[:-2] * Dq[2:] + Dp[2:] * Dq[:-2]) if len(Dp) >= 3 else 0.0
        return scale * (main - 0.5 * cross)

    return GammaMatrix(values=_symmetric_from_upper(fill))


def gamma_v2(tilde: TildeSeries, T: float) -> GammaMatrix:
    """Quadratic Gamma estimator built from lag-2 differences of products.

    Entry (p, q) is ``(9/8) * (b_n/T) * 1/2 * sum_{k=2}^{b_n-2}
    (D^p_{k+2} - D^p_k)(D^q_{k+2} - D^q_k)``; the whole matrix is positive
    semidefinite by construction, and zero when b_n < 4.
    """
    prods = increment_products(tilde)
    scale = 9.0 / 8.0 * tilde.b_n / T

    def fill(p, q):
        Dp, Dq = prods[p], prods[q]
        if len(Dp) < 3:
            return 0.0
        up = Dp[2:] - Dp[:-2]
        uq = Dq[2:] - Dq[:-2]
        return scale * 0.5 * np.sum(up * uq)

    return GammaMatrix(values=_symmetric_from_upper(fill))


def kernel_partial(
    products: np.ndarray, k: int, bandwidth: BandwidthSpec, b_n: int, T: float
) -> float:
    """Windowed sum ``sum_{l=max(k-n(h)+1, 2)}^{k} D[l] / h`` at one index k.

    ``products`` is one per-pair series from :func:`increment_products`
    (index 0 <-> l = 2).  This direct form is the reference; the estimator
    itself uses rolling windows.
    """
    if len(products) != b_n - 1:
        raise ValueError("products length must be b_n - 1")
    if not 2 <= k <= b_n:
        raise ValueError(f"k={k} outside 2..b_n")
    h, n_h = bandwidth.resolve(b_n, T)
    lo = max(k - n_h + 1, 2)
    return float(np.sum(products[lo - 2 : k - 1]) / h)


def _window_sums(values: np.ndarray, width: int) -> np.ndarray:
    """Trailing-window sums ``out[j] = sum(values[max(j-width+1, 0) : j+1])``.

    Runs in O(len(values)) independent of the window width: values are cut
    into width-sized blocks carrying prefix and suffix cumulative sums, and
    every window is the sum of one suffix and one prefix.  Each output is
    therefore an in-order sum of its own terms (no large-prefix
    cancellation), matching naive per-window summation to rounding error.
    """
    n = values.size
    if width >= n:
        return np.cumsum(values)
    nblocks = -(-n // width)
    padded = np.zeros(nblocks * width)
    padded[:n] = values
    blocks = padded.reshape(nblocks, width)
    fwd = np.cumsum(blocks, axis=1)
    bwd = np.cumsum(blocks[:, ::-1], axis=1)[:, ::-1]

    out = np.empty(n)
    out[: width - 1] = fwd[0, : width - 1]
    j = np.arange(width - 1, n)
    start = j - width + 1
    b0, off0 = np.divmod(start, width)
    b1, off1 = np.divmod(j, width)
    aligned = off0 == 0
    out[width - 1 :] = np.where(aligned, fwd[b0, width - 1], bwd[b0, off0] + fwd[b1, off1])
    return out


def gamma_kernel(tilde: TildeSeries, T: float, bandwidth: BandwidthSpec) -> GammaMatrix:
    """Kernel-windowed Gamma estimator.

    With ``W^{ab}[k]`` the windowed sums of ``D^{ab}`` divided by h, entry
    (p, q) for p = (a1, b1), q = (a2, b2) is

        (9/8) * (T/b_n) * sum_{k=2}^{b_n}
            ( W^{a1 a2}[k] W^{b1 b2}[k] + W^{a1 b2}[k] W^{b1 a2}[k] ).

    Window sums are maintained by rolling updates, so the total cost is
    O(b_n) rather than O(b_n * n(h)).
    """
    b_n = tilde.b_n
    h, n_h = bandwidth.resolve(b_n, T)
    prods = increment_products(tilde)
    win = {pair: _window_sums(arr, n_h) / h for pair, arr in prods.items()}

    def w(a: int, b: int) -> np.ndarray:
        return win[(a, b) if a <= b else (b, a)]

    scale = 9.0 / 8.0 * T / b_n

    def fill(p, q):
        a1, b1 = p
        a2, b2 = q
        return scale * np.sum(w(a1, a2) * w(b1, b2) + w(a1, b2) * w(b1, a2))

    return GammaMatrix(values=_symmetric_from_upper(fill))


def correlation_weights(S: CovEstimate) -> np.ndarray:
    """Gradient weights of C in S, ordered like PAIRS.

    ``v = (1/sqrt(S11 S22), -S12/(2 sqrt(S11^3 S22)), -S12/(2 sqrt(S11 S22^3)))``
    """
    if S.s11 <= 0.0 or S.s22 <= 0.0:
        raise DegenerateDataError("S11*S22 = 0: weight vector undefined")
    return np.array(
        [
            1.0 / math.sqrt(S.s11 * S.s22),
            -S.s12 / (2.0 * math.sqrt(S.s11**3 * S.s22)),
            -S.s12 / (2.0 * math.sqrt(S.s11 * S.s22**3)),
        ]
    )


def estimate_xi(S: CovEstimate, G: GammaMatrix) -> XiValue:
    """Asymptotic variance of the correlation estimator: ``xi = v' G v``.

    The finite-sample G need not be positive semidefinite; a negative
    quadratic form is clamped to 0 and flagged.
    """
    v = correlation_weights(S)
    raw = float(v @ G.values @ v)
    return XiValue(xi=max(raw, 0.0), clamped=raw < 0.0)


def confidence_interval(
    C: float, xi: XiValue | float, b_n: int, T: float, level: float = 0.95
) -> ConfidenceInterval:
    """Normal plug-in confidence interval ``C +- z * sqrt(xi * T / b_n)``.

    Returns both the raw interval and its intersection with [-1, 1], with
    flags recording whether either endpoint was clipped.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    if b_n < 2:
        raise ValueError("b_n must be at least 2")
    xi_val = xi.xi if isinstance(xi, XiValue) else float(xi)
    if xi_val < 0:
        raise ValueError("xi must be nonnegative")
    z = NormalDist().inv_cdf(0.5 * (1.0 + level))
    half = z * math.sqrt(xi_val * T / b_n)
    lo_raw, hi_raw = C - half, C + half
    return ConfidenceInterval(
        lo_raw=lo_raw,
        hi_raw=hi_raw,
        lo=max(lo_raw, -1.0),
        hi=min(hi_raw, 1.0),
        lo_clamped=lo_raw < -1.0,
        hi_clamped=hi_raw > 1.0,
        level=level,
    )
