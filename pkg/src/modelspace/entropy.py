"""Nonparametric neg-selfentropy estimation from raw data.

The base estimator uses k-th nearest-neighbor distances:

    H_hat = psi(n) - psi(k) + ln V_d + (d/n) sum_i ln rho_{k,i}

with V_d the unit-ball volume and psi the digamma function.  The weighted
variant combines the per-k estimates for k = 1..k_max with weights chosen to
cancel the leading bias terms in dimension d; below d = 4 no such terms exist
and it reduces to the plain estimator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .distributions import Sample
from .exceptions import ValidationError

_BRUTE_FORCE_MAX_N = 64
_JITTER_KEY = 0x6A17  # fixed stream for the optional deterministic jitter

# Asymptotic series psi(x) ~ ln x - 1/(2x) - sum c_j x^(-2j), c_j = B_2j / 2j.
_PSI_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)


def digamma(x):
    """Digamma via upward recurrence to x >= 6 plus a 6-term asymptotic series.

    Absolute error below 1e-10 for x > 0; scalar in, scalar out.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0
    x = np.atleast_1d(x).copy()
    if np.any(x <= 0.0):
        raise ValidationError("digamma defined here for positive arguments only")
    out = np.zeros_like(x)
    # psi(x) = psi(x + 1) - 1/x, applied until every argument reaches 6.
    while True:
        small = x < 6.0
        if not np.any(small):
            break
        out[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv2 = 1.0 / (x * x)
    tail = np.zeros_like(x)
    for c in reversed(_PSI_COEFFS):
        tail = (tail + c) * inv2
    out += np.log(x) - 0.5 / x - tail
    return float(out[0]) if single else out


def unit_ball_log_volume(d: int) -> float:
    """ln V_d = (d/2) ln pi - ln Gamma(d/2 + 1)."""
    return 0.5 * d * np.log(np.pi) - float(gammaln(0.5 * d + 1.0))


@dataclass(frozen=True)
class EntropyEstimate:
    """Differential-entropy estimate h_hat and its negation sgg_hat."""

    sgg_hat: float
    h_hat: float
    k: int
    n: int
    d: int
    estimator: str
    fallback: bool = False

    def __post_init__(self):
        if self.sgg_hat != -self.h_hat:
            raise ValidationError("sgg_hat must equal -h_hat exactly")
        if not 1 <= self.k <= self.n - 1:
            raise ValidationError(f"need 1 <= k <= n-1, got k={self.k}, n={self.n}")


def knn_distances(sample: Sample, k: int) -> np.ndarray:
    """Exact Euclidean distance from each point to its k-th nearest other point.

    Duplicate points make some distance zero and raise; deduplicate the data
    or pass jitter=True to the entropy estimators.
    """
    return _knn_matrix(sample.data, k)[:, k - 1]


def _knn_matrix(x: np.ndarray, kmax: int) -> np.ndarray:
    """(n, kmax) matrix of 1st..kmax-th neighbor distances, exact."""
    n = x.shape[0]
    if not 1 <= kmax <= n - 1:
        raise ValidationError(f"need 1 <= k <= n-1, got k={kmax}, n={n}")
    if n <= _BRUTE_FORCE_MAX_N:
        diff = x[:, None, :] - x[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.fill_diagonal(d2, np.inf)
        d2.sort(axis=1)
        dist = np.sqrt(d2[:, :kmax])
    else:
        dist, _ = cKDTree(x).query(x, k=kmax + 1)
        dist = dist[:, 1:]
    if dist.min() <= 0.0:
        raise ValidationError(
            "duplicate points give a zero neighbor distance; "
            "deduplicate the sample or enable the jitter flag"
        )
    return dist


def _prepare(sample: Sample, jitter: bool, standardize: bool):
    """Returns (points, entropy correction to add back)."""
    x = np.asarray(sample.data, dtype=float)
    correction = 0.0
    if standardize:
        s = x.std(axis=0, ddof=1)
        if np.any(s <= 0.0):
            raise ValidationError("cannot standardize a zero-variance column")
        x = x / s
        correction = float(np.sum(np.log(s)))
    if jitter:
        span = float(np.ptp(x, axis=0).max())
        scale = 1e-9 * (span if span > 0.0 else 1.0)
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(_JITTER_KEY)))
        x = x + scale * gen.uniform(-1.0, 1.0, size=x.shape)
    return x, correction


def _per_k_estimates(x: np.ndarray, kmax: int) -> np.ndarray:
    n, d = x.shape
    rho = _knn_matrix(x, kmax)
    ks = np.arange(1, kmax + 1)
    log_term = (d / n) * np.log(rho).sum(axis=0)
    return digamma(float(n)) - digamma(ks.astype(float)) + unit_ball_log_volume(d) + log_term


def entropy_kl(sample: Sample, k: int = 1, jitter: bool = False,
               standardize: bool = False) -> EntropyEstimate:
    """k-th nearest-neighbor entropy estimate of the sample."""
    x, corr = _prepare(sample, jitter, standardize)
    h = float(_per_k_estimates(x, k)[-1]) + corr
    return EntropyEstimate(-h, h, k, sample.n, sample.p, "knn")


def default_k_max(d: int, n: int) -> int:
    return min(int(np.ceil(d / 2)) * 3, n - 1)


def bias_weights(d: int, k_max: int) -> np.ndarray:
    """Minimal-norm weights over k = 1..k_max that sum to 1 and cancel the
    leading kNN bias terms for dimension d.

    The cancellation rows use the gamma-ratio moments Gamma(j + 2l/d)/Gamma(j)
    for l = 1..floor(d/4); below d = 4 there are none and the weight system is
    trivial.  Raises when k_max is too small to satisfy every row.
    """
    m = d // 4
    if k_max < m + 1:
        raise ValidationError(
            f"k_max={k_max} cannot satisfy {m + 1} weight constraints for d={d}"
        )
    js = np.arange(1, k_max + 1, dtype=float)
    rows = [np.exp(gammaln(js + 2.0 * l / d) - gammaln(js)) for l in range(1, m + 1)]
    rows.append(np.ones(k_max))
    a = np.vstack(rows)
    b = np.zeros(m + 1)
    b[-1] = 1.0
    w = np.linalg.pinv(a) @ b
    if np.abs(a @ w - b).max() > 1e-8:
        raise ValidationError(
            f"weight system for d={d}, k_max={k_max} is numerically infeasible"
        )
    return w


def entropy_weighted(sample: Sample, k_max: int | None = None, jitter: bool = False,
                     standardize: bool = False) -> EntropyEstimate:
    """Bias-cancelling weighted combination of per-k estimates.

    Falls back to entropy_kl (with a warning and the fallback flag set) when
    the weight system is infeasible for the requested k_max.
    """
    d = sample.p
    if k_max is None:
        k_max = default_k_max(d, sample.n)
    if not 1 <= k_max <= sample.n - 1:
        raise ValidationError(f"need 1 <= k_max <= n-1, got k_max={k_max}, n={sample.n}")
    if k_max == 1 or d <= 3:
        return entropy_kl(sample, k_max, jitter=jitter, standardize=standardize)
    try:
        w = bias_weights(d, k_max)
    except ValidationError as exc:
        warnings.warn(f"{exc}; falling back to the unweighted estimator")
        base = entropy_kl(sample, k_max, jitter=jitter, standardize=standardize)
        return EntropyEstimate(base.sgg_hat, base.h_hat, base.k, base.n, base.d,
                               "knn", fallback=True)
    x, corr = _prepare(sample, jitter, standardize)
    h = float(w @ _per_k_estimates(x, k_max)) + corr
    return EntropyEstimate(-h, h, k_max, sample.n, sample.p, "knn_weighted")
