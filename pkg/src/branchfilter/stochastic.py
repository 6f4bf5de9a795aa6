"""Reproducible random variates and weighted-sample primitives.

Every sampler takes an :class:`RngStream`. A stream is a Philox
counter-based generator keyed by ``(seed, stream_id)``; sub-streams move
the high word of the counter, so they never overlap in practice and need
no bookkeeping between callers.

Samplers accept scalars or arrays. Scalar calls return Python ``int``
(unbounded, so supercritical trajectories over hundreds of generations do
not overflow); array calls return ``int64`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DegeneracyError, DomainError

_UINT64_MAX = 2**64 - 1

# Above this rate (or binomial variance) draws use a rounded normal
# approximation; below it they are exact.
LARGE_COUNT = 1.0e15

# int64 arrays cannot hold draws past this.
_ARRAY_LIMIT = 4.0e18


class RngStream:
    """A deterministic stream of random variates.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed shared by a whole run.
    stream_id : int
        64-bit unsigned stream label (one per particle step, replicate, ...).
    substream : int
        Offset into the counter space; used for retries on the same stream.
    """

    __slots__ = ("seed", "stream_id", "substream", "generator")

    def __init__(self, seed: int, stream_id: int = 0, substream: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id), ("substream", substream)):
            if not 0 <= int(value) <= _UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.substream = int(substream)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        counter = np.array([0, 0, 0, self.substream], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key, counter=counter))

    def child(self, substream: int) -> "RngStream":
        """Fresh stream with the same key and a different counter block."""
        return RngStream(self.seed, self.stream_id, substream)

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, substream={self.substream})"


def _check_probability(p, open_interval=False):
    p_arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p_arr)):
        raise DomainError(f"probability must be finite, got {p}")
    if open_interval:
        if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
            raise DomainError(f"probability must lie in (0, 1), got {p}")
    elif np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    return p_arr


def poisson_sample(rate, rng: RngStream, size=None):
    """Draw Poisson variates.

    numpy's sampler is used for the exact regime: multiplication
    (inversion) for rates below 10 and the PTRS transformed-rejection method
    above. Rates beyond ``LARGE_COUNT`` fall back to a rounded normal draw.
    """
    rate_arr = np.asarray(rate, dtype=float)
    if not np.all(np.isfinite(rate_arr)) or np.any(rate_arr < 0.0):
        raise DomainError(f"Poisson rate must be finite and nonnegative, got {rate}")
    gen = rng.generator
    if rate_arr.ndim == 0 and size is None:
        lam = float(rate_arr)
        if lam == 0.0:
            return 0
        if lam < LARGE_COUNT:
            return int(gen.poisson(lam))
        return max(0, int(round(lam + math.sqrt(lam) * gen.standard_normal())))

    if size is not None:
        rate_arr = np.broadcast_to(rate_arr, size)
    if np.any(rate_arr > _ARRAY_LIMIT):
        raise OverflowError("Poisson rate too large for an int64 array draw")
    big = rate_arr >= LARGE_COUNT
    if not np.any(big):
        return gen.poisson(rate_arr).astype(np.int64)
    out = np.empty(rate_arr.shape, dtype=np.int64)
    out[~big] = gen.poisson(rate_arr[~big])
    lam = rate_arr[big]
    out[big] = np.maximum(0, np.rint(lam + np.sqrt(lam) * gen.standard_normal(lam.shape)))
    return out


def binomial_sample(n, p, rng: RngStream, size=None):
    """Draw Binomial(n, p) variates; exact unless ``n p (1-p)`` exceeds ``LARGE_COUNT``."""
    p_arr = _check_probability(p)
    gen = rng.generator
    if np.ndim(n) == 0 and p_arr.ndim == 0 and size is None:
        trials = int(n)
        if trials < 0:
            raise DomainError(f"binomial size must be nonnegative, got {n}")
        prob = float(p_arr)
        if trials == 0 or prob == 0.0:
            return 0
        if prob == 1.0:
            return trials
        var = trials * prob * (1.0 - prob)
        if var < LARGE_COUNT and trials < 2**62:
            return int(gen.binomial(trials, prob))
        draw = round(trials * prob + math.sqrt(var) * gen.standard_normal())
        return min(trials, max(0, int(draw)))

    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise DomainError("binomial size must be nonnegative")
    if size is not None:
        n_arr = np.broadcast_to(n_arr, size)
    return gen.binomial(n_arr.astype(np.int64), p_arr, size=size).astype(np.int64)


def binomial_log_pmf(size, count, p):
    """Log of the binomial pmf, extended to real ``size`` through log-gamma.

    Returns ``-inf`` wherever ``count > size``. Works elementwise on arrays.
    """
    p_arr = _check_probability(p, open_interval=True)
    size_arr = np.asarray(size, dtype=float)
    count_arr = np.asarray(count, dtype=float)
    if np.any(size_arr < 0):
        raise DomainError("binomial size must be nonnegative")
    size_arr, count_arr, p_arr = np.broadcast_arrays(size_arr, count_arr, p_arr)
    out = np.full(size_arr.shape, -np.inf)
    ok = count_arr <= size_arr
    n, k, q = size_arr[ok], count_arr[ok], p_arr[ok]
    out[ok] = (
        gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
        + k * np.log(q) + (n - k) * np.log1p(-q)
    )
    if out.ndim == 0:
        return float(out)
    return out


def _cov_factor(cov):
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise DomainError(f"covariance must be 2x2, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise DomainError("covariance must be finite")
    sym = 0.5 * (cov + cov.T)
    if np.max(np.abs(sym - cov)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
        raise DomainError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] < -1e-10:
        raise DomainError(f"covariance has negative eigenvalue {vals[0]:.3g}")
    vals = np.clip(vals, 0.0, None)
    # columns scaled by sqrt(eigenvalue): cov = F F^T, rank deficiency allowed
    return vecs * np.sqrt(vals)


def mvn2_sample(mean, cov, rng: RngStream, size=None):
    """Bivariate normal draws via an eigendecomposition of ``cov``.

    ``mean`` may be a single pair or an ``(n, 2)`` array of locations sharing
    one covariance; the result has the broadcast shape.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape[-1] != 2:
        raise DomainError("mean must have a trailing dimension of 2")
    factor = _cov_factor(cov)
    shape = mean.shape if size is None else tuple(np.atleast_1d(size)) + (2,)
    if not np.any(factor):
        return np.broadcast_to(mean, shape).copy()
    z = rng.generator.standard_normal(shape)
    return mean + z @ factor.T


def _normalized(weights):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DomainError("weights must be a nonempty 1-D array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise DegeneracyError("all weights are zero")
    return w / total


def resample_index(weights, rng: RngStream) -> int:
    """Draw one index with probability ``weights[i]``."""
    w = np.asarray(weights, dtype=float)
    if w.size and np.all(w == 0):
        raise DegeneracyError("all weights are zero")
    if abs(w.sum() - 1.0) > 1e-9:
        raise DomainError(f"weights must sum to 1, got {w.sum()!r}")
    return int(resample_indices(w, 1, rng)[0])


def resample_indices(weights, n: int, rng: RngStream, scheme: str = "multinomial"):
    """Draw ``n`` ancestor indices.

    ``scheme`` is ``"multinomial"`` (independent draws) or ``"systematic"``
    (one uniform, evenly spaced positions). Zero-weight indices are never
    returned.
    """
    w = _normalized(weights)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    if scheme == "multinomial":
        u = rng.generator.random(n)
    elif scheme == "systematic":
        u = (rng.generator.random() + np.arange(n)) / n
    else:
        raise DomainError(f"unknown resampling scheme {scheme!r}")
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(w) - 1)


@dataclass(frozen=True)
class WeightedSample2D:
    """Points in the plane with normalized nonnegative weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = _normalized(self.weights)
        if len(w) != len(pts):
            raise DomainError("points and weights must have equal length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)


def weighted_mean_cov(points, weights=None):
    """Weighted mean and (biased) covariance of 2-D points.

    Accepts a :class:`WeightedSample2D` or ``(points, weights)``; equal
    weights reproduce the plain sample moments with divisor ``n``.
    """
    if isinstance(points, WeightedSample2D):
        sample = points
    else:
        if weights is None:
            weights = np.ones(len(points))
        sample = WeightedSample2D(points, weights)
    pts, w = sample.points, sample.weights
    mean = w @ pts
    d = pts - mean
    c00 = w @ (d[:, 0] * d[:, 0])
    c11 = w @ (d[:, 1] * d[:, 1])
    c01 = w @ (d[:, 0] * d[:, 1])
    return mean, np.array([[c00, c01], [c01, c11]])


def effective_sample_size(weights) -> float:
    w = _normalized(weights)
    return float(1.0 / np.sum(w * w))
