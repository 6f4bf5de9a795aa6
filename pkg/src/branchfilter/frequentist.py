"""Ratio estimators of the offspring mean and of gamma^2 from detected counts.

All functions take the observed series ``Z_0..Z_n`` as any integer
sequence. Zeros are data: an extinct tail changes the estimates and is
never dropped.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from .errors import DegenerateSeriesError, InfeasibleError, InsufficientDataError
from .model import invert_moments


def _series(z, min_len=2):
    arr = np.asarray(z, dtype=float)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if np.any(arr < 0):
        raise ValueError("series must be nonnegative")
    if len(arr) < min_len:
        raise InsufficientDataError(f"need at least {min_len} generations, got {len(arr)}")
    return arr


def n0_of(n: int) -> int:
    """Number of odd/even pairs minus one for a series ending at generation ``n``."""
    return (n - 1) // 2


def m_bar(z, t: int) -> float:
    """One-step ratio ``Z_t / (Z_{t-1} + 1)``."""
    arr = _series(z)
    if not 1 <= t < len(arr):
        raise IndexError(f"generation {t} outside 1..{len(arr) - 1}")
    return arr[t] / (arr[t - 1] + 1.0)


def m_tilde(z) -> float:
    """Ratio of partial sums ``sum_{1..n} Z_i / sum_{0..n-1} Z_i``."""
    arr = _series(z)
    denom = arr[:-1].sum()
    if denom <= 0:
        raise DegenerateSeriesError("Z_0..Z_{n-1} are all zero")
    return arr[1:].sum() / denom


def m_hat_odd(z):
    """Odd-over-even ratio estimator.

    Returns
    -------
    estimate : float
    n0 : int
    denom_sum : float
        ``sum_k Z_{2k}``, the normalization of its central limit theorem.
    """
    arr = _series(z)
    n0 = n0_of(len(arr) - 1)
    even = arr[0 : 2 * n0 + 1 : 2]
    odd = arr[1 : 2 * n0 + 2 : 2]
    denom = even.sum()
    if denom <= 0:
        raise DegenerateSeriesError("even-generation counts are all zero")
    return odd.sum() / denom, n0, denom


def gamma_hat_sq(z) -> float:
    """Weighted mean squared deviation of the one-step ratios around ``m_tilde``."""
    arr = _series(z)
    center = m_tilde(arr)
    prev = arr[:-1] + 1.0
    ratios = arr[1:] / prev
    return float(np.mean(prev * (ratios - center) ** 2))


def gamma_hat_odd_sq(z) -> float:
    """Odd-index analogue of :func:`gamma_hat_sq`, centered at ``m_hat_odd``.

    The sum runs over ``k = 0..n0`` and is divided by ``n0``.
    """
    arr = _series(z)
    est, n0, _ = m_hat_odd(arr)
    if n0 < 1:
        raise InsufficientDataError("need n0 >= 1 (at least four generations)")
    even = arr[0 : 2 * n0 + 1 : 2] + 1.0
    odd = arr[1 : 2 * n0 + 2 : 2]
    return float(np.sum(even * (odd / even - est) ** 2) / n0)


def _quantile(level):
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    return norm.ppf(0.5 * (1.0 + level))


def ci_m_from(estimate, gamma2, denom_sum, level=0.95):
    half = _quantile(level) * math.sqrt(gamma2) / math.sqrt(denom_sum)
    return estimate - half, estimate + half


def ci_gamma2_from(gamma2, n0, level=0.95):
    half = _quantile(level) * math.sqrt(2.0) * gamma2 / math.sqrt(n0)
    return max(0.0, gamma2 - half), gamma2 + half


def ci_m(z, level=0.95):
    """Normal interval for the mean around the odd/even ratio estimator."""
    est, _, denom = m_hat_odd(z)
    return ci_m_from(est, gamma_hat_odd_sq(z), denom, level)


def ci_gamma2(z, level=0.95):
    """Normal interval for gamma^2 around its odd-index estimator, floored at 0."""
    arr = _series(z)
    n0 = n0_of(len(arr) - 1)
    return ci_gamma2_from(gamma_hat_odd_sq(arr), n0, level)


def estimate_pi_lambda(z, phi=0.5, odd=False):
    """Plug-in ``(pi, lam)`` from moment estimates; ``None`` when infeasible.

    By default inverts ``(m_tilde, gamma_hat_sq)``; ``odd=True`` uses the
    odd-index pair instead.
    """
    if odd:
        m, g2 = m_hat_odd(z)[0], gamma_hat_odd_sq(z)
    else:
        m, g2 = m_tilde(z), gamma_hat_sq(z)
    try:
        inv = invert_moments(m, g2, phi)
    except InfeasibleError:
        return None
    return inv.pi, inv.lam


@dataclass
class EstimateReport:
    m_bar: float
    m_tilde: float
    m_hat_odd: float
    gamma_hat_sq: float
    gamma_hat_odd_sq: float
    ci_m: tuple
    ci_gamma2: tuple
    pi_hat: Optional[float]
    lambda_hat: Optional[float]
    feasible: bool
    n0: int
    n: int
    level: float

    def to_dict(self):
        d = asdict(self)
        d["ci_m"] = list(self.ci_m)
        d["ci_gamma2"] = list(self.ci_gamma2)
        return d


def estimate_report(z, phi=0.5, level=0.95, odd=False) -> EstimateReport:
    arr = _series(z)
    n = len(arr) - 1
    est, n0, denom = m_hat_odd(arr)
    g2o = gamma_hat_odd_sq(arr)
    pl = estimate_pi_lambda(arr, phi, odd=odd)
    return EstimateReport(
        m_bar=m_bar(arr, n),
        m_tilde=m_tilde(arr),
        m_hat_odd=est,
        gamma_hat_sq=gamma_hat_sq(arr),
        gamma_hat_odd_sq=g2o,
        ci_m=ci_m_from(est, g2o, denom, level),
        ci_gamma2=ci_gamma2_from(g2o, n0, level),
        pi_hat=None if pl is None else pl[0],
        lambda_hat=None if pl is None else pl[1],
        feasible=pl is not None,
        n0=n0,
        n=n,
        level=level,
    )
