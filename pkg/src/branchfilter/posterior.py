"""Posterior summaries of a weighted particle cloud.

Means (squared-error loss) and modes (0-1 loss) are reported side by side
and never merged. Densities are Gaussian kernel estimates whose bandwidth
follows Silverman's rule with the effective sample size in place of the
particle count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .errors import PointMassError
from .stochastic import effective_sample_size, weighted_mean_cov

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_CHUNK = 4096


@dataclass(frozen=True)
class DensityGrid1D:
    points: np.ndarray
    density: np.ndarray
    bandwidth: float

    def to_dict(self):
        return {
            "points": self.points.tolist(),
            "density": self.density.tolist(),
            "bandwidth": self.bandwidth,
        }


@dataclass(frozen=True)
class HpdSet:
    level: float
    intervals: tuple
    attained_mass: float

    @property
    def length(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def contains(self, value) -> bool:
        return any(lo <= value <= hi for lo, hi in self.intervals)

    def to_dict(self):
        return {
            "level": self.level,
            "intervals": [list(iv) for iv in self.intervals],
            "attained_mass": self.attained_mass,
        }


def weighted_quantile(values, weights, q):
    """Quantiles of the weighted empirical distribution (midpoint interpolation)."""
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    w = w / w.sum()
    cdf = np.cumsum(w) - 0.5 * w
    return np.interp(q, cdf, v)


def silverman_bandwidth(values, weights) -> float:
    values = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    mean = w @ values
    sd = np.sqrt(w @ (values - mean) ** 2)
    q25, q75 = weighted_quantile(values, w, [0.25, 0.75])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return float(0.9 * spread * effective_sample_size(w) ** (-0.2))


def _kernel_sum(grid, values, weights, bandwidth):
    out = np.zeros(len(grid))
    for start in range(0, len(values), _CHUNK):
        v = values[start : start + _CHUNK]
        w = weights[start : start + _CHUNK]
        u = (grid[:, None] - v[None, :]) / bandwidth
        out += np.exp(-0.5 * u * u) @ w
    return out / (bandwidth * _SQRT_2PI)


def weighted_kde_1d(values, weights=None, grid_size=512) -> DensityGrid1D:
    """Weighted Gaussian KDE on a uniform grid over ``[min - 3b, max + 3b]``.

    Raises :class:`PointMassError` when all values coincide.
    """
    values = np.asarray(values, dtype=float)
    weights = np.ones(len(values)) if weights is None else np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    lo, hi = values.min(), values.max()
    if not hi > lo:
        raise PointMassError(f"all values equal {lo}; no density to estimate")
    b = silverman_bandwidth(values, weights)
    if not b > 0:
        b = (hi - lo) / 10.0
    grid = np.linspace(lo - 3 * b, hi + 3 * b, grid_size)
    dens = _kernel_sum(grid, values, weights, b)
    dens /= trapezoid(dens, grid)
    return DensityGrid1D(grid, dens, b)


def _cell_widths(points):
    if len(points) == 1:
        return np.ones(1), points.copy(), points.copy()
    mids = 0.5 * (points[1:] + points[:-1])
    left = np.concatenate([[points[0] - (mids[0] - points[0])], mids])
    right = np.concatenate([mids, [points[-1] + (points[-1] - mids[-1])]])
    return right - left, left, right


def hpd_from_density(grid: DensityGrid1D, level=0.95) -> HpdSet:
    """Highest-density set of at least ``level`` mass, as disjoint intervals.

    Each grid point stands for the cell around it. Cells are taken in order
    of decreasing density until the mass reaches ``level``; equal densities
    are taken left to right, so flat stretches resolve to their leftmost
    part.
    """
    points = np.asarray(grid.points, dtype=float)
    dens = np.asarray(grid.density, dtype=float)
    widths, left, right = _cell_widths(points)
    mass = dens * widths
    mass = mass / mass.sum()
    order = np.lexsort((np.arange(len(dens)), -dens))
    cum = np.cumsum(mass[order])
    k = int(np.searchsorted(cum, level - 1e-12)) + 1
    k = min(k, len(order))
    chosen = np.zeros(len(dens), dtype=bool)
    chosen[order[:k]] = True

    intervals = []
    i = 0
    while i < len(chosen):
        if chosen[i]:
            j = i
            while j + 1 < len(chosen) and chosen[j + 1]:
                j += 1
            intervals.append((float(left[i]), float(right[j])))
            i = j + 1
        else:
            i += 1
    return HpdSet(level, tuple(intervals), float(mass[chosen].sum()))


@dataclass
class PosteriorSummary:
    mean: tuple
    mode: tuple
    mode_marginal: tuple
    cov: np.ndarray
    hpd_pi: HpdSet
    hpd_lambda: HpdSet
    marginal_pi: Optional[DensityGrid1D]
    marginal_lambda: Optional[DensityGrid1D]
    joint_grid: Optional[dict]

    @property
    def sd(self):
        return tuple(np.sqrt(np.diag(self.cov)))

    def to_dict(self):
        return {
            "mean": {"pi": self.mean[0], "lambda": self.mean[1]},
            "mode": {"pi": self.mode[0], "lambda": self.mode[1]},
            "mode_marginal": {"pi": self.mode_marginal[0], "lambda": self.mode_marginal[1]},
            "cov": self.cov.tolist(),
            "sd": {"pi": self.sd[0], "lambda": self.sd[1]},
            "hpd_pi": self.hpd_pi.to_dict(),
            "hpd_lambda": self.hpd_lambda.to_dict(),
        }


def joint_kde(points, weights, size=128):
    """Product-kernel weighted KDE on a ``size x size`` grid.

    Returns a dict with ``pi`` and ``lambda`` axes and ``density`` indexed
    ``[i_pi, i_lambda]``.
    """
    w = weights / weights.sum()
    axes, kernels = [], []
    for j in range(2):
        v = points[:, j]
        b = silverman_bandwidth(v, w)
        if not b > 0:
            b = max(abs(v.max() - v.min()) / 10.0, 1e-12)
        ax = np.linspace(v.min() - 3 * b, v.max() + 3 * b, size)
        u = (ax[:, None] - v[None, :]) / b
        kernels.append(np.exp(-0.5 * u * u) / (b * _SQRT_2PI))
        axes.append(ax)
    dens = (kernels[0] * w) @ kernels[1].T
    cell = (axes[0][1] - axes[0][0]) * (axes[1][1] - axes[1][0])
    dens /= dens.sum() * cell
    return {"pi": axes[0], "lambda": axes[1], "density": dens}


def summarize(cloud, grid_size=512, level=0.95, joint_size=128) -> PosteriorSummary:
    """Means, modes, covariance, marginal densities and HPD sets of ``(pi, lam)``."""
    keep = np.asarray(cloud.weights) > 0
    theta = np.asarray(cloud.theta, dtype=float)[keep]
    w = np.asarray(cloud.weights, dtype=float)[keep]
    w = w / w.sum()
    mean, cov = weighted_mean_cov(theta, w)
    mean = [float(v) for v in mean]

    marginals, hpds, mode_marginal = [], [], []
    for j in range(2):
        col = theta[:, j]
        if col.min() == col.max():
            value = float(col[0])
            mean[j] = value
            cov[j, :] = cov[:, j] = 0.0
            marginals.append(None)
            hpds.append(HpdSet(level, ((value, value),), 1.0))
            mode_marginal.append(value)
            continue
        grid = weighted_kde_1d(col, w, grid_size)
        marginals.append(grid)
        hpds.append(hpd_from_density(grid, level))
        mode_marginal.append(float(grid.points[np.argmax(grid.density)]))

    if marginals[0] is None or marginals[1] is None:
        joint = None
        mode = tuple(mode_marginal)
    else:
        joint = joint_kde(theta, w, joint_size)
        i, k = np.unravel_index(np.argmax(joint["density"]), joint["density"].shape)
        mode = (float(joint["pi"][i]), float(joint["lambda"][k]))

    return PosteriorSummary(
        mean=tuple(mean),
        mode=mode,
        mode_marginal=tuple(mode_marginal),
        cov=cov,
        hpd_pi=hpds[0],
        hpd_lambda=hpds[1],
        marginal_pi=marginals[0],
        marginal_lambda=marginals[1],
        joint_grid=joint,
    )
