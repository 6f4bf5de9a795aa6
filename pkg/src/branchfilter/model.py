"""Partially observed branching process and its epidemic specialization.

Each infective individual is detected with probability ``pi`` within a
generation interval. Undetected individuals stay infective and infect a
Poisson(``lam``) number of new individuals (offspring law ``1 + Poisson``);
detected individuals are infective for a fraction ``phi`` of the interval
and leave Poisson(``phi * lam``) offspring. Generation sizes ``X`` are
hidden, detection counts ``Z`` are observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InfeasibleError, SurvivalConditioningError
from .stochastic import RngStream, binomial_sample, poisson_sample

MAX_SURVIVAL_ATTEMPTS = 10_000


@dataclass(frozen=True)
class ModelParams:
    pi: float
    lam: float
    phi: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.pi < 1.0):
            raise DomainError(f"pi must lie in (0, 1), got {self.pi}")
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive and finite, got {self.lam}")
        if not (0.0 <= self.phi <= 1.0):
            raise DomainError(f"phi must lie in [0, 1], got {self.phi}")


@dataclass(frozen=True)
class Trajectory:
    """Hidden sizes ``x`` and detected counts ``z`` for generations 0..n."""

    x: tuple
    z: tuple

    def __post_init__(self):
        x = tuple(int(v) for v in self.x)
        z = tuple(int(v) for v in self.z)
        if len(x) != len(z):
            raise DomainError("x and z must have equal length")
        extinct = False
        for t, (xt, zt) in enumerate(zip(x, z)):
            if not 0 <= zt <= xt:
                raise DomainError(f"need 0 <= z <= x at generation {t}, got x={xt}, z={zt}")
            if extinct and xt != 0:
                raise DomainError(f"population revived after extinction at generation {t}")
            extinct = extinct or xt == 0
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return len(self.x)

    @property
    def n(self) -> int:
        return len(self.x) - 1

    @property
    def extinct(self) -> bool:
        return self.x[-1] == 0


@dataclass(frozen=True)
class MomentSet:
    m_plus: float
    m_minus: float
    s2_plus: float
    s2_minus: float
    m: float
    s2: float
    gamma2: float

    def to_dict(self):
        return {
            "m_plus": self.m_plus,
            "m_minus": self.m_minus,
            "s2_plus": self.s2_plus,
            "s2_minus": self.s2_minus,
            "m": self.m,
            "s2": self.s2,
            "gamma2": self.gamma2,
        }


def mixture_moments(pi, m_plus, s2_plus, m_minus, s2_minus):
    """Offspring mean, variance and gamma^2 of the detection mixture.

    Generic in the two offspring laws; gamma^2 is the asymptotic variance
    parameter of the odd/even ratio estimator of the mean.
    """
    m = pi * m_minus + (1.0 - pi) * m_plus
    s2 = pi * s2_minus + (1.0 - pi) * s2_plus + pi * (1.0 - pi) * (m_minus - m_plus) ** 2
    gamma2 = (1.0 - pi) * m + pi * s2 + (1.0 + pi) * m * m - 2.0 * pi * m * m_minus
    return m, s2, gamma2


def compute_moments(params: ModelParams) -> MomentSet:
    pi, lam, phi = params.pi, params.lam, params.phi
    m_plus, s2_plus = lam + 1.0, lam
    m_minus = s2_minus = phi * lam
    m, s2, gamma2 = mixture_moments(pi, m_plus, s2_plus, m_minus, s2_minus)
    return MomentSet(m_plus, m_minus, s2_plus, s2_minus, m, s2, gamma2)


def offspring_mean(pi, lam, phi):
    """Vectorized ``m = (1 - pi)(lam + 1) + phi lam pi``."""
    return (1.0 - pi) * (lam + 1.0) + phi * lam * pi


def gamma2_epidemic(params: ModelParams, m=None) -> float:
    """Closed-form gamma^2 for Poisson offspring.

    ``m`` is accepted only so callers can pass the moment they cross-check
    against; the closed form does not use it.
    """
    return _gamma2_closed(params.pi, params.lam, params.phi)


def _gamma2_closed(pi, lam, phi):
    q = 1.0 - pi
    return q * lam + q * q + q * (lam + 1.0) ** 2 + phi * lam * pi


def lambda_from_pi(m, pi, phi):
    """Infection rate that keeps the offspring mean at ``m`` for a given ``pi``.

    Vectorized over ``pi``; raises :class:`InfeasibleError` if any result is
    not strictly positive.
    """
    pi_arr = np.asarray(pi, dtype=float)
    denom = 1.0 - pi_arr + phi * pi_arr
    if np.any(denom <= 0.0):
        raise DomainError("1 - pi + phi*pi must be positive")
    lam = (m - (1.0 - pi_arr)) / denom
    if np.any(lam <= 0.0):
        raise InfeasibleError(f"no positive lambda for m={m}, pi={pi}, phi={phi}")
    return float(lam) if lam.ndim == 0 else lam


def feasible_pi_range(m):
    """Interval of ``pi`` on which the constant-mean curve has ``lam > 0``.

    The curve is positive exactly when ``pi > 1 - m``; returns ``None``
    when that leaves nothing inside (0, 1).
    """
    lo = max(0.0, 1.0 - m)
    if lo >= 1.0:
        return None
    return lo, 1.0


class MomentInversion(NamedTuple):
    pi: float
    lam: float
    n_roots: int
    candidates: tuple = ()

    @property
    def multiple(self) -> bool:
        return self.n_roots > 1


def invert_moments(m, gamma2, phi, grid_size=2000) -> MomentInversion:
    """Recover ``(pi, lam)`` from the offspring mean and gamma^2.

    ``lam`` is tied to ``pi`` along the constant-mean curve, which leaves a
    one-dimensional root problem in ``pi``. gamma^2 is not monotone along
    that curve for ``phi < 1`` and two roots are common; all sign changes on
    a grid are bracketed and refined, and the root with the smallest
    ``pi`` is returned (``n_roots`` reports how many were found).
    """
    if not (m > 0 and math.isfinite(m)):
        raise InfeasibleError(f"offspring mean must be positive, got {m}")
    if not (gamma2 > 0 and math.isfinite(gamma2)):
        raise InfeasibleError(f"gamma2 must be positive, got {gamma2}")
    lo, hi = 1e-6, 1.0 - 1e-6
    if m < 1.0:
        lo = max(lo, 1.0 - m)
        lo = np.nextafter(lo, 1.0)
    if lo >= hi:
        raise InfeasibleError("empty feasible range for pi")

    def residual(p):
        lam = (m - (1.0 - p)) / (1.0 - p + phi * p)
        return _gamma2_closed(p, lam, phi) - gamma2

    grid = np.linspace(lo, hi, grid_size + 1)
    res = residual(grid)
    roots = []
    for i in range(grid_size):
        r0, r1 = res[i], res[i + 1]
        if r0 == 0.0:
            roots.append(grid[i])
        elif r0 * r1 < 0.0:
            roots.append(brentq(residual, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if res[-1] == 0.0:
        roots.append(grid[-1])
    if not roots:
        raise InfeasibleError(f"no pi in (0, 1) reproduces m={m}, gamma2={gamma2} at phi={phi}")
    candidates = tuple(
        (float(p), float((m - (1.0 - p)) / (1.0 - p + phi * p))) for p in roots
    )
    pi, lam = candidates[0]
    return MomentInversion(pi, lam, len(candidates), candidates)


def _check_xz(x, z):
    if np.any(np.asarray(z) < 0) or np.any(np.asarray(z) > np.asarray(x)):
        raise DomainError(f"need 0 <= z <= x, got x={x}, z={z}")


def transition_mean(x, z, params: ModelParams):
    """``E[X_{t+1} | X_t = x, Z_t = z] = (x - z) + lam (x - z + phi z)``."""
    _check_xz(x, z)
    return _transition_mean(x, z, params.lam, params.phi)


def _transition_mean(x, z, lam, phi):
    survivors = np.subtract(x, z)
    return survivors + lam * (survivors + phi * np.asarray(z))


def transition_sample(x, z, params: ModelParams, rng: RngStream):
    """Draw ``X_{t+1}`` given ``(x, z)``: ``x - z + Poisson(lam (x - z + phi z))``."""
    _check_xz(x, z)
    return _transition_sample(x, z, params.lam, params.phi, rng)


def _transition_sample(x, z, lam, phi, rng):
    if np.ndim(x) == 0 and np.ndim(z) == 0 and np.ndim(lam) == 0:
        x, z = int(x), int(z)
        if x == 0:
            return 0
        return x - z + poisson_sample(lam * ((x - z) + phi * z), rng)
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    rate = lam * ((x - z) + phi * z)
    return (x - z) + poisson_sample(rate, rng)


def transition_sample_marginal(x, params: ModelParams, rng: RngStream):
    """Draw ``X_{t+1}`` given ``x`` alone (the detection count marginalized out)."""
    if np.any(np.asarray(x) < 0):
        raise DomainError("x must be nonnegative")
    return _transition_sample_marginal(x, params.pi, params.lam, params.phi, rng)


def _transition_sample_marginal(x, pi, lam, phi, rng):
    d = binomial_sample(x, pi, rng)
    return _transition_sample(x, d, lam, phi, rng)


def brute_force_step(x, params: ModelParams, rng: RngStream, size=None):
    """One generation built individual by individual.

    Each of the ``x`` individuals is detected with probability ``pi``;
    undetected ones contribute ``1 + Poisson(lam)``, detected ones
    ``Poisson(phi lam)``. Returns ``(x_next, z)``; with ``size`` set, both
    are arrays of that many independent replicates.
    """
    x = int(x)
    if x < 0:
        raise DomainError("x must be nonnegative")
    gen = rng.generator
    reps = 1 if size is None else int(size)
    if x == 0:
        zeros = np.zeros(reps, dtype=np.int64)
        return (0, 0) if size is None else (zeros, zeros.copy())
    detected = gen.random((reps, x)) < params.pi
    undetected_offspring = 1 + gen.poisson(params.lam, (reps, x))
    detected_offspring = gen.poisson(params.phi * params.lam, (reps, x))
    x_next = np.where(detected, detected_offspring, undetected_offspring).sum(axis=1)
    z = detected.sum(axis=1)
    if size is None:
        return int(x_next[0]), int(z[0])
    return x_next.astype(np.int64), z.astype(np.int64)


def _simulate_once(params, x0, n, rng):
    xs = [int(x0)]
    zs = []
    for _ in range(n):
        x = xs[-1]
        z = binomial_sample(x, params.pi, rng)
        zs.append(z)
        xs.append(_transition_sample(x, z, params.lam, params.phi, rng))
    zs.append(binomial_sample(xs[-1], params.pi, rng))
    return xs, zs


def simulate(
    params: ModelParams,
    x0: int,
    n: int,
    rng: RngStream,
    condition_survival: bool = False,
    max_attempts: int = MAX_SURVIVAL_ATTEMPTS,
) -> Trajectory:
    """Simulate generations ``0..n`` starting from ``x0`` infectives.

    With ``condition_survival`` the whole path is redrawn on a fresh
    sub-stream until ``x[n] > 0``.
    """
    if int(x0) < 1:
        raise DomainError(f"x0 must be at least 1, got {x0}")
    if int(n) < 1:
        raise DomainError(f"horizon n must be at least 1, got {n}")
    attempts = max_attempts if condition_survival else 1
    for attempt in range(attempts):
        xs, zs = _simulate_once(params, x0, n, rng.child(attempt))
        if not condition_survival or xs[-1] > 0:
            return Trajectory(tuple(xs), tuple(zs))
    raise SurvivalConditioningError(f"no surviving path in {max_attempts} attempts")


def simulate_many(
    params: ModelParams,
    x0: int,
    n: int,
    rng: RngStream,
    replicates: int,
    condition_survival: bool = False,
    max_attempts: int = MAX_SURVIVAL_ATTEMPTS,
):
    """Vectorized :func:`simulate` over independent replicates.

    Returns ``(x, z)`` int64 arrays of shape ``(replicates, n + 1)``. Failed
    replicates are redrawn together on successive sub-streams.
    """
    if int(x0) < 1:
        raise DomainError(f"x0 must be at least 1, got {x0}")
    if int(n) < 1:
        raise DomainError(f"horizon n must be at least 1, got {n}")
    xs = np.zeros((replicates, n + 1), dtype=np.int64)
    zs = np.zeros((replicates, n + 1), dtype=np.int64)
    todo = np.arange(replicates)
    attempts = max_attempts if condition_survival else 1
    for attempt in range(attempts):
        sub = rng.child(attempt)
        k = len(todo)
        x = np.full(k, int(x0), dtype=np.int64)
        for t in range(n + 1):
            z = binomial_sample(x, params.pi, sub)
            xs[todo, t] = x
            zs[todo, t] = z
            if t < n:
                x = _transition_sample(x, z, params.lam, params.phi, sub)
        if not condition_survival:
            return xs, zs
        todo = todo[xs[todo, n] == 0]
        if len(todo) == 0:
            return xs, zs
    raise SurvivalConditioningError(f"{len(todo)} replicates died in all {max_attempts} attempts")
