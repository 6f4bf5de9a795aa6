"""Liu-West auxiliary particle filter for the epidemic branching model.

Particles carry the hidden generation size ``x`` and the parameter pair
``theta = (pi, lam)``. Parameters are moved by a shrinkage Gaussian kernel
whose locations are pulled toward the weighted mean by ``a`` and whose
covariance is ``h^2 V``; with ``a^2 + h^2 = 1`` the kernel mixture keeps the
mean and covariance of the current parameter sample.

By default the kernel acts on ``(logit pi, log lam)`` so every proposal is
valid. ``kernel="natural"`` smooths ``(pi, lam)`` directly and redraws
proposals that leave the parameter space.

Randomness: the initial cloud uses stream ``(seed, 0)`` and the update to
generation ``t`` uses stream ``(seed, t)``, each drawing whole particle
arrays, so results do not depend on how many threads numpy uses.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit, logit, logsumexp

from .errors import DegeneracyError, DomainError, PriorInfeasibleError
from .frequentist import m_tilde
from .model import _transition_mean, _transition_sample, _transition_sample_marginal, feasible_pi_range
from .stochastic import (
    RngStream,
    binomial_log_pmf,
    effective_sample_size,
    mvn2_sample,
    resample_indices,
    weighted_mean_cov,
)

_LOGIT_CLIP = 35.0
_LOG_CLIP = 700.0


@dataclass(frozen=True)
class FilterConfig:
    """Settings of one filter run.

    Exactly one of ``x0`` (known initial size) and ``x0_prior`` (inclusive
    bounds of a discrete uniform prior) is used; ``x0_prior`` wins when set.
    """

    n_particles: int = 2000
    delta: float = 0.95
    phi: float = 0.5
    x0: Optional[int] = 100
    x0_prior: Optional[tuple] = None
    transition: str = "conditional"
    kernel: str = "transformed"
    resampling: str = "multinomial"
    jitter: float = 0.0
    round_mu: bool = False
    max_kernel_redraws: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise DomainError("n_particles must be positive")
        shrinkage_constants(self.delta)
        if not 0.0 <= self.phi <= 1.0:
            raise DomainError("phi must lie in [0, 1]")
        if self.x0_prior is not None:
            lo, hi = (int(v) for v in self.x0_prior)
            if not 0 <= lo <= hi:
                raise DomainError(f"x0 prior bounds must satisfy 0 <= lo <= hi, got {self.x0_prior}")
            object.__setattr__(self, "x0_prior", (lo, hi))
        elif self.x0 is None or int(self.x0) < 0:
            raise DomainError("need a known x0 >= 0 or an x0 prior")
        if self.transition not in ("conditional", "marginal"):
            raise DomainError(f"unknown transition mode {self.transition!r}")
        if self.kernel not in ("transformed", "natural"):
            raise DomainError(f"unknown kernel space {self.kernel!r}")
        if self.resampling not in ("multinomial", "systematic"):
            raise DomainError(f"unknown resampling scheme {self.resampling!r}")
        if self.jitter < 0:
            raise DomainError("jitter must be nonnegative")

    @property
    def x0_mode(self) -> str:
        return "known" if self.x0_prior is None else "discrete_uniform"

    def to_dict(self):
        d = asdict(self)
        d["x0_mode"] = self.x0_mode
        if self.x0_prior is not None:
            d["x0_prior"] = list(self.x0_prior)
            d["x0"] = None
        return d


def shrinkage_constants(delta):
    """Kernel shrinkage ``a = (3 delta - 1) / (2 delta)`` and ``h^2 = 1 - a^2``."""
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"discount delta must lie in (0, 1], got {delta}")
    a = (3.0 * delta - 1.0) / (2.0 * delta)
    return a, 1.0 - a * a


def encode(theta, kernel="transformed"):
    theta = np.asarray(theta, dtype=float)
    if kernel == "natural":
        return theta.copy()
    out = np.empty_like(theta)
    out[..., 0] = logit(theta[..., 0])
    out[..., 1] = np.log(theta[..., 1])
    return out


def decode(theta_k, kernel="transformed"):
    theta_k = np.asarray(theta_k, dtype=float)
    if kernel == "natural":
        return theta_k.copy()
    out = np.empty_like(theta_k)
    out[..., 0] = expit(np.clip(theta_k[..., 0], -_LOGIT_CLIP, _LOGIT_CLIP))
    out[..., 1] = np.exp(np.clip(theta_k[..., 1], -_LOG_CLIP, _LOG_CLIP))
    return out


def _valid(theta):
    return (theta[:, 0] > 0.0) & (theta[:, 0] < 1.0) & (theta[:, 1] > 0.0) & np.isfinite(theta[:, 1])


class Particle(NamedTuple):
    x: int
    theta: tuple
    theta_k: tuple


@dataclass
class ParticleCloud:
    """Weighted particles at generation ``t``.

    ``z`` is the observation assimilated last (the conditional transition
    needs it). Arrays are never mutated after construction.
    """

    x: np.ndarray
    theta: np.ndarray
    theta_k: np.ndarray
    weights: np.ndarray
    t: int
    z: int
    ess: float
    log_evidence_increment: float
    unique_ancestors: int = 0

    def __len__(self):
        return len(self.weights)

    @property
    def particles(self):
        return [self.particle(i) for i in range(len(self))]

    def particle(self, i) -> Particle:
        return Particle(int(self.x[i]), tuple(self.theta[i]), tuple(self.theta_k[i]))

    def moments(self):
        """Weighted mean and variance of ``pi``, ``lam`` and ``x``."""
        w = self.weights
        out = {}
        for name, col in (("pi", self.theta[:, 0]), ("lambda", self.theta[:, 1]), ("x", self.x.astype(float))):
            mean = float(w @ col)
            out[name] = {"mean": mean, "var": float(w @ (col - mean) ** 2)}
        return out


@dataclass
class FilterResult:
    final_cloud: ParticleCloud
    history: list
    diagnostics: dict = field(default_factory=dict)


def _normalize_log(logw, step):
    with np.errstate(invalid="ignore"):
        top = np.max(logw)
    if not np.isfinite(top):
        raise DegeneracyError("all particle weights are zero", step=step)
    w = np.exp(logw - top)
    total = w.sum()
    return w / total, top + np.log(total)


def init_cloud(z, config: FilterConfig, rng: RngStream, theta=None) -> ParticleCloud:
    """Draw the prior cloud and assimilate ``Z_0``.

    ``pi`` is uniform on the part of (0, 1) where the constant-mean curve
    through ``m_tilde(z)`` has positive ``lam``, and ``lam`` is read off that
    curve. Passing ``theta`` replaces the prior by a point mass.
    """
    z = np.asarray(z)
    n = config.n_particles
    gen = rng.generator
    if theta is None:
        m = m_tilde(z)
        arc = feasible_pi_range(m)
        if arc is None:
            raise PriorInfeasibleError(f"no pi in (0, 1) gives lambda > 0 at m={m}")
        lo, hi = arc
        pi = lo + (hi - lo) * gen.random(n)
        bad = (pi <= lo) | (pi >= hi)
        while np.any(bad):
            pi[bad] = lo + (hi - lo) * gen.random(int(bad.sum()))
            bad = (pi <= lo) | (pi >= hi)
        lam = (m - (1.0 - pi)) / (1.0 - pi + config.phi * pi)
        thetas = np.column_stack([pi, lam])
    else:
        thetas = np.tile(np.asarray(theta, dtype=float), (n, 1))
        if not np.all(_valid(thetas)):
            raise DomainError(f"theta must lie in (0,1)x(0,inf), got {theta}")
    if config.x0_prior is None:
        x = np.full(n, int(config.x0), dtype=np.int64)
    else:
        lo_x, hi_x = config.x0_prior
        x = gen.integers(lo_x, hi_x + 1, size=n, dtype=np.int64)

    z0 = int(z[0])
    loglik = binomial_log_pmf(x, z0, thetas[:, 0])
    weights, log_total = _normalize_log(loglik, step=0)
    return ParticleCloud(
        x=x,
        theta=thetas,
        theta_k=encode(thetas, config.kernel),
        weights=weights,
        t=0,
        z=z0,
        ess=effective_sample_size(weights),
        log_evidence_increment=float(log_total - np.log(n)),
        unique_ancestors=n,
    )


def _kernel_draw(locs, cov, config, rng, step):
    draws = mvn2_sample(locs, cov, rng)
    if config.kernel == "transformed":
        return draws
    bad = ~_valid(draws)
    for _ in range(config.max_kernel_redraws):
        if not np.any(bad):
            return draws
        draws[bad] = mvn2_sample(locs[bad], cov, rng)
        bad = ~_valid(draws)
    if np.any(bad):
        raise DegeneracyError("kernel kept proposing parameters outside the valid region", step=step)
    return draws


def lw_step(cloud: ParticleCloud, z_next: int, config: FilterConfig, rng: RngStream) -> ParticleCloud:
    """Assimilate ``z_next`` and return the cloud at generation ``t + 1``."""
    z_next = int(z_next)
    if z_next < 0:
        raise DomainError("observations must be nonnegative")
    step = cloud.t + 1
    n = config.n_particles
    a, h2 = shrinkage_constants(config.delta)
    w = cloud.weights
    theta, theta_k, x = cloud.theta, cloud.theta_k, cloud.x

    # step 1: kernel locations and the expected next state
    center, V = weighted_mean_cov(theta_k, w)
    if config.jitter:
        V = V + config.jitter * np.eye(2)
    locs = a * theta_k + (1.0 - a) * center
    pi_locs = decode(locs, config.kernel)[:, 0]
    if config.kernel == "natural":
        pi_locs = np.clip(pi_locs, 1e-12, 1.0 - 1e-12)
    if config.transition == "conditional":
        mu = _transition_mean(x, cloud.z, theta[:, 1], config.phi)
    else:
        pi, lam = theta[:, 0], theta[:, 1]
        mu = x * ((1.0 - pi) * (lam + 1.0) + config.phi * lam * pi)
    if config.round_mu:
        mu = np.rint(mu)
    # zero-weight particles may hold x < z, which has no meaningful mean
    alive = w > 0
    # a size below z_next would give a zero first-stage weight to particles
    # that can still produce z_next
    mu = np.where(alive, np.maximum(mu, z_next), 0.0)

    # step 2: auxiliary indices from weight x predictive likelihood
    with np.errstate(divide="ignore"):
        first_stage = binomial_log_pmf(mu, z_next, pi_locs)
        log_first = np.where(alive, np.log(w) + first_stage, -np.inf)
    probs, log_first_total = _normalize_log(log_first, step)
    k = resample_indices(probs, n, rng, config.resampling)

    # step 3: parameters from the k-th kernel component
    cov = h2 * V
    if not np.any(cov):
        new_theta_k = theta_k[k]
        new_theta = theta[k]
    else:
        new_theta_k = _kernel_draw(locs[k], cov, config, rng, step)
        new_theta = decode(new_theta_k, config.kernel)

    # step 4: propagate the state
    if config.transition == "conditional":
        new_x = _transition_sample(x[k], cloud.z, new_theta[:, 1], config.phi, rng)
    else:
        new_x = _transition_sample_marginal(x[k], new_theta[:, 0], new_theta[:, 1], config.phi, rng)

    # step 5: correct for the first-stage guess
    log_w = binomial_log_pmf(new_x, z_next, new_theta[:, 0]) - first_stage[k]
    weights, log_second_total = _normalize_log(log_w, step)

    return ParticleCloud(
        x=np.asarray(new_x, dtype=np.int64),
        theta=new_theta,
        theta_k=new_theta_k,
        weights=weights,
        t=step,
        z=z_next,
        ess=effective_sample_size(weights),
        log_evidence_increment=float(log_first_total + log_second_total - np.log(n)),
        unique_ancestors=int(len(np.unique(k))),
    )


def _summary_row(cloud):
    row = {"t": cloud.t, "z": cloud.z}
    for name, mom in cloud.moments().items():
        row[f"{name}_mean"] = mom["mean"]
        row[f"{name}_var"] = mom["var"]
    row["ess"] = cloud.ess
    row["log_evidence_increment"] = cloud.log_evidence_increment
    row["unique_ancestors"] = cloud.unique_ancestors
    return row


def run_filter(z, config: FilterConfig, rng: Optional[RngStream] = None, theta=None) -> FilterResult:
    """Filter the whole observed series ``Z_0..Z_n``.

    ``rng`` only contributes its seed (default ``config.seed``); each
    generation gets its own stream. Degeneracy errors carry the failing
    generation in ``.step``.
    """
    z = np.asarray(z)
    if len(z) < 2:
        raise DomainError("need at least two observations")
    seed = config.seed if rng is None else rng.seed
    cloud = init_cloud(z, config, RngStream(seed, 0), theta=theta)
    history = [_summary_row(cloud)]
    low_ess = []
    for t in range(1, len(z)):
        cloud = lw_step(cloud, z[t], config, RngStream(seed, t))
        history.append(_summary_row(cloud))
        if cloud.ess < 0.1 * config.n_particles:
            low_ess.append(t)
    diagnostics = {
        "low_ess_steps": low_ess,
        "unique_ancestors": [row["unique_ancestors"] for row in history[1:]],
        "log_evidence": float(sum(row["log_evidence_increment"] for row in history)),
        "min_ess": float(min(row["ess"] for row in history)),
    }
    return FilterResult(cloud, history, diagnostics)
