"""Independent reference computations used only by the tests.

Written with plain loops and closed forms, deliberately sharing no code
with the package.
"""

import math
from collections import Counter

import numpy as np
from scipy import stats


def naive_m_tilde(z):
    num = 0
    for i in range(1, len(z)):
        num += z[i]
    den = 0
    for i in range(0, len(z) - 1):
        den += z[i]
    return num / den


def naive_m_hat_odd(z):
    n = len(z) - 1
    n0 = math.floor((n - 1) / 2)
    num = den = 0
    for k in range(n0 + 1):
        num += z[2 * k + 1]
        den += z[2 * k]
    return num / den, n0, den


def naive_gamma_hat_sq(z):
    n = len(z) - 1
    center = naive_m_tilde(z)
    total = 0.0
    for k in range(1, n + 1):
        ratio = z[k] / (z[k - 1] + 1)
        total += (z[k - 1] + 1) * (ratio - center) ** 2
    return total / n


def naive_gamma_hat_odd_sq(z):
    est, n0, _ = naive_m_hat_odd(z)
    total = 0.0
    for k in range(n0 + 1):
        ratio = z[2 * k + 1] / (z[2 * k] + 1)
        total += (z[2 * k] + 1) * (ratio - est) ** 2
    return total / n0


def hand_gamma2(pi, lam, phi):
    """Closed-form gamma^2 for Poisson offspring, typed out term by term."""
    return (1 - pi) * lam + (1 - pi) ** 2 + (1 - pi) * (lam + 1) ** 2 + phi * lam * pi


def general_gamma2(pi, lam, phi):
    """gamma^2 from the generic mixture formula with Poisson substitutions."""
    m_plus, s2_plus, m_minus, s2_minus = lam + 1, lam, phi * lam, phi * lam
    m = pi * m_minus + (1 - pi) * m_plus
    s2 = pi * s2_minus + (1 - pi) * s2_plus + pi * (1 - pi) * (m_minus - m_plus) ** 2
    return (1 - pi) * m + pi * s2 + (1 + pi) * m ** 2 - 2 * pi * m * m_minus


def enumerate_state_posterior(x0, z0, z1, pi, lam, phi, conditional=True, support=60):
    """Exact p(x_1 | z_0, z_1, theta) for a known initial size ``x0``.

    Returns ``(values, probs)``.
    """
    xs = np.arange(support + 1)
    if conditional:
        base = x0 - z0
        rate = lam * (base + phi * z0)
        prior = np.where(xs >= base, stats.poisson.pmf(xs - base, rate), 0.0)
    else:
        prior = np.zeros(len(xs))
        for d in range(x0 + 1):
            base = x0 - d
            rate = lam * (base + phi * d)
            prior += stats.binom.pmf(d, x0, pi) * np.where(xs >= base, stats.poisson.pmf(xs - base, rate), 0.0)
    like = stats.binom.pmf(z1, xs, pi)
    post = prior * like
    return xs, post / post.sum()


def chisq_gof(samples, pmf, min_expected=5.0):
    """Chi-square goodness of fit of integer samples against a pmf callable.

    Cells with small expected counts are pooled into the tails.
    """
    samples = np.asarray(samples)
    n = len(samples)
    lo, hi = int(samples.min()), int(samples.max())
    support = np.arange(lo, hi + 1)
    probs = np.array([pmf(k) for k in support], dtype=float)
    counts = np.bincount(samples - lo, minlength=len(support)).astype(float)
    left_tail = sum(pmf(k) for k in range(0, lo)) if lo > 0 else 0.0
    probs[0] += left_tail
    probs[-1] += max(0.0, 1.0 - probs.sum())
    exp = probs * n
    obs_cells, exp_cells = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_cells.append(acc_o)
            exp_cells.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and obs_cells:
        obs_cells[-1] += acc_o
        exp_cells[-1] += acc_e
    obs_cells, exp_cells = np.array(obs_cells), np.array(exp_cells)
    exp_cells *= obs_cells.sum() / exp_cells.sum()
    return stats.chisquare(obs_cells, exp_cells).pvalue


def chisq_homogeneity(a, b, min_count=10):
    """Two-sample chi-square test on 1-D integer labels.

    Categories rarer than ``min_count`` in the pooled sample are merged.
    """
    ca, cb = Counter(np.asarray(a).tolist()), Counter(np.asarray(b).tolist())
    keys = sorted(set(ca) | set(cb), key=lambda k: -(ca[k] + cb[k]))
    rows_a, rows_b = [], []
    rare_a = rare_b = 0
    for k in keys:
        if ca[k] + cb[k] >= min_count:
            rows_a.append(ca[k])
            rows_b.append(cb[k])
        else:
            rare_a += ca[k]
            rare_b += cb[k]
    if rare_a + rare_b > 0:
        rows_a.append(rare_a)
        rows_b.append(rare_b)
    table = np.array([rows_a, rows_b])
    return stats.chi2_contingency(table, correction=False).pvalue
