"""Shared statistical machinery: KS tests (including a weighted two-sample
variant with effective-sample-size adjusted p-values) and chi-square
comparisons on pooled count tables.
"""
from __future__ import annotations

import numpy as np
from scipy import stats as sps

from . import constants


def ks_exponential(samples, mean: float):
    """One-sample KS against an exponential with the given mean."""
    res = sps.kstest(np.asarray(samples, dtype=float), "expon", args=(0.0, mean))
    return float(res.statistic), float(res.pvalue)


def ks_two_sample(a, b):
    res = sps.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(res.statistic), float(res.pvalue)


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(w.sum() ** 2 / np.sum(w**2))


def weighted_ks_two_sample(a, weights_a, b, weights_b=None):
    """Two-sample KS with weighted empirical CDFs.

    The p-value uses the asymptotic Kolmogorov law at the effective sample
    size n_eff = (sum w)^2 / sum w^2 of each sample, combined as
    en = n1*n2/(n1+n2); this is the plug-in generalization of the
    equal-weight formula and is what the suite reports as n_eff.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    wa = np.asarray(weights_a, dtype=float)
    wb = np.ones(len(b)) if weights_b is None else np.asarray(weights_b, dtype=float)
    grid = np.unique(np.concatenate([a, b]))
    ia = np.argsort(a)
    ib = np.argsort(b)
    ca = np.concatenate([[0.0], np.cumsum(wa[ia])])
    cb = np.concatenate([[0.0], np.cumsum(wb[ib])])
    fa = ca[np.searchsorted(a[ia], grid, side="right")] / ca[-1]
    fb = cb[np.searchsorted(b[ib], grid, side="right")] / cb[-1]
    d = float(np.max(np.abs(fa - fb)))
    na = effective_sample_size(wa)
    nb = effective_sample_size(wb)
    en = na * nb / (na + nb)
    p = float(sps.kstwobign.sf(d * (np.sqrt(en) + 0.12 + 0.11 / np.sqrt(en))))
    return d, p, en


def pooled_counts(samples, k_max: int = constants.K_MAX) -> np.ndarray:
    """Histogram of integer samples over 0..k_max with a tail bucket."""
    s = np.asarray(samples, dtype=int)
    out = np.zeros(k_max + 2, dtype=float)
    for v in s:
        out[min(v, k_max + 1)] += 1
    return out


def chi_square_two_sample(counts_a, counts_b):
    """Two-sample chi-square on count tables over identical bins; sparse
    bins are pooled until every pooled bin has at least 5 expected."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    keep = (a + b) > 0
    a, b = a[keep], b[keep]
    # pool trailing small bins together
    while len(a) > 2 and min(a[-1] + b[-1], a[-2] + b[-2]) < 5:
        a[-2] += a[-1]
        b[-2] += b[-1]
        a, b = a[:-1], b[:-1]
    k1 = np.sqrt(b.sum() / a.sum())
    k2 = np.sqrt(a.sum() / b.sum())
    stat = float(np.sum((k1 * a - k2 * b) ** 2 / (a + b)))
    dof = len(a) - 1
    p = float(sps.chi2.sf(stat, dof))
    return stat, p, dof
