"""Correlation analyses of outlier statistics against the class label.

Correlation throughout is point-biserial: Pearson's r between a value per
subject and the 0/1 label (1 = CHF). A feature that is larger in healthy
subjects therefore has negative r.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import UndefinedCorrelationError, ValidationError
from .featurize import THRESHOLDS, split, tail_moments

GAUSSIAN_TAIL = float(ndtr(-2.0))  # one-sided mass beyond 2 sigma, ~0.02275
DEFAULT_V_GRID = np.linspace(0.0, 2.0, 21)
MIN_SUBJECTS = 3


@dataclass
class CorrelationCurve:
    x_values: np.ndarray
    r_values: np.ndarray  # NaN where too few subjects had a value

    def __post_init__(self):
        self.x_values = np.asarray(self.x_values, dtype=float)
        self.r_values = np.asarray(self.r_values, dtype=float)
        if self.x_values.shape != self.r_values.shape:
            raise ValidationError("x and r lengths differ")


def point_biserial(values, labels):
    """Pearson correlation of ``values`` with binary ``labels``."""
    v = np.asarray(values, dtype=float)
    lab = np.asarray(labels, dtype=float)
    if v.shape != lab.shape:
        raise ValidationError("values and labels differ in length")
    if not (np.any(lab == 0) and np.any(lab == 1)):
        raise UndefinedCorrelationError("both classes must be present")
    vc = v - v.mean()
    lc = lab - lab.mean()
    denom = np.sqrt((vc @ vc) * (lc @ lc))
    if denom == 0 or np.ptp(v) == 0:
        raise UndefinedCorrelationError("values are constant")
    return float(np.clip((vc @ lc) / denom, -1.0, 1.0))


def _masked_r(values, labels):
    ok = ~np.isnan(values)
    if ok.sum() < MIN_SUBJECTS:
        return np.nan
    try:
        return point_biserial(values[ok], labels[ok])
    except UndefinedCorrelationError:
        return np.nan


def _labels(labels):
    labels = np.asarray(labels)
    if any(lab is None for lab in labels.tolist()):
        raise ValidationError("every subject needs a label")
    return labels.astype(float)


def mean_variance_scatter(cohort):
    """``(id, mean, variance, label)`` per subject from the raw series.

    Variance is the population variance, in seconds squared.
    """
    return [(s.id, float(np.mean(s.values)), float(np.var(s.values)), s.label) for s in cohort]


def block_tail_stats(component, K, v, upper=True):
    """Per-block (mean, std) of terms beyond ``block mean +- v * block std``.

    Returns two arrays of length ``K``; NaN where fewer than two terms qualify.
    """
    means = np.full(K, np.nan)
    stds = np.full(K, np.nan)
    for k, block in enumerate(split(component, K)):
        m, s = block.mean(), block.std()
        thr = m + v * s if upper else m - v * s
        means[k], stds[k] = tail_moments(block, thr, upper=upper)
    return means, stds


def order_stat_correlations(decompositions, labels, component, threshold, K):
    """Correlation curves of the sorted per-block tail mean and tail std.

    For each subject the ``K`` block values of the tail beyond
    ``threshold`` sigmas (one of +-1, +-2) are sorted ascending, missing
    values last; point ``k`` correlates the k-th smallest values across
    subjects with the label. Returns ``(means_curve, stds_curve)``.
    """
    if threshold not in THRESHOLDS or threshold == 0:
        raise ValidationError("threshold must be one of +1, +2, -1, -2")
    labels = _labels(labels)
    rows_m, rows_s = [], []
    for d in decompositions:
        m, s = block_tail_stats(d.component(component), K, abs(threshold), upper=threshold > 0)
        rows_m.append(np.sort(m))
        rows_s.append(np.sort(s))
    ks = np.arange(1, K + 1)
    curves = []
    for rows in (np.array(rows_m), np.array(rows_s)):
        curves.append(CorrelationCurve(ks, [_masked_r(rows[:, k], labels) for k in range(K)]))
    return tuple(curves)


def outlier_balance(decompositions, labels, component):
    """Pooled fractions of samples beyond ``m + 2 sigma`` and ``m - 2 sigma``.

    Thresholds are per subject; counts are pooled within each class.
    Returns ``{label: (upper, lower)}`` plus the Gaussian reference.
    """
    labels = _labels(labels)
    counts = {}
    for d, lab in zip(decompositions, labels):
        x = d.component(component)
        m, s = x.mean(), x.std()
        up, lo, n = counts.get(int(lab), (0, 0, 0))
        counts[int(lab)] = (up + int(np.sum(x > m + 2 * s)), lo + int(np.sum(x < m - 2 * s)), n + len(x))
    fractions = {lab: (up / n, lo / n) for lab, (up, lo, n) in sorted(counts.items())}
    return fractions, GAUSSIAN_TAIL


def v_sweep(decompositions, labels, component, v_grid=DEFAULT_V_GRID, K=50):
    """Correlation with the label of the block-averaged upper-tail std, per v.

    At ``v`` the subject value is the mean over ``K`` blocks of the std of
    terms above ``block mean + v * block std``; blocks with fewer than two
    such terms are skipped.
    """
    labels = _labels(labels)
    v_grid = np.asarray(v_grid, dtype=float)
    r = []
    for v in v_grid:
        vals = []
        for d in decompositions:
            _, stds = block_tail_stats(d.component(component), K, v, upper=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                vals.append(np.nanmean(stds))
        r.append(_masked_r(np.array(vals), labels))
    return CorrelationCurve(v_grid, r)
