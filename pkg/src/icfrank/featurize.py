"""Outlier statistics of decomposition components.

For every component (each mode function and the trend) and every channel
(the component itself, its local maxima ``U`` and local minima ``L``) ten
statistics are computed: mean and standard deviation of the whole channel
and of the terms beyond ``m + sigma``, ``m + 2 sigma``, ``m - sigma`` and
``m - 2 sigma``. That is 30 whole-series values; the same 30 values on each
of ``K`` contiguous blocks are summarized by their mean, first and third
quartile, giving 120 features per component.

Missing values are NaN: a tail with fewer than two terms has no statistics,
and an aggregate over only missing values stays missing.
"""

import re
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np

from .errors import InsufficientDataError, ValidationError

DEFAULT_SUBSERIES = 50
MIN_BLOCK = 4

AGGREGATORS = ("whole", "mean", "q1", "q3")
AGG_PREFIX = {"whole": "", "mean": "m", "q1": "q", "q3": "Q"}
STATISTICS = ("m", "sigma")
THRESHOLDS = (0, 1, 2, -1, -2)
CHANNELS = ("0", "U", "L")

PER_COMPONENT = len(AGGREGATORS) * len(STATISTICS) * len(THRESHOLDS) * len(CHANNELS)


class FeatureId(NamedTuple):
    component: object  # 1-based mode index or "R"
    aggregator: str
    statistic: str
    threshold: int
    channel: str

    @property
    def name(self):
        return feature_name(self)


@dataclass
class OutlierStats:
    m: float
    sigma: float
    m_p1: float
    sigma_p1: float
    m_p2: float
    sigma_p2: float
    m_n1: float
    sigma_n1: float
    m_n2: float
    sigma_n2: float

    def as_array(self):
        """Shape (2, 5): rows m/sigma, columns thresholds 0, +1, +2, -1, -2."""
        return np.array([
            [self.m, self.m_p1, self.m_p2, self.m_n1, self.m_n2],
            [self.sigma, self.sigma_p1, self.sigma_p2, self.sigma_n1, self.sigma_n2],
        ])


def tail_moments(x, threshold, upper=True):
    """Mean and population std of terms strictly beyond ``threshold``.

    NaN for both when fewer than two terms qualify.
    """
    tail = x[x > threshold] if upper else x[x < threshold]
    if len(tail) < 2:
        return np.nan, np.nan
    return float(tail.mean()), float(tail.std())


def _stats_array(x):
    m = float(x.mean())
    s = float(x.std())
    out = np.empty((2, 5))
    out[0, 0], out[1, 0] = m, s
    for col, thr in enumerate(THRESHOLDS[1:], start=1):
        out[:, col] = tail_moments(x, m + thr * s, upper=thr > 0)
    return out


def outlier_stats(series):
    """The ten mean/std statistics of a series and of its four tails."""
    x = np.asarray(series, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError(f"outlier statistics need >= 2 values, got {len(x)}")
    a = _stats_array(x)
    return OutlierStats(
        m=a[0, 0], sigma=a[1, 0],
        m_p1=a[0, 1], sigma_p1=a[1, 1],
        m_p2=a[0, 2], sigma_p2=a[1, 2],
        m_n1=a[0, 3], sigma_n1=a[1, 3],
        m_n2=a[0, 4], sigma_n2=a[1, 4],
    )


def local_extrema(series):
    """Values at strict local maxima and minima, in time order.

    A plateau counts once if both neighbouring runs are lower (higher).
    Endpoints are never extrema.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < 3:
        return np.empty(0), np.empty(0)
    keep = np.empty(len(x), dtype=bool)
    keep[0] = True
    keep[1:] = x[1:] != x[:-1]
    runs = x[keep]
    mid, left, right = runs[1:-1], runs[:-2], runs[2:]
    return mid[(mid > left) & (mid > right)], mid[(mid < left) & (mid < right)]


def split(series, K):
    """``K`` contiguous blocks of ``len // K`` samples; the remainder is dropped."""
    x = np.asarray(series, dtype=float)
    K = int(K)
    if K < 1:
        raise ValidationError("K must be >= 1")
    if len(x) < K * MIN_BLOCK:
        raise InsufficientDataError(
            f"series of length {len(x)} too short for {K} blocks of >= {MIN_BLOCK}"
        )
    size = len(x) // K
    return list(x[: K * size].reshape(K, size))


def _channel_stats(x):
    """(3, 2, 5) array: channel x statistic x threshold."""
    U, L = local_extrema(x)
    out = np.full((3, 2, 5), np.nan)
    for c, ch in enumerate((x, U, L)):
        if len(ch) >= 2:
            out[c] = _stats_array(ch)
    return out


def _nan_aggregate(values):
    """Mean, q1, q3 over axis 0 ignoring NaN (linear-interpolated quartiles)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(values, axis=0)
        q1, q3 = np.nanpercentile(values, [25, 75], axis=0)
    return mean, q1, q3


def component_values(component, K=DEFAULT_SUBSERIES):
    """120 feature values of one component, in canonical order.

    Layout is ``[aggregator, statistic, threshold, channel]`` flattened.
    """
    x = np.asarray(component, dtype=float)
    blocks = split(x, K)
    whole = _channel_stats(x)
    per_block = np.stack([_channel_stats(b) for b in blocks])
    mean, q1, q3 = _nan_aggregate(per_block)
    # (agg, channel, stat, thr) -> (agg, stat, thr, channel)
    stacked = np.stack([whole, mean, q1, q3]).transpose(0, 2, 3, 1)
    return stacked.reshape(-1)


def component_ids(component):
    return [
        FeatureId(component, agg, stat, thr, ch)
        for agg in AGGREGATORS
        for stat in STATISTICS
        for thr in THRESHOLDS
        for ch in CHANNELS
    ]


def component_features(component, K=DEFAULT_SUBSERIES, label=1):
    """``(FeatureId, value)`` pairs for one component; ``label`` names it."""
    return list(zip(component_ids(label), component_values(component, K)))


def feature_ids(num_modes):
    ids = []
    for comp in list(range(1, num_modes + 1)) + ["R"]:
        ids.extend(component_ids(comp))
    return ids


def feature_names(num_modes):
    return [feature_name(f) for f in feature_ids(num_modes)]


@dataclass
class FeatureVector:
    id: str
    features: List[FeatureId]
    values: np.ndarray
    label: object = None

    @property
    def names(self):
        return [feature_name(f) for f in self.features]

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def __len__(self):
        return len(self.values)


def featurize_subject(decomposition, K=DEFAULT_SUBSERIES, id="", label=None):
    """Features of every mode function and the trend, canonically ordered."""
    values = []
    labels = list(range(1, decomposition.num_modes + 1)) + ["R"]
    for comp_label, comp in zip(labels, decomposition.components()):
        try:
            values.append(component_values(comp, K))
        except InsufficientDataError as exc:
            raise InsufficientDataError(f"component {comp_label}: {exc}") from None
    return FeatureVector(
        id=id,
        features=feature_ids(decomposition.num_modes),
        values=np.concatenate(values),
        label=label,
    )


def _thr_text(thr):
    return "0" if thr == 0 else f"{thr:+d}"


def feature_name(fid):
    """Compact notation, e.g. ``sigma[1,+2,U]`` or ``msigma[2,+2,0]``."""
    return (f"{AGG_PREFIX[fid.aggregator]}{fid.statistic}"
            f"[{fid.component},{_thr_text(fid.threshold)},{fid.channel}]")


_NAME_RE = re.compile(r"^([mqQ]?)(m|sigma)\[(\d+|R),(0|[+-][12]),(0|U|L)\]$")
_PREFIX_AGG = {v: k for k, v in AGG_PREFIX.items()}


def parse_feature_name(name):
    """Inverse of :func:`feature_name`."""
    match = _NAME_RE.match(name)
    if match is None:
        raise ValidationError(f"not a feature name: {name!r}")
    agg, stat, comp, thr, ch = match.groups()
    # "mm[...]" is mean-aggregated mean, "m[...]" the whole-series mean
    component = "R" if comp == "R" else int(comp)
    if component != "R" and component < 1:
        raise ValidationError(f"not a feature name: {name!r}")
    return FeatureId(component, _PREFIX_AGG[agg], stat, int(thr), ch)
