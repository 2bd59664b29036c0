"""Synthetic RR-interval cohorts with planted upper-tail structure.

Series are ``base_mean + drift + jitter + bursts``: a single slow sinusoid,
Gaussian jitter, and sparse positive bursts (runs of abnormally long beat
intervals) at Poisson-distributed positions. Healthy subjects get a larger
mean, more jitter and more frequent bursts, so the classes separate on mean
and variance and, more sharply, on upper-tail outlier statistics.

All randomness is PCG64 (numpy) seeded through ``SeedSequence``; subject
``k`` of cohort seed ``s`` uses the stream ``(s, "synth", k)``.
"""

from dataclasses import dataclass, replace

import numpy as np

from ._util import derive_rng
from .ingest import Cohort, TimeSeries
from .errors import ValidationError

DEFAULT_LENGTH = 20_000
FULL_LENGTH = 100_000
MIN_RR = 0.2

BURST_MAX_BEATS = 3
DRIFT_PERIOD_RANGE = (3000.0, 8000.0)  # beats


@dataclass(frozen=True)
class SubjectProfile:
    base_mean: float = 0.8
    base_std: float = 0.05
    burst_rate: float = 0.0  # expected bursts per 1000 beats
    burst_magnitude: float = 4.0  # in units of base_std
    slow_drift_amplitude: float = 0.0
    length: int = DEFAULT_LENGTH

    def __post_init__(self):
        if self.base_mean <= 0:
            raise ValidationError("base_mean must be positive")
        for name in ("base_std", "burst_rate", "burst_magnitude", "slow_drift_amplitude"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.length < 1:
            raise ValidationError("length must be positive")


HEALTHY = SubjectProfile(base_mean=0.86, base_std=0.055, burst_rate=6.0,
                         burst_magnitude=5.0, slow_drift_amplitude=0.06)
CHF = SubjectProfile(base_mean=0.74, base_std=0.045, burst_rate=1.5,
                     burst_magnitude=3.5, slow_drift_amplitude=0.04)


def gen_series(profile, rng):
    n = profile.length
    t = np.arange(n)
    period = rng.uniform(*DRIFT_PERIOD_RANGE)
    phase = rng.uniform(0, 2 * np.pi)
    x = profile.base_mean + profile.slow_drift_amplitude * np.sin(2 * np.pi * t / period + phase)
    x = x + rng.normal(0.0, profile.base_std, n)

    n_bursts = rng.poisson(profile.burst_rate * n / 1000.0)
    starts = rng.integers(0, n, n_bursts)
    widths = rng.integers(1, BURST_MAX_BEATS + 1, n_bursts)
    heights = profile.burst_magnitude * profile.base_std * rng.uniform(0.5, 1.5, n_bursts)
    for s, w, h in zip(starts, widths, heights):
        x[s:s + w] += h
    return np.maximum(x, MIN_RR)


def gen_subject(profile, seed, id="synthetic", label=None):
    """One series from ``profile``, deterministic in ``seed``.

    ``seed`` is an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "subject")
    return TimeSeries(id=id, values=gen_series(profile, rng), label=label)


def _jitter(profile, rng, spread):
    f = np.exp(rng.normal(0.0, spread, 4))
    return replace(profile,
                   base_mean=profile.base_mean * f[0],
                   base_std=profile.base_std * f[1],
                   burst_rate=profile.burst_rate * f[2],
                   slow_drift_amplitude=profile.slow_drift_amplitude * f[3])


def gen_cohort(n_healthy, n_chf, seed=0, length=DEFAULT_LENGTH, spread=0.1,
               healthy=HEALTHY, chf=CHF):
    """Labeled cohort: healthy subjects first, ids ``h000``.. and ``c000``..

    Each subject's profile is the class profile with multiplicative
    log-normal jitter (``spread``) on mean, std, burst rate and drift.
    """
    if n_healthy < 1 or n_chf < 1:
        raise ValidationError("both class counts must be >= 1")
    subjects = []
    k = 0
    for label, count, base, prefix in ((0, n_healthy, healthy, "h"), (1, n_chf, chf, "c")):
        for i in range(count):
            rng = derive_rng(seed, "synth", k)
            profile = _jitter(replace(base, length=length), rng, spread)
            subjects.append(TimeSeries(id=f"{prefix}{i:03d}", values=gen_series(profile, rng), label=label))
            k += 1
    return Cohort(subjects=subjects, provenance=f"synthetic(seed={seed})")
