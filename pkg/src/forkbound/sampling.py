"""Sample containers and order-statistics quantile estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom, norm

from .errors import InsufficientSamplesError, InvalidSpecError

__all__ = ["SampleSet", "QuantileEstimate", "estimate_quantile"]


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    metric: str
    sample_interval: int
    seed: int
    n_jobs: int


@dataclass(frozen=True)
class QuantileEstimate:
    level: float
    value: float
    ci_lo: float
    ci_hi: float
    confidence: float


def estimate_quantile(samples: SampleSet, p: float, gamma: float = 0.682) -> QuantileEstimate:
    """p-quantile point estimate with a binomial order-statistics confidence interval.

    The point estimate is the ceil(n p)-th order statistic.  For
    n p (1-p) > 25 the CI order-statistic indices come from the normal
    approximation n p -+ z sqrt(n p (1-p)); otherwise the exact binomial
    tails are widened until they cover gamma.
    """
    if not (0 < p < 1):
        raise InvalidSpecError(f"quantile level must be in (0, 1), got {p}")
    if not (0 < gamma < 1):
        raise InvalidSpecError(f"confidence must be in (0, 1), got {gamma}")
    values = np.sort(np.asarray(samples.values, dtype=float))
    n = values.size
    min_required = math.ceil(10.0 / (1.0 - p))
    if n < min_required:
        raise InsufficientSamplesError(
            f"{n} samples cannot resolve the {p}-quantile; need >= {min_required}",
            min_required)

    rank = min(max(math.ceil(n * p), 1), n)
    value = values[rank - 1]

    npq = n * p * (1.0 - p)
    if npq > 25.0:
        z = norm.ppf(0.5 * (1.0 + gamma))
        half = z * math.sqrt(npq)
        j = math.ceil(n * p - half)
        l = math.ceil(n * p + half)
    else:
        j = int(binom.ppf(0.5 * (1.0 - gamma), n, p))
        l = int(binom.ppf(0.5 * (1.0 + gamma), n, p)) + 1
        # widen until the enclosed binomial mass reaches gamma
        while binom.cdf(l - 1, n, p) - binom.cdf(j - 1, n, p) < gamma and (j > 1 or l < n):
            if j > 1:
                j -= 1
            if l < n:
                l += 1
    j = min(max(j, 1), n)
    l = min(max(l, 1), n)
    return QuantileEstimate(level=p, value=value, ci_lo=values[j - 1], ci_hi=values[l - 1],
                            confidence=gamma)
