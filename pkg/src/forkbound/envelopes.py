"""(sigma, rho) envelopes of arrival and service processes.

An Envelope is an evaluatable pair of functions theta -> sigma(theta),
theta -> rho(theta) on an open theta interval.  Arrival envelopes bound the
MGF of cumulative inter-arrival times from below (rho nonincreasing in
theta); service envelopes bound cumulative service from above (rho
nondecreasing).  Constructions compose: thinning of thinning, fork-join of
Erlang tasks, aggregation for hybrid systems all nest without special cases.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import gammaincc

from .distributions import (
    Deterministic,
    DistributionSpec,
    Erlang,
    Exponential,
    Uniform,
    Weibull,
)
from .errors import InvalidSpecError, ThetaDomainError

__all__ = [
    "Direction",
    "Envelope",
    "RoundRobin",
    "RandomAssignment",
    "gi_arrival_envelope",
    "gi_service_envelope",
    "thinned_arrival_envelope",
    "splitmerge_service_envelope",
    "replication_service_envelope",
    "forkjoin_service_envelope",
    "aggregate_tasks_envelope",
]

_TRUNCATION_FLOOR = 1e-14
_QUAD_ABS_TOL = 1e-12


class Direction(enum.Enum):
    ARRIVAL_LOWER = "arrival_lower"
    SERVICE_UPPER = "service_upper"


@dataclass(frozen=True)
class RoundRobin:
    """Deterministic cyclic job-to-server assignment."""


@dataclass(frozen=True)
class RandomAssignment:
    """iid random assignment; p is the probability of the server under study."""

    p: float

    def __post_init__(self):
        if not (0 < self.p <= 1):
            raise InvalidSpecError(f"assignment probability must be in (0, 1], got {self.p}")


@dataclass(frozen=True)
class Envelope:
    sigma: Callable[[float], float]
    rho: Callable[[float], float]
    theta_lo: float
    theta_hi: float
    direction: Direction
    rho_upper: Optional[Callable[[float], float]] = None

    def check_theta(self, theta: float) -> None:
        if not (self.theta_lo < theta < self.theta_hi):
            raise ThetaDomainError(
                f"theta={theta} outside admissible domain ({self.theta_lo}, {self.theta_hi})"
            )

    def sigma_at(self, theta: float) -> float:
        self.check_theta(theta)
        return self.sigma(theta)

    def rho_at(self, theta: float) -> float:
        self.check_theta(theta)
        return self.rho(theta)


def _zero(_theta: float) -> float:
    return 0.0


def gi_arrival_envelope(dist: DistributionSpec) -> Envelope:
    """Minimal lower envelope of a renewal arrival process.

    rho(theta) = -(1/theta) ln E[e^(-theta A)], finite for every theta > 0.
    """

    def rho(theta: float) -> float:
        return -math.log(dist.mgf(-theta)) / theta

    return Envelope(sigma=_zero, rho=rho, theta_lo=0.0, theta_hi=math.inf,
                    direction=Direction.ARRIVAL_LOWER)


def gi_service_envelope(dist: DistributionSpec) -> Envelope:
    """Minimal upper envelope of iid service increments.

    rho(theta) = (1/theta) ln E[e^(theta S)] on (0, MGF abscissa).
    """
    hi = dist.mgf_abscissa()
    if hi <= 0:
        raise InvalidSpecError(f"{dist} has no finite MGF for theta > 0; cannot build a service envelope")

    def rho(theta: float) -> float:
        return math.log(dist.mgf(theta)) / theta

    return Envelope(sigma=_zero, rho=rho, theta_lo=0.0, theta_hi=hi,
                    direction=Direction.SERVICE_UPPER)


def thinned_arrival_envelope(base: Envelope, k: int, policy) -> Envelope:
    """Envelope of the per-server sub-stream after splitting a renewal stream k ways."""
    if k < 1:
        raise InvalidSpecError(f"thinning requires k >= 1, got {k}")
    if base.direction is not Direction.ARRIVAL_LOWER:
        raise InvalidSpecError("thinning applies to arrival envelopes")

    if isinstance(policy, RoundRobin):
        if k == 1:
            return base

        def rho(theta: float) -> float:
            return k * base.rho(theta)

        return Envelope(sigma=_zero, rho=rho, theta_lo=base.theta_lo,
                        theta_hi=base.theta_hi, direction=Direction.ARRIVAL_LOWER)

    if isinstance(policy, RandomAssignment):
        p = policy.p

        def rho(theta: float) -> float:
            m = math.exp(-theta * base.rho(theta))
            if (1.0 - p) * m >= 1.0:
                raise ThetaDomainError(
                    f"random thinning undefined at theta={theta}: e^(-theta rho) = {m} >= 1/(1-p)"
                )
            return -math.log(p * m / (1.0 - (1.0 - p) * m)) / theta

        return Envelope(sigma=_zero, rho=rho, theta_lo=base.theta_lo,
                        theta_hi=base.theta_hi, direction=Direction.ARRIVAL_LOWER)

    raise InvalidSpecError(f"unknown thinning policy {policy!r}")


def _log_survival(dist: DistributionSpec, x: float) -> float:
    if isinstance(dist, Exponential):
        return -dist.rate * x
    if isinstance(dist, Erlang):
        s = gammaincc(dist.shape, dist.rate * x)
        return math.log(s) if s > 0 else -math.inf
    if isinstance(dist, Weibull):
        return -((x / dist.scale) ** dist.shape)
    if isinstance(dist, Uniform):
        if x <= dist.lo:
            return 0.0
        if x >= dist.hi:
            return -math.inf
        return math.log((dist.hi - x) / (dist.hi - dist.lo))
    if isinstance(dist, Deterministic):
        return 0.0 if x < dist.value else -math.inf
    raise InvalidSpecError(f"unsupported distribution {dist!r}")


def _transform_mgf(dist: DistributionSpec, k: int, theta: float, extreme: str) -> float:
    """MGF of max (extreme='max') or min (extreme='min') of k iid draws, by quadrature.

    Uses E[e^(theta X)] = 1 + theta * integral of e^(theta x) P[X > x] dx with the
    integral truncated where the integrand falls below 1e-14.
    """

    def log_integrand(x: float) -> float:
        ls = _log_survival(dist, x)
        if extreme == "min":
            tail = k * ls
        else:
            # 1 - F^k with F = 1 - e^(ls); stable at both ends
            if ls == 0.0:
                tail = 0.0
            else:
                one_minus = -math.expm1(k * math.log1p(-math.exp(ls))) if ls > -745 else 0.0
                tail = math.log(one_minus) if one_minus > 0 else -math.inf
        return theta * x + tail

    # doubling search for the truncation point
    x_hi = max(dist.mean(), 1.0)
    log_floor = math.log(_TRUNCATION_FLOOR)
    for _ in range(200):
        if log_integrand(x_hi) < log_floor:
            break
        x_hi *= 2.0
        if x_hi > 1e12:
            raise ThetaDomainError(
                f"{extreme}-transform MGF of {dist} does not converge at theta={theta}"
            )
    else:
        raise ThetaDomainError(f"{extreme}-transform MGF of {dist} does not converge at theta={theta}")

    def integrand(x: float) -> float:
        lg = log_integrand(x)
        return math.exp(lg) if lg > -745 else 0.0

    val, _err = integrate.quad(integrand, 0.0, x_hi, epsabs=_QUAD_ABS_TOL, epsrel=1e-11, limit=400)
    return 1.0 + theta * val


def splitmerge_service_envelope(task_dist: DistributionSpec, k: int) -> Envelope:
    """Service envelope when every job occupies all k servers for max_i Q_i.

    Closed form for exponential tasks (MGF of the max is prod_j j*mu/(j*mu - theta));
    adaptive quadrature otherwise.  rho_upper carries the ln(k E[e^(theta Q)])/theta
    quick estimate.
    """
    if k < 1:
        raise InvalidSpecError(f"split-merge requires k >= 1, got {k}")
    if k == 1:
        return gi_service_envelope(task_dist)

    hi = task_dist.mgf_abscissa()
    if hi <= 0:
        raise InvalidSpecError(f"{task_dist} has no finite MGF for theta > 0")

    if isinstance(task_dist, Exponential):
        mu = task_dist.rate

        def rho(theta: float) -> float:
            log_mgf = sum(math.log(j * mu / (j * mu - theta)) for j in range(1, k + 1))
            return log_mgf / theta

    elif isinstance(task_dist, Deterministic):
        value = task_dist.value

        def rho(_theta: float) -> float:
            return value

    else:

        def rho(theta: float) -> float:
            return math.log(_transform_mgf(task_dist, k, theta, "max")) / theta

    def rho_upper(theta: float) -> float:
        return math.log(k * task_dist.mgf(theta)) / theta

    return Envelope(sigma=_zero, rho=rho, theta_lo=0.0, theta_hi=hi,
                    direction=Direction.SERVICE_UPPER, rho_upper=rho_upper)


def replication_service_envelope(replica_dist: DistributionSpec, k: int) -> Envelope:
    """Service envelope when each job runs k purged replicas: effective time min_i L_i."""
    if k < 1:
        raise InvalidSpecError(f"replication requires k >= 1, got {k}")
    if k == 1:
        return gi_service_envelope(replica_dist)

    if isinstance(replica_dist, Exponential):
        return gi_service_envelope(Exponential(k * replica_dist.rate))
    if isinstance(replica_dist, Deterministic):
        return gi_service_envelope(replica_dist)

    # the k-fold survival power multiplies an exponential tail rate by k
    single = replica_dist.mgf_abscissa()
    hi = k * single if math.isfinite(single) else math.inf
    if hi <= 0:
        raise InvalidSpecError(f"{replica_dist} has no finite MGF for theta > 0")

    def rho(theta: float) -> float:
        return math.log(_transform_mgf(replica_dist, k, theta, "min")) / theta

    return Envelope(sigma=_zero, rho=rho, theta_lo=0.0, theta_hi=hi,
                    direction=Direction.SERVICE_UPPER)


def forkjoin_service_envelope(task_envelope: Envelope, k: int) -> Envelope:
    """Envelope of a k-server fork-join stage: burst grows by ln(k)/theta, rate unchanged."""
    if k < 1:
        raise InvalidSpecError(f"fork-join requires k >= 1, got {k}")
    if task_envelope.direction is not Direction.SERVICE_UPPER:
        raise InvalidSpecError("fork-join transform applies to service envelopes")
    if k == 1:
        return task_envelope
    log_k = math.log(k)

    def sigma(theta: float) -> float:
        return task_envelope.sigma(theta) + log_k / theta

    return Envelope(sigma=sigma, rho=task_envelope.rho, theta_lo=task_envelope.theta_lo,
                    theta_hi=task_envelope.theta_hi, direction=Direction.SERVICE_UPPER)


def aggregate_tasks_envelope(task_envelope: Envelope, a: int) -> Envelope:
    """Envelope of a iid tasks served back-to-back by one server (job service in hybrids)."""
    if a < 1:
        raise InvalidSpecError(f"aggregation requires a >= 1, got {a}")
    if task_envelope.direction is not Direction.SERVICE_UPPER:
        raise InvalidSpecError("aggregation applies to service envelopes")
    if a == 1:
        return task_envelope

    def sigma(theta: float) -> float:
        return a * task_envelope.sigma(theta)

    def rho(theta: float) -> float:
        return a * task_envelope.rho(theta)

    return Envelope(sigma=sigma, rho=rho, theta_lo=task_envelope.theta_lo,
                    theta_hi=task_envelope.theta_hi, direction=Direction.SERVICE_UPPER)
