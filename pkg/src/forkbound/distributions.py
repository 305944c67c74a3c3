"""Parametric inter-arrival / service time distributions.

Every distribution exposes the minimal surface the rest of the package
needs: mean, MGF E[e^(theta X)] with its convergence abscissa, CDF,
and a single-uniform inverse CDF used by the counter-based sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, gammaincinv

from .errors import InvalidSpecError, ThetaDomainError

__all__ = [
    "Deterministic",
    "Exponential",
    "Erlang",
    "Weibull",
    "Uniform",
    "DistributionSpec",
    "parse_distribution",
    "distribution_from_dict",
    "distribution_to_dict",
]


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise InvalidSpecError(f"deterministic value must be > 0, got {self.value}")

    def mean(self) -> float:
        return self.value

    def mgf_abscissa(self) -> float:
        return math.inf

    def mgf(self, theta: float) -> float:
        return math.exp(theta * self.value)

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def ppf(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidSpecError(f"exponential rate must be > 0, got {self.rate}")

    def mean(self) -> float:
        return 1.0 / self.rate

    def mgf_abscissa(self) -> float:
        return self.rate

    def mgf(self, theta: float) -> float:
        if theta >= self.rate:
            raise ThetaDomainError(f"MGF of Exponential(rate={self.rate}) diverges at theta={theta}")
        return self.rate / (self.rate - theta)

    def cdf(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float))

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate


@dataclass(frozen=True)
class Erlang:
    shape: int
    rate: float

    def __post_init__(self):
        if not (isinstance(self.shape, (int, np.integer)) and self.shape >= 1):
            raise InvalidSpecError(f"erlang shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise InvalidSpecError(f"erlang rate must be > 0, got {self.rate}")

    def mean(self) -> float:
        return self.shape / self.rate

    def mgf_abscissa(self) -> float:
        return self.rate

    def mgf(self, theta: float) -> float:
        if theta >= self.rate:
            raise ThetaDomainError(f"MGF of Erlang(rate={self.rate}) diverges at theta={theta}")
        return (self.rate / (self.rate - theta)) ** self.shape

    def cdf(self, x):
        return gammainc(self.shape, self.rate * np.asarray(x, dtype=float))

    def ppf(self, u):
        return gammaincinv(self.shape, np.asarray(u, dtype=float)) / self.rate


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 0:
            raise InvalidSpecError(f"weibull shape must be > 0, got {self.shape}")
        if not self.scale > 0:
            raise InvalidSpecError(f"weibull scale must be > 0, got {self.scale}")

    def mean(self) -> float:
        return self.scale * gamma_fn(1.0 + 1.0 / self.shape)

    def mgf_abscissa(self) -> float:
        # shape > 1: lighter than exponential tail; shape < 1: heavy tail, no MGF.
        if self.shape > 1:
            return math.inf
        if self.shape == 1:
            return 1.0 / self.scale
        return 0.0

    def mgf(self, theta: float) -> float:
        if self.shape == 1:
            return Exponential(1.0 / self.scale).mgf(theta)
        if theta == 0.0:
            return 1.0
        if theta > 0 and self.shape < 1:
            raise ThetaDomainError(
                f"Weibull(shape={self.shape} < 1) has infinite MGF for theta={theta} > 0"
            )
        c, s = self.shape, self.scale

        def integrand(x):
            z = (x / s) ** c
            return math.exp(theta * x - z) * (c / s) * (x / s) ** (c - 1)

        val, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
        return val

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(-np.power(np.maximum(x, 0.0) / self.scale, self.shape))

    def ppf(self, u):
        return self.scale * np.power(-np.log1p(-np.asarray(u, dtype=float)), 1.0 / self.shape)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise InvalidSpecError(f"uniform support requires 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def mgf_abscissa(self) -> float:
        return math.inf

    def mgf(self, theta: float) -> float:
        if theta == 0.0:
            return 1.0
        width = self.hi - self.lo
        return (math.exp(theta * self.hi) - math.exp(theta * self.lo)) / (theta * width)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def ppf(self, u):
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)


DistributionSpec = Union[Deterministic, Exponential, Erlang, Weibull, Uniform]

_KIND_NAMES = {
    Deterministic: "deterministic",
    Exponential: "exponential",
    Erlang: "erlang",
    Weibull: "weibull",
    Uniform: "uniform",
}


def distribution_to_dict(dist: DistributionSpec) -> dict:
    d = {"type": _KIND_NAMES[type(dist)]}
    d.update({k: (int(v) if isinstance(v, (int, np.integer)) else float(v)) for k, v in vars(dist).items()})
    return d


def distribution_from_dict(d: dict) -> DistributionSpec:
    kind = d.get("type")
    try:
        if kind == "deterministic":
            return Deterministic(float(d["value"]))
        if kind == "exponential":
            return Exponential(float(d["rate"]))
        if kind == "erlang":
            return Erlang(int(d["shape"]), float(d["rate"]))
        if kind == "weibull":
            return Weibull(float(d["shape"]), float(d["scale"]))
        if kind == "uniform":
            return Uniform(float(d["lo"]), float(d["hi"]))
    except KeyError as exc:
        raise InvalidSpecError(f"distribution dict {d} is missing field {exc}") from exc
    raise InvalidSpecError(f"unknown distribution type {kind!r}")


def parse_distribution(text: str) -> DistributionSpec:
    """Parse compact CLI syntax: det:V, exp:RATE, erlang:SHAPE:RATE, weibull:SHAPE:SCALE, uniform:LO:HI."""
    parts = text.split(":")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind in ("det", "deterministic"):
            return Deterministic(float(args[0]))
        if kind in ("exp", "exponential"):
            return Exponential(float(args[0]))
        if kind == "erlang":
            return Erlang(int(args[0]), float(args[1]))
        if kind == "weibull":
            return Weibull(float(args[0]), float(args[1]))
        if kind == "uniform":
            return Uniform(float(args[0]), float(args[1]))
    except (IndexError, ValueError) as exc:
        raise InvalidSpecError(f"cannot parse distribution {text!r}: {exc}") from exc
    raise InvalidSpecError(f"unknown distribution kind {kind!r} in {text!r}")
