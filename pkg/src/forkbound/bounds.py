"""Closed-form tail bounds on waiting and sojourn times, exact oracles, and
the theta optimizer.

Every bound is returned as a TailBound: a finite weighted sum of decaying
exponentials c_i e^(-theta_i tau) (plus, for the single-queue sojourn bounds
evaluated at the removable theta -> mu singularity, terms of the form
c tau e^(-theta tau)).  Bounds come in two flavours per operation: renewal
("gi", alpha = 1, stability slack >= 0 suffices) and general stationary
("gg", alpha > 1, strict slack required).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .envelopes import (
    Envelope,
    RoundRobin,
    aggregate_tasks_envelope,
    thinned_arrival_envelope,
)
from .errors import (
    InfeasibleSystemError,
    InfeasibleThetaError,
    InvalidSpecError,
    ThetaDomainError,
    UnstableError,
)

__all__ = [
    "BoundMeta",
    "TailBound",
    "ExactOracleResult",
    "gg1_bounds",
    "forkjoin_bounds",
    "expected_sojourn_bound",
    "multistage_bounds",
    "thinned_multiserver_bounds",
    "hybrid_bounds",
    "sq_multiserver_bounds",
    "sq_forkjoin_bounds",
    "exact_mm1_sojourn",
    "exact_mmk_waiting",
    "erlang_c",
    "invert_quantile",
    "optimize_theta",
    "feasible_interval",
]

GI = True
GG = False

# relative half-width of the window around theta = mu where the analytic
# limit of the single-queue sojourn bound replaces the singular formula
_MU_LIMIT_WINDOW = 1e-6


@dataclass(frozen=True)
class BoundMeta:
    alpha: float
    stability_slack: float
    beta: float = 1.0
    mode: str = "gi"
    theta_cap: float = math.inf


@dataclass(frozen=True)
class TailBound:
    """P[X > tau] <= sum c_i e^(-theta_i tau) + sum d_j tau e^(-theta_j tau)."""

    terms: tuple
    theta_used: float
    meta: BoundMeta
    linear_terms: tuple = ()

    def evaluate(self, tau: float) -> float:
        acc = 0.0
        for c, th in self.terms:
            acc += c * math.exp(-th * tau)
        for c, th in self.linear_terms:
            acc += c * tau * math.exp(-th * tau)
        return acc

    def quantile(self, epsilon: float) -> float:
        return invert_quantile(self, epsilon)

    def scaled(self, factor: float) -> "TailBound":
        return TailBound(
            terms=tuple((factor * c, th) for c, th in self.terms),
            theta_used=self.theta_used,
            meta=self.meta,
            linear_terms=tuple((factor * c, th) for c, th in self.linear_terms),
        )

    def __str__(self) -> str:
        parts = [f"{c:.9g}*exp(-{th:.9g}*tau)" for c, th in self.terms]
        parts += [f"{c:.9g}*tau*exp(-{th:.9g}*tau)" for c, th in self.linear_terms]
        return " + ".join(parts)


@dataclass(frozen=True)
class ExactOracleResult:
    """An exact tail of the form p_wait * e^(-decay * tau)."""

    kind: str
    p_wait: float
    decay: float

    def tail(self, tau: float) -> float:
        return self.p_wait * math.exp(-self.decay * tau)

    def quantile(self, epsilon: float) -> float:
        if epsilon >= self.p_wait:
            return 0.0
        return math.log(self.p_wait / epsilon) / self.decay


def _alpha_and_slack(theta: float, rho_arr: float, rho_svc: float,
                     sigma_arr: float, sigma_svc: float, independent: bool) -> tuple:
    slack = rho_arr - rho_svc
    if independent:
        # slack = 0 is admissible; absorb float round-off at the boundary
        tol = 1e-12 * (1.0 + abs(rho_arr) + abs(rho_svc))
        if slack < -tol:
            raise InfeasibleThetaError(
                f"stability violated at theta={theta}: rho_arrival - rho_service = {slack}", slack)
        return 1.0, max(slack, 0.0)
    if slack <= 0:
        raise InfeasibleThetaError(
            f"strict stability violated at theta={theta}: slack = {slack}", slack)
    alpha = math.exp(theta * (sigma_arr + sigma_svc)) / -math.expm1(-theta * slack)
    return alpha, slack


def gg1_bounds(arr: Envelope, svc: Envelope, theta: float,
               independent: bool = True) -> tuple[TailBound, TailBound]:
    """Sojourn and waiting tail bounds for a single work-conserving FIFO server."""
    arr.check_theta(theta)
    svc.check_theta(theta)
    rho_s = svc.rho(theta)
    alpha, slack = _alpha_and_slack(theta, arr.rho(theta), rho_s,
                                    arr.sigma(theta), svc.sigma(theta), independent)
    meta = BoundMeta(alpha=alpha, stability_slack=slack, mode="gi" if independent else "gg")
    sojourn = TailBound(terms=((alpha * math.exp(theta * rho_s), theta),), theta_used=theta, meta=meta)
    waiting = TailBound(terms=((alpha, theta),), theta_used=theta, meta=meta)
    return sojourn, waiting


def forkjoin_bounds(arr: Envelope, task: Envelope, k: int, theta: float,
                    independent: bool = True) -> tuple[TailBound, TailBound]:
    """Multi-queue fork-join system with k parallel servers; union bound over tasks.

    The waiting bound refers to the task of a job that starts service last.
    """
    if k < 1:
        raise InvalidSpecError(f"fork-join requires k >= 1, got {k}")
    arr.check_theta(theta)
    task.check_theta(theta)
    rho_q = task.rho(theta)
    alpha, slack = _alpha_and_slack(theta, arr.rho(theta), rho_q,
                                    arr.sigma(theta), task.sigma(theta), independent)
    meta = BoundMeta(alpha=alpha, stability_slack=slack, mode="gi" if independent else "gg")
    sojourn = TailBound(terms=((k * alpha * math.exp(theta * rho_q), theta),),
                        theta_used=theta, meta=meta)
    waiting = TailBound(terms=((k * alpha, theta),), theta_used=theta, meta=meta)
    return sojourn, waiting


def expected_sojourn_bound(arr: Envelope, task: Envelope, k: int, theta: float,
                           independent: bool = True) -> float:
    """Bound on E[T] for the fork-join system: rho_Q + (ln k + ln alpha + 1)/theta."""
    if k < 1:
        raise InvalidSpecError(f"fork-join requires k >= 1, got {k}")
    arr.check_theta(theta)
    task.check_theta(theta)
    rho_q = task.rho(theta)
    alpha, _ = _alpha_and_slack(theta, arr.rho(theta), rho_q,
                                arr.sigma(theta), task.sigma(theta), independent)
    return rho_q + (math.log(k) + math.log(alpha) + 1.0) / theta


def multistage_bounds(arr: Envelope, task: Envelope, k: int, h: int, theta: float) -> TailBound:
    """End-to-end sojourn bound for h independent fork-join stages in tandem.

    Requires strict stability; the per-stage geometric sums contribute
    (1 - e^(-theta slack))^(-h).
    """
    if k < 1 or h < 1:
        raise InvalidSpecError(f"multi-stage requires k >= 1 and h >= 1, got k={k}, h={h}")
    arr.check_theta(theta)
    task.check_theta(theta)
    rho_q = task.rho(theta)
    slack = arr.rho(theta) - rho_q
    if slack <= 0:
        raise InfeasibleThetaError(
            f"strict stability violated at theta={theta}: slack = {slack}", slack)
    alpha = math.exp(theta * (arr.sigma(theta) + h * task.sigma(theta))) \
        / (-math.expm1(-theta * slack)) ** h
    meta = BoundMeta(alpha=alpha, stability_slack=slack, mode="gg")
    prefactor = k ** h * alpha * math.exp(theta * h * rho_q)
    return TailBound(terms=((prefactor, theta),), theta_used=theta, meta=meta)


def thinned_multiserver_bounds(arr: Envelope, job: Envelope, k: int, policy, theta: float,
                               resequencing: bool = False,
                               independent: bool = True) -> tuple[TailBound, TailBound]:
    """Multi-queue multi-server system where whole jobs are assigned to k servers.

    Without resequencing: per-server bounds under the thinned arrival envelope.
    With resequencing: the sojourn gains a union-bound factor k; the waiting
    time is unaffected by resequencing and stays the per-server bound.
    """
    if k < 1:
        raise InvalidSpecError(f"thinning requires k >= 1, got {k}")
    arr_i = thinned_arrival_envelope(arr, k, policy)
    arr_i.check_theta(theta)
    job.check_theta(theta)
    rho_l = job.rho(theta)
    alpha, slack = _alpha_and_slack(theta, arr_i.rho(theta), rho_l,
                                    arr_i.sigma(theta), job.sigma(theta), independent)
    meta = BoundMeta(alpha=alpha, stability_slack=slack, mode="gi" if independent else "gg")
    per_server = alpha * math.exp(theta * rho_l)
    factor = k if resequencing else 1
    sojourn = TailBound(terms=((factor * per_server, theta),), theta_used=theta, meta=meta)
    waiting = TailBound(terms=((alpha, theta),), theta_used=theta, meta=meta)
    return sojourn, waiting


def hybrid_bounds(arr: Envelope, task: Envelope, k: int, a: int, theta: float,
                  independent: bool = True) -> TailBound:
    """Sojourn bound for k = a*b servers arranged as a thinned fork-join sub-systems.

    Arrivals are round-robin thinned a ways; each of the b servers of a
    sub-system serves a aggregated tasks per job.
    """
    if k < 1 or a < 1:
        raise InvalidSpecError(f"hybrid requires k >= 1 and a >= 1, got k={k}, a={a}")
    if k % a != 0:
        raise InvalidSpecError(f"hybrid split a={a} does not divide k={k}")
    b = k // a
    arr_a = thinned_arrival_envelope(arr, a, RoundRobin())
    job = aggregate_tasks_envelope(task, a)
    sojourn, _waiting = forkjoin_bounds(arr_a, job, b, theta, independent)
    return sojourn


def _rho_z(mu: float, k: int, theta: float) -> float:
    # envelope rate of the inter-start gaps: exponential with parameter k*mu
    return math.log(k * mu / (k * mu - theta)) / theta


def _sq_sojourn_terms(alpha_beta: float, mu: float, theta: float) -> tuple[tuple, tuple]:
    """Terms of alpha*beta*mu/(mu-theta)(e^(-theta tau)-e^(-mu tau)) + e^(-mu tau)."""
    if abs(theta - mu) < _MU_LIMIT_WINDOW * mu:
        # removable singularity: the bracket tends to tau e^(-mu tau)
        return ((1.0, mu),), ((alpha_beta * mu, mu),)
    c = alpha_beta * mu / (mu - theta)
    return ((c, theta), (-c, mu), (1.0, mu)), ()


def sq_multiserver_bounds(arr: Envelope, mu: float, k: int, theta: float,
                          independent: bool = True) -> tuple[TailBound, TailBound]:
    """Single-queue (non-idling) multi-server system with iid exponential service.

    The admissible range is 0 < theta < k*mu, wider than the naive theta < mu,
    because the bound rides on the inter-start gaps (rate k*mu) rather than
    the job service times.
    """
    if k < 1:
        raise InvalidSpecError(f"single-queue multi-server requires k >= 1, got {k}")
    if not mu > 0:
        raise InvalidSpecError(f"service rate must be > 0, got {mu}")
    if not (0 < theta < k * mu):
        raise ThetaDomainError(f"theta={theta} outside (0, k*mu) = (0, {k * mu})")
    arr.check_theta(theta)
    rho_z = _rho_z(mu, k, theta)
    alpha, slack = _alpha_and_slack(theta, arr.rho(theta), rho_z,
                                    arr.sigma(theta), 0.0, independent)
    meta = BoundMeta(alpha=alpha, stability_slack=slack, mode="gi" if independent else "gg")
    waiting = TailBound(terms=((alpha, theta),), theta_used=theta, meta=meta)
    terms, linear = _sq_sojourn_terms(alpha, mu, theta)
    sojourn = TailBound(terms=terms, theta_used=theta, meta=meta, linear_terms=linear)
    return sojourn, waiting


def sq_forkjoin_bounds(arr: Envelope, mu: float, k: int, theta: float,
                       independent: bool = True) -> tuple[TailBound, list[TailBound]]:
    """Single-queue (non-idling) fork-join system with iid exponential task service.

    Returns the job sojourn bound and the waiting bound of each task
    i = 1..k; task k is the task of a job that starts service last.
    """
    if k < 1:
        raise InvalidSpecError(f"single-queue fork-join requires k >= 1, got {k}")
    if not mu > 0:
        raise InvalidSpecError(f"service rate must be > 0, got {mu}")
    if not (0 < theta < k * mu):
        raise ThetaDomainError(f"theta={theta} outside (0, k*mu) = (0, {k * mu})")
    arr.check_theta(theta)
    rho_z = _rho_z(mu, k, theta)
    alpha, slack = _alpha_and_slack(theta, arr.rho(theta), k * rho_z,
                                    arr.sigma(theta), 0.0, independent)
    r = math.exp(theta * rho_z)
    beta = (r ** k - 1.0) / (r - 1.0) if k > 1 else 1.0
    meta = BoundMeta(alpha=alpha, stability_slack=slack, beta=beta,
                     mode="gi" if independent else "gg")
    waiting_per_task = [
        TailBound(terms=((alpha * r ** (i - 1), theta),), theta_used=theta, meta=meta)
        for i in range(1, k + 1)
    ]
    terms, linear = _sq_sojourn_terms(alpha * beta, mu, theta)
    sojourn = TailBound(terms=terms, theta_used=theta, meta=meta, linear_terms=linear)
    return sojourn, waiting_per_task


def exact_mm1_sojourn(lam: float, mu: float) -> ExactOracleResult:
    """Exact sojourn tail of the M|M|1 queue: e^(-(mu-lambda) tau)."""
    if not (0 < lam < mu):
        raise UnstableError(f"M|M|1 requires 0 < lambda < mu, got lambda={lam}, mu={mu}")
    return ExactOracleResult(kind="mm1_sojourn_tail", p_wait=1.0, decay=mu - lam)


def erlang_c(lam: float, mu: float, k: int) -> float:
    """Probability of waiting in M|M|k via the stable Erlang-B recursion."""
    if not (0 < lam < k * mu):
        raise UnstableError(f"M|M|k requires 0 < lambda < k*mu, got lambda={lam}, k*mu={k * mu}")
    rho = lam / mu
    b = 1.0
    for j in range(1, k + 1):
        b = rho * b / (j + rho * b)
    return b / (1.0 - (rho / k) * (1.0 - b))


def exact_mmk_waiting(lam: float, mu: float, k: int) -> ExactOracleResult:
    """Exact waiting tail of the M|M|k queue: P_k e^(-(k mu - lambda) tau)."""
    p_k = erlang_c(lam, mu, k)
    return ExactOracleResult(kind="mmk_waiting_tail", p_wait=p_k, decay=k * mu - lam)


def invert_quantile(bound: TailBound, epsilon: float) -> float:
    """Smallest tau >= 0 with bound.evaluate(tau) <= epsilon.

    Single pure-exponential terms invert in closed form; anything else falls
    back to bisection on the (eventually decreasing) tail.
    """
    if not (0 < epsilon < 1):
        raise InvalidSpecError(f"epsilon must be in (0, 1), got {epsilon}")
    if bound.evaluate(0.0) <= epsilon:
        return 0.0
    if len(bound.terms) == 1 and not bound.linear_terms:
        c, th = bound.terms[0]
        return math.log(c / epsilon) / th

    lo, hi = 0.0, 1.0
    for _ in range(2000):
        if bound.evaluate(hi) <= epsilon:
            break
        hi *= 2.0
    else:
        raise InfeasibleSystemError("tail bound does not fall below epsilon")
    # keep the value within a 1e-9 relative window below epsilon
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if bound.evaluate(mid) <= epsilon:
            hi = mid
        else:
            lo = mid
        v = bound.evaluate(hi)
        if v >= epsilon * (1.0 - 1e-9) and (hi - lo) <= 1e-10 * max(hi, 1.0):
            break
    return hi


def feasible_interval(arr: Envelope, svc: Envelope) -> tuple[float, float]:
    """Intersection of the two envelopes' theta domains."""
    return max(arr.theta_lo, svc.theta_lo), min(arr.theta_hi, svc.theta_hi)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_theta(bound_factory: Callable[[float], TailBound], epsilon: float,
                   theta_lo: float, theta_hi: float) -> tuple[float, float]:
    """Minimize the epsilon-quantile of bound_factory(theta) over (theta_lo, theta_hi).

    Coarse 128-point grid on the clamped interval, then golden-section
    refinement around the best grid point to relative width 1e-8.  Infeasible
    thetas (stability or domain violations) count as +inf; ties within 1e-12
    resolve toward the smallest theta.
    """
    if not (0 < epsilon < 1):
        raise InvalidSpecError(f"epsilon must be in (0, 1), got {epsilon}")
    if not math.isfinite(theta_hi):
        raise InvalidSpecError("optimize_theta requires a finite search cap")
    delta = 1e-9 * (theta_hi - theta_lo)
    lo, hi = theta_lo + delta, theta_hi - delta
    if not lo < hi:
        raise InfeasibleSystemError(f"empty theta interval ({theta_lo}, {theta_hi})")

    def objective(theta: float) -> float:
        try:
            return invert_quantile(bound_factory(theta), epsilon)
        except (InfeasibleThetaError, ThetaDomainError):
            return math.inf

    n_grid = 128
    grid = [lo + (hi - lo) * i / (n_grid - 1) for i in range(n_grid)]
    values = [objective(t) for t in grid]
    best_val = min(values)
    if math.isinf(best_val):
        raise InfeasibleSystemError(
            f"no feasible theta in ({theta_lo}, {theta_hi}) for this system")
    best = min(i for i, v in enumerate(values) if v <= best_val + 1e-12)

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, n_grid - 1)]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > 1e-8 * max(abs(b), 1e-300):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    candidates = [(values[best], grid[best]), (fc, c), (fd, d)]
    tau_star, theta_star = min(candidates, key=lambda p: (p[0], p[1]))
    return theta_star, tau_star
