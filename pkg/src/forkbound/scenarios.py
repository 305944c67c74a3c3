"""Config-driven experiment runner: pairs bound computations with matching
simulations over parameter sweeps and emits CSV rows for the figure suite.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import bounds as bd
from .distributions import Deterministic, Erlang, Exponential, Weibull, Uniform
from .envelopes import (
    Envelope,
    RandomAssignment,
    RoundRobin,
    gi_arrival_envelope,
    gi_service_envelope,
    replication_service_envelope,
    splitmerge_service_envelope,
)
from .errors import (
    ConfigError,
    ForkboundError,
    InfeasibleSystemError,
    InfeasibleThetaError,
    InsufficientSamplesError,
    InvalidSpecError,
    ThetaDomainError,
)
from .sampling import estimate_quantile
from .sim import simulate
from .topology import RandomPolicy, SystemKind, Topology

__all__ = ["ThetaPolicy", "Scenario", "ResultRow", "run_scenario", "write_csv",
           "parse_scenario", "scenario_to_dict", "load_scenario", "CSV_HEADER",
           "bound_for_topology", "theta_search_interval"]

CSV_HEADER = [
    "scenario_id", "system", "k", "h", "lambda", "mu", "epsilon", "theta_star",
    "tau_bound", "tau_sim", "ci_lo", "ci_hi", "n_samples", "seed", "alpha",
    "beta", "expected_bound", "alpha_mode", "note",
]

_MODES = ("bound_only", "sim_only", "compare")
_METRICS = ("sojourn", "waiting")
_SWEEPABLE = ("k", "k_tasks", "h", "a", "lambda", "mu")


@dataclass(frozen=True)
class ThetaPolicy:
    mode: str = "optimize"          # "optimize" | "fixed"
    value: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("optimize", "fixed"):
            raise InvalidSpecError(f"theta policy mode must be optimize|fixed, got {self.mode}")
        if self.mode == "fixed" and not (self.value and self.value > 0):
            raise InvalidSpecError("fixed theta policy needs a positive value")


@dataclass(frozen=True)
class Scenario:
    id: str
    topology: Topology
    mode: str
    epsilons: tuple
    metric: str = "sojourn"
    sweep_parameter: Optional[str] = None
    sweep_values: tuple = ()
    n_jobs: int = 10_000_000
    sample_interval: int = 100
    seeds: tuple = (1,)
    theta_policy: ThetaPolicy = ThetaPolicy()
    alpha_mode: str = "auto"        # "auto" | "gi" | "gg"
    include_exact: bool = False
    gamma: float = 0.682

    def __post_init__(self):
        if self.mode not in _MODES:
            raise InvalidSpecError(f"mode must be one of {_MODES}, got {self.mode}")
        if self.metric not in _METRICS:
            raise InvalidSpecError(f"metric must be one of {_METRICS}, got {self.metric}")
        if not self.epsilons or not all(0 < e < 1 for e in self.epsilons):
            raise InvalidSpecError("epsilons must be a nonempty list within (0, 1)")
        if self.sweep_parameter is not None:
            if self.sweep_parameter not in _SWEEPABLE:
                raise InvalidSpecError(f"cannot sweep {self.sweep_parameter!r}; allowed: {_SWEEPABLE}")
            if not self.sweep_values:
                raise InvalidSpecError("sweep needs at least one value")
        if not self.seeds:
            raise InvalidSpecError("at least one seed is required")
        if self.alpha_mode not in ("auto", "gi", "gg"):
            raise InvalidSpecError(f"alpha_mode must be auto|gi|gg, got {self.alpha_mode}")
        if self.n_jobs < 1 or self.sample_interval < 1:
            raise InvalidSpecError("n_jobs and sample_interval must be >= 1")


@dataclass
class ResultRow:
    scenario_id: str
    system: str
    k: int
    h: int
    lam: float
    mu: float
    epsilon: float
    theta_star: Optional[float]
    tau_bound: Optional[float]
    tau_sim: Optional[float]
    ci_lo: Optional[float]
    ci_hi: Optional[float]
    n_samples: int
    seed: int
    alpha: Optional[float]
    beta: Optional[float]
    expected_bound: Optional[float]
    alpha_mode: str
    note: str = ""


def _rate_of(dist) -> float:
    if isinstance(dist, (Exponential, Erlang)):
        return dist.rate
    return 1.0 / dist.mean()


def _apply_sweep(top: Topology, parameter: str, value) -> Topology:
    if parameter in ("k", "k_tasks"):
        k = int(value)
        policy = top.policy
        if isinstance(policy, RandomPolicy):
            if len(set(policy.p)) != 1:
                raise InvalidSpecError("cannot sweep k with a non-uniform assignment vector")
            policy = RandomPolicy.uniform(k)
        service = top.service
        if parameter == "k_tasks":
            # jobs keep k tasks: the whole-job service is the k-fold task sum
            if not isinstance(service, Erlang):
                raise InvalidSpecError("k_tasks sweep needs an Erlang job service distribution")
            service = dataclasses.replace(service, shape=k)
        return dataclasses.replace(top, k=k, policy=policy, service=service)
    if parameter == "h":
        return dataclasses.replace(top, h=int(value))
    if parameter == "a":
        return dataclasses.replace(top, a=int(value))
    if parameter in ("lambda", "mu"):
        field = "arrival" if parameter == "lambda" else "service"
        dist = getattr(top, field)
        if isinstance(dist, (Exponential, Erlang)):
            dist = dataclasses.replace(dist, rate=float(value))
        elif isinstance(dist, Deterministic):
            dist = Deterministic(1.0 / float(value))
        else:
            raise InvalidSpecError(f"cannot sweep {parameter} for {dist!r}")
        return dataclasses.replace(top, **{field: dist})
    raise InvalidSpecError(f"unknown sweep parameter {parameter!r}")


def _envelope_policy(top: Topology):
    if isinstance(top.policy, RoundRobin):
        return RoundRobin()
    p = top.policy.p
    if len(set(p)) != 1:
        raise InvalidSpecError("bounds for random thinning need a uniform assignment vector")
    return RandomAssignment(p[0])


def bound_for_topology(top: Topology, theta: float, independent: bool,
                       metric: str) -> bd.TailBound:
    """Dispatch a topology to its bound operation and pick the requested metric."""
    arr = gi_arrival_envelope(top.arrival)
    kind = top.kind
    if kind is SystemKind.SINGLE_SERVER:
        sojourn, waiting = bd.gg1_bounds(arr, gi_service_envelope(top.service), theta, independent)
    elif kind is SystemKind.FORK_JOIN:
        sojourn, waiting = bd.forkjoin_bounds(arr, gi_service_envelope(top.service), top.k,
                                              theta, independent)
    elif kind is SystemKind.SPLIT_MERGE:
        svc = splitmerge_service_envelope(top.service, top.k)
        sojourn, waiting = bd.gg1_bounds(arr, svc, theta, independent)
    elif kind is SystemKind.REPLICATION:
        svc = replication_service_envelope(top.service, top.k)
        sojourn, waiting = bd.gg1_bounds(arr, svc, theta, independent)
    elif kind is SystemKind.THINNED_MULTISERVER:
        sojourn, waiting = bd.thinned_multiserver_bounds(
            arr, gi_service_envelope(top.service), top.k, _envelope_policy(top), theta,
            resequencing=top.resequencing, independent=independent)
    elif kind is SystemKind.SQ_MULTISERVER:
        if not isinstance(top.service, Exponential):
            raise InvalidSpecError("single-queue multi-server bounds need exponential service")
        sojourn, waiting = bd.sq_multiserver_bounds(arr, top.service.rate, top.k, theta, independent)
    elif kind is SystemKind.SQ_FORK_JOIN:
        if not isinstance(top.service, Exponential):
            raise InvalidSpecError("single-queue fork-join bounds need exponential task service")
        sojourn, per_task = bd.sq_forkjoin_bounds(arr, top.service.rate, top.k, theta, independent)
        waiting = per_task[-1]
    elif kind is SystemKind.MULTISTAGE_FORK_JOIN:
        if metric != "sojourn":
            raise InvalidSpecError("only the end-to-end sojourn bound exists for multi-stage networks")
        sojourn = bd.multistage_bounds(arr, gi_service_envelope(top.service), top.k, top.h, theta)
        waiting = None
    elif kind is SystemKind.HYBRID:
        if metric != "sojourn":
            raise InvalidSpecError("only the sojourn bound exists for hybrid systems")
        sojourn = bd.hybrid_bounds(arr, gi_service_envelope(top.service), top.k, top.a,
                                   theta, independent)
        waiting = None
    else:
        raise InvalidSpecError(f"no bound operation for topology kind {kind}")
    return sojourn if metric == "sojourn" else waiting


def theta_search_interval(top: Topology) -> tuple:
    """Envelope-domain intersection, with an unbounded upper end capped at
    50 / mean-service-time."""
    arr = gi_arrival_envelope(top.arrival)
    kind = top.kind
    if kind in (SystemKind.SQ_MULTISERVER, SystemKind.SQ_FORK_JOIN):
        hi = top.k * top.service.rate if isinstance(top.service, Exponential) else math.inf
    elif kind is SystemKind.REPLICATION:
        hi = replication_service_envelope(top.service, top.k).theta_hi
    else:
        hi = gi_service_envelope(top.service).theta_hi
    hi = min(hi, arr.theta_hi)
    cap_applied = None
    if not math.isfinite(hi):
        hi = 50.0 / top.service.mean()
        cap_applied = hi
    return 0.0, hi, cap_applied


def _independent_flag(scenario: Scenario) -> bool:
    # every process this artifact generates is renewal with iid increments,
    # so "auto" resolves to the GI constants
    return scenario.alpha_mode != "gg"


def _exact_oracle(top: Topology, metric: str):
    arr_exp = isinstance(top.arrival, Exponential)
    svc_exp = isinstance(top.service, Exponential)
    if not (arr_exp and svc_exp):
        return None
    if top.kind is SystemKind.SINGLE_SERVER and metric == "sojourn":
        return "mm1_exact", bd.exact_mm1_sojourn(top.arrival.rate, top.service.rate)
    if top.kind is SystemKind.SINGLE_SERVER and metric == "waiting":
        return "mm1_exact", bd.exact_mmk_waiting(top.arrival.rate, top.service.rate, 1)
    if top.kind is SystemKind.SQ_MULTISERVER and metric == "waiting":
        return "mmk_exact", bd.exact_mmk_waiting(top.arrival.rate, top.service.rate, top.k)
    return None


def _bound_cell(scenario: Scenario, top: Topology, epsilon: float):
    """(theta_star, tau_bound, alpha, beta, expected, note) for one sweep cell."""
    independent = _independent_flag(scenario)
    lo, hi, cap = theta_search_interval(top)

    def factory(theta: float) -> bd.TailBound:
        return bound_for_topology(top, theta, independent, scenario.metric)

    try:
        if scenario.theta_policy.mode == "fixed":
            theta_star = scenario.theta_policy.value
            tail = factory(theta_star)
            tau = bd.invert_quantile(tail, epsilon)
        else:
            theta_star, tau = bd.optimize_theta(factory, epsilon, lo, hi)
            tail = factory(theta_star)
    except (InfeasibleThetaError, InfeasibleSystemError, ThetaDomainError):
        return None, math.inf, None, None, None, "unstable"
    if cap is not None:
        tail = dataclasses.replace(
            tail, meta=dataclasses.replace(tail.meta, theta_cap=cap))
    expected = None
    if scenario.metric == "sojourn" and top.kind in (SystemKind.FORK_JOIN,
                                                     SystemKind.SINGLE_SERVER):
        arr = gi_arrival_envelope(top.arrival)
        svc = gi_service_envelope(top.service)
        expected = bd.expected_sojourn_bound(arr, svc, top.k, theta_star, independent)
    return theta_star, tau, tail.meta.alpha, tail.meta.beta, expected, ""


def _run_cell(scenario: Scenario, top: Topology) -> list:
    rows = []
    lam = _rate_of(top.arrival)
    mu = _rate_of(top.service)
    mode_label = "gi" if _independent_flag(scenario) else "gg"
    want_bound = scenario.mode in ("bound_only", "compare")
    want_sim = scenario.mode in ("sim_only", "compare")

    sims = {}
    if want_sim:
        for seed in scenario.seeds:
            result = simulate(top, scenario.n_jobs, scenario.sample_interval, seed)
            sims[seed] = result.sojourn if scenario.metric == "sojourn" else result.waiting

    for epsilon in scenario.epsilons:
        if want_bound:
            theta_star, tau_bound, alpha, beta, expected, note = _bound_cell(scenario, top, epsilon)
        else:
            theta_star = tau_bound = alpha = beta = expected = None
            note = ""
        for seed in scenario.seeds:
            tau_sim = ci_lo = ci_hi = None
            n_samples = 0
            row_note = note
            if want_sim:
                samples = sims[seed]
                n_samples = samples.values.size
                try:
                    est = estimate_quantile(samples, 1.0 - epsilon, scenario.gamma)
                    tau_sim, ci_lo, ci_hi = est.value, est.ci_lo, est.ci_hi
                except InsufficientSamplesError:
                    row_note = (row_note + ";" if row_note else "") + "insufficient-samples"
            rows.append(ResultRow(
                scenario_id=scenario.id, system=top.kind.value, k=top.k, h=top.h,
                lam=lam, mu=mu, epsilon=epsilon, theta_star=theta_star,
                tau_bound=tau_bound, tau_sim=tau_sim, ci_lo=ci_lo, ci_hi=ci_hi,
                n_samples=n_samples, seed=seed, alpha=alpha, beta=beta,
                expected_bound=expected, alpha_mode=mode_label, note=row_note))
        oracle = _exact_oracle(top, scenario.metric) if scenario.include_exact else None
        if oracle is not None:
            label, exact = oracle
            rows.append(ResultRow(
                scenario_id=scenario.id, system=label, k=top.k, h=top.h,
                lam=lam, mu=mu, epsilon=epsilon, theta_star=exact.decay,
                tau_bound=exact.quantile(epsilon), tau_sim=None, ci_lo=None,
                ci_hi=None, n_samples=0, seed=scenario.seeds[0], alpha=exact.p_wait,
                beta=1.0, expected_bound=None, alpha_mode="exact", note=""))
    return rows


def run_scenario(scenario: Scenario, workers: int = 1) -> list:
    """All result rows, ordered sweep-major, then epsilon, then seed."""
    if scenario.sweep_parameter is None:
        cells = [scenario.topology]
    else:
        cells = [_apply_sweep(scenario.topology, scenario.sweep_parameter, v)
                 for v in scenario.sweep_values]
    if workers <= 1 or len(cells) == 1:
        per_cell = [_run_cell(scenario, top) for top in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(lambda top: _run_cell(scenario, top), cells))
    return [row for rows in per_cell for row in rows]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.9g}"
    return str(value)


def write_csv(rows: list, fh) -> None:
    fh.write(",".join(CSV_HEADER) + "\n")
    for r in rows:
        fields = [r.scenario_id, r.system, r.k, r.h, r.lam, r.mu, r.epsilon,
                  r.theta_star, r.tau_bound, r.tau_sim, r.ci_lo, r.ci_hi,
                  r.n_samples, r.seed, r.alpha, r.beta, r.expected_bound,
                  r.alpha_mode, r.note]
        fh.write(",".join(_fmt(f) for f in fields) + "\n")


def scenario_to_dict(s: Scenario) -> dict:
    d = {
        "id": s.id,
        "topology": s.topology.to_dict(),
        "mode": s.mode,
        "metric": s.metric,
        "epsilons": list(s.epsilons),
        "n_jobs": s.n_jobs,
        "sample_interval": s.sample_interval,
        "seeds": list(s.seeds),
        "alpha_mode": s.alpha_mode,
        "include_exact": s.include_exact,
        "gamma": s.gamma,
    }
    if s.sweep_parameter is not None:
        d["sweep"] = {"parameter": s.sweep_parameter, "values": list(s.sweep_values)}
    if s.theta_policy.mode == "fixed":
        d["theta"] = {"mode": "fixed", "value": s.theta_policy.value}
    else:
        d["theta"] = {"mode": "optimize"}
    return d


def parse_scenario(d: dict, path: str = "<config>") -> Scenario:
    def fail(field, msg):
        raise ConfigError(f"{path}: field {field!r}: {msg}", path=path, field=field)

    for required in ("id", "topology", "mode", "epsilons"):
        if required not in d:
            fail(required, "missing")
    try:
        topology = Topology.from_dict(d["topology"])
    except (InvalidSpecError, ForkboundError) as exc:
        fail("topology", str(exc))
    sweep = d.get("sweep")
    sweep_parameter, sweep_values = None, ()
    if sweep is not None:
        sweep_parameter = sweep.get("parameter")
        sweep_values = tuple(sweep.get("values", ()))
    theta_d = d.get("theta", {"mode": "optimize"})
    try:
        theta_policy = ThetaPolicy(mode=theta_d.get("mode", "optimize"),
                                   value=theta_d.get("value"))
        return Scenario(
            id=str(d["id"]),
            topology=topology,
            mode=str(d["mode"]),
            epsilons=tuple(float(e) for e in d["epsilons"]),
            metric=str(d.get("metric", "sojourn")),
            sweep_parameter=sweep_parameter,
            sweep_values=sweep_values,
            n_jobs=int(d.get("n_jobs", 10_000_000)),
            sample_interval=int(d.get("sample_interval", 100)),
            seeds=tuple(int(s) for s in d.get("seeds", (1,))),
            theta_policy=theta_policy,
            alpha_mode=str(d.get("alpha_mode", "auto")),
            include_exact=bool(d.get("include_exact", False)),
            gamma=float(d.get("gamma", 0.682)),
        )
    except InvalidSpecError as exc:
        raise ConfigError(f"{path}: {exc}", path=path, field="") from exc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}", path=path) from exc
    return parse_scenario(d, path)
