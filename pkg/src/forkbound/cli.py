"""Command-line interface.

Subcommands: bounds (one-off tail bound), simulate (one run with quantiles),
sweep/compare (scenario config -> CSV), selftest (oracle cross-checks).
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

from . import bounds as bd
from .distributions import Exponential, parse_distribution
from .envelopes import gi_arrival_envelope, gi_service_envelope
from .errors import ConfigError, ForkboundError
from .sampling import estimate_quantile
from .scenarios import (
    bound_for_topology,
    load_scenario,
    run_scenario,
    theta_search_interval,
    write_csv,
)
from .sim import crosscheck_engine, simulate, trace_run, write_trace_csv
from .topology import RandomPolicy, StageMode, SystemKind, Topology

_SYSTEM_NAMES = {
    "single-server": SystemKind.SINGLE_SERVER,
    "fork-join": SystemKind.FORK_JOIN,
    "split-merge": SystemKind.SPLIT_MERGE,
    "replication": SystemKind.REPLICATION,
    "thinned": SystemKind.THINNED_MULTISERVER,
    "sq-multi-server": SystemKind.SQ_MULTISERVER,
    "sq-fork-join": SystemKind.SQ_FORK_JOIN,
    "multi-stage": SystemKind.MULTISTAGE_FORK_JOIN,
    "hybrid": SystemKind.HYBRID,
}


def _topology_from_args(args) -> Topology:
    kind = _SYSTEM_NAMES[args.system]
    policy = RandomPolicy.uniform(args.k) if args.policy == "random" else None
    kwargs = dict(
        kind=kind,
        arrival=parse_distribution(args.arrival),
        service=parse_distribution(args.task),
        k=args.k,
    )
    if kind is SystemKind.MULTISTAGE_FORK_JOIN:
        kwargs["h"] = args.h
        kwargs["stage_service"] = StageMode(args.stage_service)
    if kind is SystemKind.THINNED_MULTISERVER:
        kwargs["resequencing"] = args.resequencing
        if policy is not None:
            kwargs["policy"] = policy
    if kind is SystemKind.HYBRID:
        kwargs["a"] = args.a
    return Topology(**kwargs)


def _cmd_bounds(args) -> int:
    top = _topology_from_args(args)
    independent = args.alpha_mode != "gg"
    lo, hi, _cap = theta_search_interval(top)
    for eps in args.eps:
        if args.theta is not None:
            theta = args.theta
            tail = bound_for_topology(top, theta, independent, args.metric)
            tau = bd.invert_quantile(tail, eps)
        else:
            theta, tau = bd.optimize_theta(
                lambda t: bound_for_topology(top, t, independent, args.metric), eps, lo, hi)
            tail = bound_for_topology(top, theta, independent, args.metric)
        print(f"system={args.system} metric={args.metric} eps={eps:g}")
        print(f"  theta*={theta:.9g}  alpha={tail.meta.alpha:.9g}  beta={tail.meta.beta:.9g}"
              f"  slack={tail.meta.stability_slack:.9g}")
        print(f"  bound: P[{args.metric} > tau] <= {tail}")
        print(f"  tau({eps:g}) = {tau:.9g}")
    return 0


def _cmd_simulate(args) -> int:
    top = _topology_from_args(args)
    result = simulate(top, args.jobs, args.interval, args.seed)
    for metric, samples in (("sojourn", result.sojourn), ("waiting", result.waiting)):
        print(f"{metric}: n_samples={samples.values.size} mean={samples.values.mean():.9g}")
        for eps in args.eps:
            est = estimate_quantile(samples, 1.0 - eps, args.gamma)
            print(f"  q(1-{eps:g}) = {est.value:.9g}  ci=[{est.ci_lo:.9g}, {est.ci_hi:.9g}]"
                  f"  gamma={est.confidence:g}")
    if args.trace:
        trace = trace_run(top, min(args.jobs, 100000), args.seed)
        write_trace_csv(trace, args.trace)
        print(f"trace written to {args.trace}")
    return 0


def _cmd_sweep(args, force_compare: bool = False) -> int:
    scenario = load_scenario(args.config)
    if force_compare and scenario.mode != "compare":
        scenario = type(scenario)(**{**scenario.__dict__, "mode": "compare"})
    rows = run_scenario(scenario, workers=args.workers)
    with open(args.out, "w") as fh:
        write_csv(rows, fh)
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def _selftest_erlang_c() -> list:
    failures = []
    lam, mu, k = 4.0, 1.0, 8
    rho = Fraction(lam).limit_denominator() / Fraction(mu).limit_denominator()
    num = rho ** k / math.factorial(k) * (1 / (1 - rho / k))
    den = sum(rho ** j / math.factorial(j) for j in range(k)) + num
    exact = float(num / den)
    recursive = bd.erlang_c(lam, mu, k)
    if abs(exact - recursive) > 1e-12:
        failures.append(f"erlang_c mismatch: exact={exact} recursive={recursive}")
    return failures


def _cmd_selftest(_args) -> int:
    failures = []
    arr = Exponential(0.5)
    svc = Exponential(1.0)
    checks = [
        Topology(SystemKind.SINGLE_SERVER, arr, svc),
        Topology(SystemKind.FORK_JOIN, arr, svc, k=4),
        Topology(SystemKind.SPLIT_MERGE, arr, svc, k=4),
        Topology(SystemKind.REPLICATION, arr, svc, k=4),
        Topology(SystemKind.THINNED_MULTISERVER, arr, svc, k=4),
        Topology(SystemKind.SQ_MULTISERVER, arr, svc, k=4),
        Topology(SystemKind.SQ_FORK_JOIN, arr, svc, k=4),
        Topology(SystemKind.MULTISTAGE_FORK_JOIN, arr, svc, k=2, h=3),
    ]
    for top in checks:
        disc = crosscheck_engine(top, 2000, 7)
        status = "ok" if disc <= 1e-9 else "FAIL"
        print(f"crosscheck {top.kind.value:24s} discrepancy={disc:.3g} {status}")
        if disc > 1e-9:
            failures.append(f"crosscheck {top.kind.value}: discrepancy {disc}")

    failures.extend(_selftest_erlang_c())

    # Th.3 waiting at theta = k*mu - lambda dominates the exact M|M|k tail by 1/P_k
    lam, mu, k = 4.0, 1.0, 8
    exact = bd.exact_mmk_waiting(lam, mu, k)
    _s, waiting = bd.sq_multiserver_bounds(gi_arrival_envelope(Exponential(lam)), mu, k,
                                           k * mu - lam)
    ratio = waiting.evaluate(1.0) / exact.tail(1.0)
    if abs(ratio - 1.0 / exact.p_wait) > 1e-9:
        failures.append(f"Th.3-vs-ErlangC ratio {ratio} != 1/P_k {1.0 / exact.p_wait}")
    else:
        print(f"mmk waiting bound/exact ratio = 1/P_k = {ratio:.6g} ok")

    # M|M|1: the bound shares the exact decay and carries prefactor mu/lambda
    sojourn, _w = bd.gg1_bounds(gi_arrival_envelope(Exponential(0.5)),
                                gi_service_envelope(Exponential(1.0)), 0.5)
    mm1 = bd.exact_mm1_sojourn(0.5, 1.0)
    c, th = sojourn.terms[0]
    if abs(th - mm1.decay) > 1e-12 or abs(c - 2.0) > 1e-12:
        failures.append(f"mm1 sandwich: bound {c} e^(-{th} tau) vs exact decay {mm1.decay}")
    else:
        print(f"mm1 bound prefactor={c:g} decay={th:g} vs exact decay={mm1.decay:g} ok")

    if failures:
        for f in failures:
            print("FAIL:", f, file=sys.stderr)
        return 1
    print("selftest passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forkbound",
                                     description="Delay bounds and simulation for "
                                                 "multi-server systems with synchronization")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_topology_flags(p):
        p.add_argument("--system", required=True, choices=sorted(_SYSTEM_NAMES))
        p.add_argument("--arrival", required=True, help="e.g. exp:0.5, erlang:4:2, det:2")
        p.add_argument("--task", "--service", dest="task", required=True,
                       help="per-task (or per-job) service distribution")
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--h", type=int, default=1)
        p.add_argument("--a", type=int, default=1)
        p.add_argument("--policy", choices=["round-robin", "random"], default="round-robin")
        p.add_argument("--resequencing", action="store_true")
        p.add_argument("--stage-service", choices=["independent", "identical"],
                       default="independent")

    p_bounds = sub.add_parser("bounds", help="print a tail bound and its eps-quantile")
    add_topology_flags(p_bounds)
    p_bounds.add_argument("--eps", type=float, nargs="+", default=[1e-6])
    p_bounds.add_argument("--theta", type=float, default=None,
                          help="fixed theta (default: optimize)")
    p_bounds.add_argument("--metric", choices=["sojourn", "waiting"], default="sojourn")
    p_bounds.add_argument("--alpha-mode", choices=["gi", "gg"], default="gi")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_sim = sub.add_parser("simulate", help="run one simulation and print quantiles")
    add_topology_flags(p_sim)
    p_sim.add_argument("--jobs", type=int, default=1_000_000)
    p_sim.add_argument("--interval", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=1)
    p_sim.add_argument("--eps", type=float, nargs="+", default=[1e-3])
    p_sim.add_argument("--gamma", type=float, default=0.682)
    p_sim.add_argument("--trace", default=None, help="write per-job trace CSV here")
    p_sim.set_defaults(func=_cmd_simulate)

    for name, force in (("sweep", False), ("compare", True)):
        p = sub.add_parser(name, help="run a scenario config and write CSV")
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=lambda a, force=force: _cmd_sweep(a, force_compare=force))

    p_self = sub.add_parser("selftest", help="run oracle cross-checks")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ForkboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
