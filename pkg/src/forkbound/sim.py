"""Simulation facade: sampled runs, engine cross-checks, and job traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engines import (
    arrival_times,
    assignment_indices,
    run_engine,
    service_draws,
)
from .errors import InvalidSpecError
from .recursions import (
    forkjoin_recursion,
    maxplus_departures,
    replication_recursion,
    single_server_recursion,
    splitmerge_recursion,
    sq_forkjoin_recursion,
    sq_multiserver_recursion,
    thinned_recursion,
)
from .sampling import SampleSet
from .topology import StageMode, SystemKind, Topology

__all__ = ["SimulationResult", "simulate", "materialize_draws", "crosscheck_engine",
           "JobTrace", "trace_run", "write_trace_csv"]


@dataclass(frozen=True)
class SimulationResult:
    sojourn: SampleSet
    waiting: SampleSet


def simulate(top: Topology, n_jobs: int, sample_interval: int = 100,
             seed: int = 0) -> SimulationResult:
    """Run the topology for n_jobs and keep every sample_interval-th job's metrics."""
    if n_jobs < 1 or sample_interval < 1:
        raise InvalidSpecError("n_jobs and sample_interval must be >= 1")
    path = run_engine(top, n_jobs, seed)
    idx = np.arange(sample_interval - 1, n_jobs, sample_interval)
    common = dict(sample_interval=sample_interval, seed=seed, n_jobs=n_jobs)
    return SimulationResult(
        sojourn=SampleSet(values=path.sojourn[idx].copy(), metric="sojourn", **common),
        waiting=SampleSet(values=path.waiting[idx].copy(), metric="waiting", **common),
    )


def materialize_draws(top: Topology, n_jobs: int, seed: int):
    """Arrivals, service draws, and (if applicable) the assignment of a run.

    The arrays are exactly what the engine consumes internally, so feeding
    them to the literal recursions reproduces the same trajectory.
    """
    A = arrival_times(top.arrival, n_jobs, seed)
    kind = top.kind
    if kind in (SystemKind.SINGLE_SERVER, SystemKind.SQ_MULTISERVER):
        return A, service_draws(top.service, seed, 1, 1, 1, n_jobs), None
    if kind is SystemKind.THINNED_MULTISERVER:
        L = service_draws(top.service, seed, 1, 1, 1, n_jobs)
        assign = assignment_indices(top.policy, top.k, n_jobs, seed)
        return A, L, assign
    if kind in (SystemKind.FORK_JOIN, SystemKind.SPLIT_MERGE, SystemKind.REPLICATION,
                SystemKind.SQ_FORK_JOIN, SystemKind.HYBRID):
        Q = np.empty((n_jobs, top.k))
        for i in range(1, top.k + 1):
            Q[:, i - 1] = service_draws(top.service, seed, i, 1, 1, n_jobs)
        return A, Q, None
    if kind is SystemKind.MULTISTAGE_FORK_JOIN:
        Q = np.empty((top.h, n_jobs, top.k))
        for j in range(1, top.h + 1):
            stage = j if top.stage_service is StageMode.INDEPENDENT else 1
            for i in range(1, top.k + 1):
                Q[j - 1, :, i - 1] = service_draws(top.service, seed, i, stage, 1, n_jobs)
        return A, Q, None
    raise InvalidSpecError(f"unsupported topology kind {kind}")


def crosscheck_engine(top: Topology, n_jobs: int, seed: int) -> float:
    """Max absolute departure discrepancy between the engine and the literal recursion."""
    A, S, assign = materialize_draws(top, n_jobs, seed)
    reference = maxplus_departures(top, A, S, assign)
    path = run_engine(top, n_jobs, seed)
    return float(np.max(np.abs(path.departures - reference)))


@dataclass(frozen=True)
class JobTrace:
    """Per-job trajectory with service starts, for audits and CSV dumps."""

    arrivals: np.ndarray
    starts: np.ndarray            # (n,) or (n, k) task starts
    departures: np.ndarray
    waiting: np.ndarray
    services: np.ndarray          # what each start consumed: (n,) or (n, k)

    @property
    def sojourn(self) -> np.ndarray:
        return self.departures - self.arrivals


def trace_run(top: Topology, n_jobs: int, seed: int) -> JobTrace:
    """Full trace via the literal recursions (small runs only)."""
    A, S, assign = materialize_draws(top, n_jobs, seed)
    kind = top.kind
    if kind is SystemKind.SINGLE_SERVER:
        V, D = single_server_recursion(A, S)
        return JobTrace(A, V, D, V - A, S)
    if kind is SystemKind.FORK_JOIN:
        V, D = forkjoin_recursion(A, S)
        return JobTrace(A, V, D, V.max(axis=1) - A, S)
    if kind is SystemKind.SPLIT_MERGE:
        V, D = splitmerge_recursion(A, S)
        return JobTrace(A, V, D, V - A, S)
    if kind is SystemKind.REPLICATION:
        V, D = replication_recursion(A, S)
        return JobTrace(A, V, D, V - A, S)
    if kind is SystemKind.THINNED_MULTISERVER:
        V, _own, D = thinned_recursion(A, S, assign, top.resequencing)
        return JobTrace(A, V, D, V - A, S)
    if kind is SystemKind.SQ_MULTISERVER:
        V, D, _Z = sq_multiserver_recursion(A, S, top.k)
        return JobTrace(A, V, D, V - A, S)
    if kind is SystemKind.SQ_FORK_JOIN:
        V, D, _Z = sq_forkjoin_recursion(A, S)
        return JobTrace(A, V, D, V[:, -1] - A, S)
    raise InvalidSpecError(f"trace_run does not support {kind}")


def write_trace_csv(trace: JobTrace, path: str) -> None:
    """Columns n, A, V (or V_1..V_k), D, W, T, one row per job."""
    starts = trace.starts
    multi = starts.ndim == 2
    k = starts.shape[1] if multi else 1
    header = ["n", "A"] + ([f"V_{i}" for i in range(1, k + 1)] if multi else ["V"]) + ["D", "W", "T"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        sojourn = trace.sojourn
        for m in range(len(trace.arrivals)):
            v_cols = list(starts[m]) if multi else [starts[m]]
            writer.writerow([m + 1, trace.arrivals[m], *v_cols, trace.departures[m],
                             trace.waiting[m], sojourn[m]])
