"""Fast per-topology simulation engines.

Each engine advances the exact per-job recursion of its system on draws from
the counter-based streams, chunking where a full (jobs x tasks) matrix would
not fit comfortably in memory.  The serial single-queue recursions are
numba-compiled; everything else is plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import rng
from .distributions import DistributionSpec
from .envelopes import RoundRobin
from .errors import InvalidSpecError
from .topology import RandomPolicy, StageMode, SystemKind, Topology

__all__ = ["EnginePath", "run_engine", "arrival_times", "service_draws",
           "service_draws_at", "assignment_indices", "warmup_kernels"]

_SQ_BLOCK_FLOATS = 4_000_000


@dataclass(frozen=True)
class EnginePath:
    """Full per-job trajectories of one simulation run."""

    arrivals: np.ndarray
    departures: np.ndarray
    waiting: np.ndarray

    @property
    def sojourn(self) -> np.ndarray:
        return self.departures - self.arrivals


def arrival_times(dist: DistributionSpec, n: int, seed: int) -> np.ndarray:
    u = rng.uniforms(rng.stream_key(seed, rng.ARRIVAL), 1, n)
    return np.cumsum(dist.ppf(u))


def service_draws(dist: DistributionSpec, seed: int, task: int, stage: int,
                  start_job: int, count: int) -> np.ndarray:
    u = rng.uniforms(rng.stream_key(seed, rng.SERVICE, task, stage), start_job, count)
    return dist.ppf(u)


def service_draws_at(dist: DistributionSpec, seed: int, task: int, stage: int,
                     job_numbers: np.ndarray) -> np.ndarray:
    u = rng.uniforms_at(rng.stream_key(seed, rng.SERVICE, task, stage), job_numbers)
    return dist.ppf(u)


def assignment_indices(policy, k: int, n: int, seed: int) -> np.ndarray:
    """0-based server index per job."""
    if isinstance(policy, RoundRobin):
        return np.arange(n, dtype=np.int64) % k
    if isinstance(policy, RandomPolicy):
        u = rng.uniforms(rng.stream_key(seed, rng.ASSIGN), 1, n)
        thresholds = np.cumsum(np.asarray(policy.p))[:-1]
        return np.searchsorted(thresholds, u, side="right").astype(np.int64)
    raise InvalidSpecError(f"unknown assignment policy {policy!r}")


@njit(cache=True)
def _lindley(A, L):
    # V(n) = max{A(n), V(n-1) + L(n-1)} for a work-conserving FIFO server
    n = A.shape[0]
    V = np.empty(n)
    V[0] = A[0]
    for i in range(1, n):
        w = V[i - 1] + L[i - 1]
        V[i] = A[i] if A[i] > w else w
    return V


@njit(cache=True)
def _sq_multiserver(A, L, slots):
    # next start = max{arrival, earliest server-free time}; overwrite that slot
    n = A.shape[0]
    k = slots.shape[0]
    V = np.empty(n)
    for i in range(n):
        jm = 0
        m = slots[0]
        for j in range(1, k):
            if slots[j] < m:
                m = slots[j]
                jm = j
        t = A[i] if A[i] > m else m
        slots[jm] = t + L[i]
        V[i] = t
    return V


@njit(cache=True)
def _sq_forkjoin_block(A, Q, slots):
    # tasks enter the shared queue in (job, task) order; the join completes a
    # job when its slowest task finishes
    nb, k = Q.shape
    D = np.empty(nb)
    V_last = np.empty(nb)
    for n in range(nb):
        d = -np.inf
        t = 0.0
        for i in range(k):
            jm = 0
            m = slots[0]
            for j in range(1, k):
                if slots[j] < m:
                    m = slots[j]
                    jm = j
            t = A[n] if A[n] > m else m
            fin = t + Q[n, i]
            slots[jm] = fin
            if fin > d:
                d = fin
        D[n] = d
        V_last[n] = t
    return D, V_last


def warmup_kernels() -> None:
    """Trigger (cached) JIT compilation of the serial kernels."""
    a = np.array([0.0, 1.0])
    l = np.array([1.0, 1.0])
    _lindley(a, l)
    _sq_multiserver(a, l, np.zeros(2))
    _sq_forkjoin_block(a, np.ones((2, 2)), np.zeros(2))


def _single_server(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    L = service_draws(top.service, seed, 1, 1, 1, n)
    V = _lindley(A, L)
    return EnginePath(A, V + L, V - A)


def _fork_join(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    D, V_last = _forkjoin_stage(A, top.service, top.k, seed, stage=1)
    return EnginePath(A, D, V_last - A)


def _forkjoin_stage(A: np.ndarray, dist: DistributionSpec, k: int, seed: int,
                    stage: int) -> tuple[np.ndarray, np.ndarray]:
    n = A.shape[0]
    D = np.full(n, -np.inf)
    V_last = np.full(n, -np.inf)
    for i in range(1, k + 1):
        Q = service_draws(dist, seed, i, stage, 1, n)
        V = _lindley(A, Q)
        np.maximum(D, V + Q, out=D)
        np.maximum(V_last, V, out=V_last)
    return D, V_last


def _split_merge(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    L = service_draws(top.service, seed, 1, 1, 1, n)
    for i in range(2, top.k + 1):
        np.maximum(L, service_draws(top.service, seed, i, 1, 1, n), out=L)
    V = _lindley(A, L)
    return EnginePath(A, V + L, V - A)


def _replication(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    L = service_draws(top.service, seed, 1, 1, 1, n)
    for i in range(2, top.k + 1):
        np.minimum(L, service_draws(top.service, seed, i, 1, 1, n), out=L)
    V = _lindley(A, L)
    return EnginePath(A, V + L, V - A)


def _thinned(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    L = service_draws(top.service, seed, 1, 1, 1, n)
    servers = assignment_indices(top.policy, top.k, n, seed)
    D = np.empty(n)
    W = np.empty(n)
    for i in range(top.k):
        idx = np.nonzero(servers == i)[0]
        if idx.size == 0:
            continue
        Vi = _lindley(A[idx], L[idx])
        D[idx] = Vi + L[idx]
        W[idx] = Vi - A[idx]
    if top.resequencing:
        D = np.maximum.accumulate(D)
    return EnginePath(A, D, W)


def _sq_multiserver_path(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    L = service_draws(top.service, seed, 1, 1, 1, n)
    V = _sq_multiserver(A, L, np.zeros(top.k))
    return EnginePath(A, V + L, V - A)


def _sq_fork_join(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    k = top.k
    block = max(1, _SQ_BLOCK_FLOATS // k)
    D = np.empty(n)
    V_last = np.empty(n)
    slots = np.zeros(k)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        Q = np.empty((hi - lo, k))
        for i in range(1, k + 1):
            Q[:, i - 1] = service_draws(top.service, seed, i, 1, lo + 1, hi - lo)
        D[lo:hi], V_last[lo:hi] = _sq_forkjoin_block(A[lo:hi], Q, slots)
    return EnginePath(A, D, V_last - A)


def _multistage(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    current = A
    for j in range(1, top.h + 1):
        stage = j if top.stage_service is StageMode.INDEPENDENT else 1
        current, _ = _forkjoin_stage(current, top.service, top.k, seed, stage)
    W = np.empty(n)
    W[0] = 0.0
    np.maximum(current[:-1] - A[1:], 0.0, out=W[1:])
    return EnginePath(A, current, W)


def _hybrid(top: Topology, n: int, seed: int) -> EnginePath:
    A = arrival_times(top.arrival, n, seed)
    a, b = top.a, top.b
    D = np.empty(n)
    W = np.empty(n)
    for g in range(a):
        idx = np.arange(g, n, a)
        if idx.size == 0:
            continue
        Ag = A[idx]
        jobs = (idx + 1).astype(np.uint64)
        Dg = np.full(idx.size, -np.inf)
        Vg = np.full(idx.size, -np.inf)
        for s in range(b):
            Qagg = np.zeros(idx.size)
            for t in range(s * a + 1, s * a + a + 1):
                Qagg += service_draws_at(top.service, seed, t, 1, jobs)
            V = _lindley(Ag, Qagg)
            np.maximum(Dg, V + Qagg, out=Dg)
            np.maximum(Vg, V, out=Vg)
        D[idx] = Dg
        W[idx] = Vg - Ag
    return EnginePath(A, D, W)


_DISPATCH = {
    SystemKind.SINGLE_SERVER: _single_server,
    SystemKind.FORK_JOIN: _fork_join,
    SystemKind.SPLIT_MERGE: _split_merge,
    SystemKind.REPLICATION: _replication,
    SystemKind.THINNED_MULTISERVER: _thinned,
    SystemKind.SQ_MULTISERVER: _sq_multiserver_path,
    SystemKind.SQ_FORK_JOIN: _sq_fork_join,
    SystemKind.MULTISTAGE_FORK_JOIN: _multistage,
    SystemKind.HYBRID: _hybrid,
}


def run_engine(top: Topology, n_jobs: int, seed: int) -> EnginePath:
    if n_jobs < 1:
        raise InvalidSpecError(f"n_jobs must be >= 1, got {n_jobs}")
    return _DISPATCH[top.kind](top, n_jobs, seed)
