"""Literal per-job recursions for every topology.

This is the slow reference path of the engine cross-check: plain Python
loops that follow the defining start-time recursions of each system,
including the explicit idle-gap (Z) bookkeeping of the single-queue systems
and the in-sequence-departure bookkeeping of resequencing.  Full start/Z
traces are returned for the audit tests.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpecError
from .topology import StageMode, SystemKind, Topology

__all__ = [
    "maxplus_departures",
    "single_server_recursion",
    "forkjoin_recursion",
    "splitmerge_recursion",
    "replication_recursion",
    "thinned_recursion",
    "sq_multiserver_recursion",
    "sq_forkjoin_recursion",
    "multistage_recursion",
    "hybrid_recursion",
]


def single_server_recursion(A, L):
    """V(n) = max{A(n), V(n-1) + L(n-1)}; D(n) = V(n) + L(n)."""
    n = len(A)
    V = np.empty(n)
    V[0] = A[0]
    for i in range(1, n):
        V[i] = max(A[i], V[i - 1] + L[i - 1])
    return V, V + np.asarray(L)


def forkjoin_recursion(A, Q):
    """Per-server start recursions; a job departs when its slowest task does."""
    n, k = Q.shape
    V = np.empty((n, k))
    D = np.empty(n)
    for i in range(k):
        V[:, i] = single_server_recursion(A, Q[:, i])[0]
    for m in range(n):
        d = V[m, 0] + Q[m, 0]
        for i in range(1, k):
            d = max(d, V[m, i] + Q[m, i])
        D[m] = d
    return V, D


def splitmerge_recursion(A, Q):
    """All tasks of a job start together: V(n) = max{A(n), V(n-1) + max_i Q_i(n-1)}."""
    n, k = Q.shape
    V = np.empty(n)
    D = np.empty(n)
    V[0] = A[0]
    for m in range(n):
        if m > 0:
            V[m] = max(A[m], V[m - 1] + max(Q[m - 1]))
        D[m] = V[m] + max(Q[m])
    return V, D


def replication_recursion(A, L):
    """All replicas start together; the first finisher purges the rest."""
    n, k = L.shape
    V = np.empty(n)
    D = np.empty(n)
    V[0] = A[0]
    for m in range(n):
        if m > 0:
            V[m] = max(A[m], V[m - 1] + min(L[m - 1]))
        D[m] = V[m] + min(L[m])
    return V, D


def thinned_recursion(A, L, servers, resequencing=False):
    """FIFO per server on the thinned sub-streams.

    With resequencing, D(n) = max_i D_i(Y_i(n)): the in-sequence departure of
    job n waits for the last-assigned job of every server.
    """
    n = len(A)
    k = int(np.max(servers)) + 1 if n else 0
    V = np.empty(n)
    D_own = np.empty(n)
    busy_until = [None] * k       # (V, L) of the previous job per server
    last_departure = [0.0] * k    # D_i(Y_i(n)), D_i(0) = 0
    D = np.empty(n)
    for m in range(n):
        i = int(servers[m])
        prev = busy_until[i]
        v = A[m] if prev is None else max(A[m], prev[0] + prev[1])
        busy_until[i] = (v, L[m])
        V[m] = v
        D_own[m] = v + L[m]
        last_departure[i] = D_own[m]
        D[m] = max(last_departure)
    return V, D_own, (D if resequencing else D_own)


def sq_multiserver_recursion(A, L, k):
    """V(n) = max{A(n), V(n-1) + Z(n-1)} with Z the time until a server frees."""
    n = len(A)
    V = np.empty(n)
    Z = np.empty(n)
    busy_until = [0.0] * k
    z_prev = 0.0
    for m in range(n):
        v = A[0] if m == 0 else max(A[m], V[m - 1] + z_prev)
        j = min(range(k), key=lambda s: busy_until[s])
        busy_until[j] = v + L[m]
        earliest = min(busy_until)
        z_prev = earliest - v if earliest > v else 0.0
        V[m] = v
        Z[m] = z_prev
    return V, V + np.asarray(L), Z


def sq_forkjoin_recursion(A, Q):
    """Task-level chain V_i(n) = max{A(n), V_prev + Z_prev} over (job, task) order."""
    n, k = Q.shape
    V = np.empty((n, k))
    Z = np.empty((n, k))
    D = np.empty(n)
    busy_until = [0.0] * k
    v_prev = 0.0
    z_prev = 0.0
    first = True
    for m in range(n):
        for i in range(k):
            v = A[0] if first else max(A[m], v_prev + z_prev)
            first = False
            j = min(range(k), key=lambda s: busy_until[s])
            busy_until[j] = v + Q[m, i]
            earliest = min(busy_until)
            z_prev = earliest - v if earliest > v else 0.0
            v_prev = v
            V[m, i] = v
            Z[m, i] = z_prev
        d = V[m, 0] + Q[m, 0]
        for i in range(1, k):
            d = max(d, V[m, i] + Q[m, i])
        D[m] = d
    return V, D, Z


def multistage_recursion(A, Q_stages):
    """Tandem of fork-join stages: arrivals of stage j+1 are departures of stage j."""
    current = np.asarray(A)
    per_stage = []
    for Q in Q_stages:
        _, current = forkjoin_recursion(current, Q)
        per_stage.append(current)
    return per_stage, current


def hybrid_recursion(A, Q, a):
    """Round-robin thinning over a groups of fork-join sub-systems with k/a servers."""
    n, k = Q.shape
    if k % a != 0:
        raise InvalidSpecError(f"hybrid split a={a} does not divide k={k}")
    b = k // a
    D = np.empty(n)
    for g in range(a):
        idx = np.arange(g, n, a)
        if idx.size == 0:
            continue
        Qagg = np.zeros((idx.size, b))
        for s in range(b):
            for t in range(s * a, s * a + a):
                Qagg[:, s] += Q[idx, t]
        _, Dg = forkjoin_recursion(A[idx], Qagg)
        D[idx] = Dg
    return D


def maxplus_departures(top: Topology, arrivals, services, assignment=None) -> np.ndarray:
    """Departure times of the given topology by its literal recursion.

    `services` is (n,) for whole-job systems, (n, k) for task/replica systems,
    and (h, n, k) for the multi-stage network.  `assignment` supplies the
    0-based server index per job for randomly thinned systems.
    """
    A = np.asarray(arrivals, dtype=float)
    S = np.asarray(services, dtype=float)
    kind = top.kind
    if kind is SystemKind.SINGLE_SERVER:
        return single_server_recursion(A, S)[1]
    if kind is SystemKind.FORK_JOIN:
        return forkjoin_recursion(A, S)[1]
    if kind is SystemKind.SPLIT_MERGE:
        return splitmerge_recursion(A, S)[1]
    if kind is SystemKind.REPLICATION:
        return replication_recursion(A, S)[1]
    if kind is SystemKind.THINNED_MULTISERVER:
        if assignment is None:
            assignment = np.arange(len(A), dtype=np.int64) % top.k
        return thinned_recursion(A, S, assignment, top.resequencing)[2]
    if kind is SystemKind.SQ_MULTISERVER:
        return sq_multiserver_recursion(A, S, top.k)[1]
    if kind is SystemKind.SQ_FORK_JOIN:
        return sq_forkjoin_recursion(A, S)[1]
    if kind is SystemKind.MULTISTAGE_FORK_JOIN:
        if S.ndim != 3:
            raise InvalidSpecError("multi-stage services must have shape (h, n, k)")
        return multistage_recursion(A, S)[1]
    if kind is SystemKind.HYBRID:
        return hybrid_recursion(A, S, top.a)
    raise InvalidSpecError(f"unsupported topology kind {kind}")
