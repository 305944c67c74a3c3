"""Statistical delay bounds and exact-recursion simulation for multi-server
systems with synchronization constraints (fork-join, split-merge, replication,
thinning/resequencing, and non-idling single-queue variants)."""

from .distributions import (
    Deterministic,
    DistributionSpec,
    Erlang,
    Exponential,
    Uniform,
    Weibull,
    parse_distribution,
)
from .envelopes import (
    Direction,
    Envelope,
    RandomAssignment,
    RoundRobin,
    aggregate_tasks_envelope,
    forkjoin_service_envelope,
    gi_arrival_envelope,
    gi_service_envelope,
    replication_service_envelope,
    splitmerge_service_envelope,
    thinned_arrival_envelope,
)
from .bounds import (
    ExactOracleResult,
    TailBound,
    erlang_c,
    exact_mm1_sojourn,
    exact_mmk_waiting,
    expected_sojourn_bound,
    forkjoin_bounds,
    gg1_bounds,
    hybrid_bounds,
    invert_quantile,
    multistage_bounds,
    optimize_theta,
    sq_forkjoin_bounds,
    sq_multiserver_bounds,
    thinned_multiserver_bounds,
)
from .topology import RandomPolicy, StageMode, SystemKind, Topology
from .sampling import QuantileEstimate, SampleSet, estimate_quantile
from .sim import crosscheck_engine, simulate, trace_run
from .recursions import maxplus_departures
from .scenarios import Scenario, run_scenario

__version__ = "0.1.0"
