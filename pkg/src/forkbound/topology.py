"""System topologies under study."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .distributions import DistributionSpec, distribution_from_dict, distribution_to_dict
from .envelopes import RoundRobin
from .errors import InvalidSpecError

__all__ = ["SystemKind", "StageMode", "RandomPolicy", "Topology"]


class SystemKind(enum.Enum):
    SINGLE_SERVER = "single_server"
    FORK_JOIN = "fork_join"
    SPLIT_MERGE = "split_merge"
    REPLICATION = "replication"
    THINNED_MULTISERVER = "thinned_multiserver"
    SQ_MULTISERVER = "sq_multiserver"
    SQ_FORK_JOIN = "sq_fork_join"
    MULTISTAGE_FORK_JOIN = "multistage_fork_join"
    # composed system: round-robin thinning over a groups of fork-join
    # sub-systems with k/a servers each
    HYBRID = "hybrid"


class StageMode(enum.Enum):
    INDEPENDENT = "independent"
    IDENTICAL = "identical"


@dataclass(frozen=True)
class RandomPolicy:
    """iid random job-to-server assignment with the given probability vector."""

    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if any(x <= 0 for x in self.p):
            raise InvalidSpecError(f"assignment probabilities must be > 0, got {self.p}")
        if abs(sum(self.p) - 1.0) > 1e-9:
            raise InvalidSpecError(f"assignment probabilities must sum to 1, got sum={sum(self.p)}")

    @staticmethod
    def uniform(k: int) -> "RandomPolicy":
        return RandomPolicy(tuple(1.0 / k for _ in range(k)))


@dataclass(frozen=True)
class Topology:
    """A system configuration: kind, parallelism, and the two driving distributions.

    `service` is the per-task distribution for fork-join/split-merge kinds and
    the per-job (or per-replica) distribution for the others.
    """

    kind: SystemKind
    arrival: DistributionSpec
    service: DistributionSpec
    k: int = 1
    h: int = 1
    policy: object = field(default_factory=RoundRobin)
    resequencing: bool = False
    stage_service: StageMode = StageMode.INDEPENDENT
    a: int = 1

    def __post_init__(self):
        if self.k < 1 or self.h < 1:
            raise InvalidSpecError(f"k and h must be >= 1, got k={self.k}, h={self.h}")
        if self.kind is SystemKind.SINGLE_SERVER and self.k != 1:
            raise InvalidSpecError("single_server has k = 1")
        if self.h > 1 and self.kind is not SystemKind.MULTISTAGE_FORK_JOIN:
            raise InvalidSpecError(f"h > 1 only applies to multistage_fork_join, got {self.kind}")
        if self.resequencing and self.kind is not SystemKind.THINNED_MULTISERVER:
            raise InvalidSpecError("resequencing only applies to thinned_multiserver")
        if isinstance(self.policy, RandomPolicy):
            if self.kind is not SystemKind.THINNED_MULTISERVER:
                raise InvalidSpecError("random assignment only applies to thinned_multiserver")
            if len(self.policy.p) != self.k:
                raise InvalidSpecError(
                    f"assignment probability vector has length {len(self.policy.p)}, need k={self.k}")
        elif not isinstance(self.policy, RoundRobin):
            raise InvalidSpecError(f"unknown assignment policy {self.policy!r}")
        if self.kind is SystemKind.HYBRID:
            if self.k % self.a != 0:
                raise InvalidSpecError(f"hybrid split a={self.a} does not divide k={self.k}")
        elif self.a != 1:
            raise InvalidSpecError("a > 1 only applies to hybrid")

    @property
    def b(self) -> int:
        """Servers per fork-join sub-system of a hybrid."""
        return self.k // self.a

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "arrival": distribution_to_dict(self.arrival),
            "service": distribution_to_dict(self.service),
            "k": self.k,
        }
        if self.kind is SystemKind.MULTISTAGE_FORK_JOIN:
            d["h"] = self.h
            d["stage_service"] = self.stage_service.value
        if self.kind is SystemKind.THINNED_MULTISERVER:
            d["resequencing"] = self.resequencing
            if isinstance(self.policy, RandomPolicy):
                d["policy"] = {"type": "random", "p": list(self.policy.p)}
            else:
                d["policy"] = {"type": "round_robin"}
        if self.kind is SystemKind.HYBRID:
            d["a"] = self.a
        return d

    @staticmethod
    def from_dict(d: dict) -> "Topology":
        try:
            kind = SystemKind(d["kind"])
            arrival = distribution_from_dict(d["arrival"])
            service = distribution_from_dict(d["service"])
        except KeyError as exc:
            raise InvalidSpecError(f"topology dict is missing field {exc}") from exc
        except ValueError as exc:
            raise InvalidSpecError(str(exc)) from exc
        policy_d = d.get("policy", {"type": "round_robin"})
        if policy_d.get("type") == "random":
            policy = RandomPolicy(tuple(policy_d["p"]))
        elif policy_d.get("type") == "round_robin":
            policy = RoundRobin()
        else:
            raise InvalidSpecError(f"unknown policy type {policy_d.get('type')!r}")
        return Topology(
            kind=kind,
            arrival=arrival,
            service=service,
            k=int(d.get("k", 1)),
            h=int(d.get("h", 1)),
            policy=policy,
            resequencing=bool(d.get("resequencing", False)),
            stage_service=StageMode(d.get("stage_service", "independent")),
            a=int(d.get("a", 1)),
        )
