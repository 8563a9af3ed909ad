"""Potential-fault detection: predict each sensor from its blanket and compare.

Each monitored variable is checked in turn with its own reading withheld and
every other reading taken at face value. The flagged variables form the
apparent-fault set ``S``; the running union after each check is the lattice
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .graph_model import ModelError, Network
from .inference import Distribution, posterior_given_blanket

MODES = ("argmax", "confidence", "combined")


@dataclass(frozen=True)
class DetectionPolicy:
    """When a prediction/reading disagreement counts as a potential fault.

    ``argmax`` flags a mismatch between the reading and the most probable
    state whose ordinal distance exceeds ``delta``; ``confidence`` flags a
    reading whose posterior probability is below ``tau``; ``combined`` flags
    if either rule fires.
    """

    mode: str = "combined"
    tau: float = 0.9
    delta: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown detection mode {self.mode!r}; expected one of {MODES}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    def check_against(self, net: Network) -> None:
        kmax = max((v.cardinality for v in net.variables), default=2)
        if self.delta >= kmax:
            raise ValueError(f"delta={self.delta} would forgive every mismatch "
                             f"(largest cardinality is {kmax})")


@dataclass(frozen=True)
class VariableCheck:
    variable: str
    observed: int
    predicted: int
    posterior: Distribution
    argmax_fired: bool
    confidence_fired: bool
    flagged: bool

    @property
    def p_observed(self) -> float:
        return self.posterior[self.observed]

    @property
    def degenerate(self) -> bool:
        return self.posterior.degenerate

    def reasons(self) -> list[str]:
        out = []
        if self.degenerate:
            out.append("zero-mass evidence")
        if self.argmax_fired:
            out.append(f"predicted {self.predicted} != observed {self.observed}")
        if self.confidence_fired:
            out.append(f"P(observed)={self.p_observed:.4g} below threshold")
        return out


@dataclass(frozen=True)
class FaultReport:
    """Outcome of one validation pass over the monitored variables."""

    monitored: tuple[str, ...]
    checks: Mapping[str, VariableCheck]
    apparent: frozenset
    trajectory: tuple[frozenset, ...] = field(default=())

    @property
    def flagged(self) -> list[str]:
        return [x for x in self.monitored if x in self.apparent]

    @classmethod
    def from_flags(cls, monitored: Sequence[str], flagged: Iterable[str],
                   checks: Mapping[str, VariableCheck] | None = None) -> "FaultReport":
        flagged = set(flagged)
        trajectory, current = [], frozenset()
        for x in monitored:
            if x in flagged:
                current = current | {x}
            trajectory.append(current)
        return cls(tuple(monitored), dict(checks or {}), frozenset(flagged), tuple(trajectory))


def _blanket_evidence(net: Network, x: str, readings: Mapping[str, int]) -> dict[str, int]:
    return {v: readings[v] for v in net.blankets.mb[x] if v in readings}


def predict(net: Network, x: str, readings: Mapping[str, int]) -> tuple[int, Distribution]:
    """Most probable state of ``x`` given the readings of its blanket."""
    dist = posterior_given_blanket(net, x, _blanket_evidence(net, x, readings))
    return dist.argmax(), dist


def detect_potential_fault(net: Network, x: str, readings: Mapping[str, int],
                           policy: DetectionPolicy | None = None) -> VariableCheck:
    policy = policy or DetectionPolicy()
    if x not in readings:
        raise ModelError(f"no reading for monitored variable {x!r}")
    observed = readings[x]
    if not 0 <= observed < net.cardinality(x):
        raise ModelError(f"reading {observed} out of range for {x!r}")
    predicted, dist = predict(net, x, readings)
    argmax_fired = predicted != observed and abs(observed - predicted) > policy.delta
    confidence_fired = dist[observed] < policy.tau
    if policy.mode == "argmax":
        flagged = argmax_fired
    elif policy.mode == "confidence":
        flagged = confidence_fired
    else:
        flagged = argmax_fired or confidence_fired
    flagged = flagged or dist.degenerate
    return VariableCheck(x, observed, predicted, dist, argmax_fired, confidence_fired, flagged)


def apparent_fault_set(net: Network, readings: Mapping[str, int],
                       policy: DetectionPolicy | None = None,
                       monitored: Sequence[str] | None = None) -> FaultReport:
    """Check every monitored variable (declaration order by default) and collect ``S``."""
    policy = policy or DetectionPolicy()
    policy.check_against(net)
    monitored = tuple(net.ids if monitored is None else monitored)
    for x in monitored:
        net.variable(x)
    if len(set(monitored)) != len(monitored):
        raise ValueError("monitored list contains duplicates")
    checks = {x: detect_potential_fault(net, x, readings, policy) for x in monitored}
    return FaultReport.from_flags(monitored, [x for x, c in checks.items() if c.flagged], checks)
