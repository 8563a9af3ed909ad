"""Fault injection, validation episodes and seeded campaigns.

An episode samples a ground-truth plant state, corrupts the readings of the
chosen sensors, and runs detection followed by isolation. The ``ideal``
detector skips inference and flags exactly the union of the true faults'
EMBs, which is what a perfect detector would report; comparing it with the
``probabilistic`` detector separates isolation errors from detection errors.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .detection import DetectionPolicy, FaultReport, apparent_fault_set
from .graph_model import BlanketSets, ModelError, Network
from .inference import sample
from .isolation import Verdict, VerdictCase, isolate

DETECTORS = ("probabilistic", "ideal")
MODES = ("random-different", "stuck")
MAX_REDRAWS = 1000


class BadStuckState(ModelError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FaultScenario:
    true_faults: frozenset
    mode: str = "random-different"
    stuck_state: str | int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "true_faults", frozenset(self.true_faults))
        if self.mode not in MODES:
            raise ValueError(f"unknown injection mode {self.mode!r}")
        if self.mode == "stuck" and self.stuck_state is None:
            raise BadStuckState("stuck mode needs a state")


@dataclass(frozen=True)
class Injection:
    readings: dict[str, int]
    non_manifesting: frozenset = frozenset()

    @property
    def manifesting(self) -> bool:
        return not self.non_manifesting


def inject_fault(net: Network, truth: Mapping[str, int], scenario: FaultScenario,
                 rng: np.random.Generator | None = None) -> Injection:
    """Replace the readings of the scenario's faulty sensors.

    ``random-different`` draws uniformly among the states other than the true
    one; ``stuck`` forces ``scenario.stuck_state``. A stuck sensor whose true
    state already equals the stuck state is reported as non-manifesting.
    """
    missing = [x for x in net.ids if x not in truth]
    if missing:
        raise ModelError("truth must assign every variable; missing " + ", ".join(missing))
    for x in sorted(scenario.true_faults):
        net.variable(x)
    if rng is None:
        rng = make_rng(scenario.seed)
    readings = dict(truth)
    quiet = set()
    for x in sorted(scenario.true_faults, key=net.ids.index):
        var = net.variable(x)
        if scenario.mode == "stuck":
            try:
                state = var.state_index(scenario.stuck_state)
            except ModelError as exc:
                raise BadStuckState(str(exc)) from None
            if state == truth[x]:
                quiet.add(x)
        else:
            others = [s for s in range(var.cardinality) if s != truth[x]]
            state = others[int(rng.integers(len(others)))]
        readings[x] = state
    return Injection(readings, frozenset(quiet))


def ideal_apparent_set(table: BlanketSets, faults) -> frozenset:
    return frozenset().union(*(table.emb[x] for x in faults))


@dataclass(frozen=True)
class EpisodeResult:
    scenario: FaultScenario
    truth: dict[str, int]
    readings: dict[str, int]
    report: FaultReport
    verdict: Verdict
    manifesting: bool
    detected: bool
    contained: bool
    exact: bool

    @staticmethod
    def score(true_faults: frozenset, verdict: Verdict) -> tuple[bool, bool, bool]:
        """``(detected, contained, exact)`` for a verdict against the true fault set.

        ``exact`` means the certain real faults are the true faults with no
        ambiguity left; for a fault-free episode it means a clean NoFault.
        """
        detected = bool(verdict.apparent)
        contained = true_faults <= verdict.candidates
        if true_faults:
            exact = verdict.real_faults == true_faults and not verdict.ambiguous_group
        else:
            exact = verdict.case is VerdictCase.NO_FAULT
        return detected, contained, exact

    def flags_consistent(self) -> bool:
        return self.score(self.scenario.true_faults, self.verdict) == (
            self.detected, self.contained, self.exact)


def run_episode(net: Network, scenario: FaultScenario, policy: DetectionPolicy | None = None,
                detector: str = "probabilistic", monitored: Sequence[str] | None = None,
                truth: Mapping[str, int] | None = None,
                rng: np.random.Generator | None = None, redraw: bool = False) -> EpisodeResult:
    """Sample (or take) a truth, inject the scenario, detect and isolate.

    With ``redraw`` a non-manifesting stuck fault triggers a fresh truth
    sample, up to a fixed number of attempts.
    """
    if detector not in DETECTORS:
        raise ValueError(f"unknown detector {detector!r}; expected one of {DETECTORS}")
    if rng is None:
        rng = make_rng(scenario.seed)
    monitored = tuple(net.ids if monitored is None else monitored)

    for _ in range(MAX_REDRAWS):
        t = dict(truth) if truth is not None else sample(net, rng=rng)
        injection = inject_fault(net, t, scenario, rng)
        if injection.manifesting or not redraw or truth is not None:
            break

    if detector == "ideal":
        active = scenario.true_faults - injection.non_manifesting
        S = ideal_apparent_set(net.blankets, active) & frozenset(monitored)
        report = FaultReport.from_flags(monitored, S)
    else:
        report = apparent_fault_set(net, injection.readings, policy, monitored)
    verdict = isolate(report.apparent, net.blankets)
    detected, contained, exact = EpisodeResult.score(scenario.true_faults, verdict)
    return EpisodeResult(scenario, t, injection.readings, report, verdict,
                         injection.manifesting, detected, contained, exact)


@dataclass(frozen=True)
class CampaignConfig:
    """Episode count and how each episode's true fault set is chosen.

    If ``fault_sets`` is given each episode draws one of them uniformly;
    otherwise an arity is drawn from ``arity_weights`` and that many distinct
    variables are picked uniformly.
    """

    episodes: int = 100
    arity_weights: Mapping[int, float] = field(default_factory=lambda: {1: 1.0})
    fault_sets: tuple[frozenset, ...] | None = None
    mode: str = "random-different"
    stuck_state: str | int | None = None
    policy: DetectionPolicy = field(default_factory=DetectionPolicy)
    detector: str = "probabilistic"
    seed: int = 0
    monitored: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("a campaign needs at least one episode")
        if self.fault_sets is not None:
            if not self.fault_sets:
                raise ValueError("fault_sets is empty")
            object.__setattr__(self, "fault_sets", tuple(frozenset(s) for s in self.fault_sets))
        elif not self.arity_weights or any(w < 0 for w in self.arity_weights.values()) \
                or sum(self.arity_weights.values()) <= 0:
            raise ValueError("arity weights must be non-negative with a positive total")


@dataclass(frozen=True)
class CampaignMetrics:
    episodes: int
    fault_episodes: int
    fault_free_episodes: int
    non_manifesting: int
    detection_rate: float | None
    containment_rate: float | None
    exact_rate: float | None
    false_alarm_rate: float | None
    verdict_histogram: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "episodes": self.episodes,
            "fault_episodes": self.fault_episodes,
            "fault_free_episodes": self.fault_free_episodes,
            "non_manifesting": self.non_manifesting,
            "detection_rate": self.detection_rate,
            "containment_rate": self.containment_rate,
            "exact_rate": self.exact_rate,
            "false_alarm_rate": self.false_alarm_rate,
            "verdict_histogram": dict(self.verdict_histogram),
        }


def _choose_faults(net: Network, config: CampaignConfig, rng: np.random.Generator) -> frozenset:
    if config.fault_sets is not None:
        return config.fault_sets[int(rng.integers(len(config.fault_sets)))]
    arities = sorted(config.arity_weights)
    w = np.array([config.arity_weights[a] for a in arities], dtype=float)
    arity = arities[int(rng.choice(len(arities), p=w / w.sum()))]
    if arity > len(net.ids):
        raise ValueError(f"fault arity {arity} exceeds the {len(net.ids)} variables")
    picks = rng.choice(len(net.ids), size=arity, replace=False)
    return frozenset(net.ids[i] for i in sorted(picks))


def campaign_episodes(net: Network, config: CampaignConfig):
    """Yield the campaign's episodes; episode ``i`` is seeded with ``config.seed + i``."""
    for i in range(config.episodes):
        seed = config.seed + i
        rng = make_rng(seed)
        faults = _choose_faults(net, config, rng)
        scenario = FaultScenario(faults, config.mode, config.stuck_state, seed)
        yield run_episode(net, scenario, config.policy, config.detector,
                          config.monitored, rng=rng, redraw=True)


def aggregate(results) -> CampaignMetrics:
    faulty = [r for r in results if r.scenario.true_faults]
    clean = [r for r in results if not r.scenario.true_faults]

    def rate(rs, attr):
        return sum(getattr(r, attr) for r in rs) / len(rs) if rs else None

    hist = Counter(r.verdict.case.value for r in results)
    return CampaignMetrics(
        episodes=len(results),
        fault_episodes=len(faulty),
        fault_free_episodes=len(clean),
        non_manifesting=sum(not r.manifesting for r in results),
        detection_rate=rate(faulty, "detected"),
        containment_rate=rate(faulty, "contained"),
        exact_rate=rate(faulty, "exact"),
        false_alarm_rate=rate(clean, "detected"),
        verdict_histogram={c.value: hist.get(c.value, 0) for c in VerdictCase},
    )


def run_campaign(net: Network, config: CampaignConfig) -> CampaignMetrics:
    return aggregate(list(campaign_episodes(net, config)))


def disjoint_pairs(table: BlanketSets, distinguishable_only: bool = True) -> list[frozenset]:
    """Pairs of variables with disjoint EMBs.

    With ``distinguishable_only`` a variable whose EMB is shared with another
    variable is excluded, since a fault there can never be pinned down.
    """
    counts = Counter(table.emb[x] for x in table)
    pool = [x for x in table if not distinguishable_only or counts[table.emb[x]] == 1]
    return [frozenset(p) for p in itertools.combinations(pool, 2)
            if table.emb[p[0]].isdisjoint(table.emb[p[1]])]


def subset_pairs(table: BlanketSets) -> list[tuple[str, str]]:
    """``(subset variable, superset variable)`` pairs with EMB(y) < EMB(x)."""
    return sorted((y, x) for x in table for y in table if table.emb[y] < table.emb[x])
