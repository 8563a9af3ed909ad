"""Separate real from apparent faults by matching ``S`` against the EMB table.

Everything here is set algebra over a precomputed :class:`BlanketSets`; no
probabilities are involved. A real fault in ``x`` flags exactly EMB(x), and
several faults flag the union of their EMBs, so ``S`` is explained by the
variables whose EMB fits inside it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .graph_model import BlanketSets, UnknownId

MAX_COVER_CANDIDATES = 64


class VerdictCase(str, enum.Enum):
    NO_FAULT = "NoFault"
    SINGLE_REAL = "SingleReal"
    SINGLE_REAL_WITH_MASKED = "SingleRealWithMasked"
    MULTIPLE_DISJOINT = "MultipleDisjoint"
    INDISTINGUISHABLE = "Indistinguishable"


class CoverSearchLimit(Exception):
    pass


@dataclass(frozen=True)
class Verdict:
    case: VerdictCase
    apparent: frozenset
    real_faults: frozenset = frozenset()
    ambiguous_group: frozenset = frozenset()
    masked_candidates: frozenset = frozenset()
    covers: tuple[frozenset, ...] = ()
    unexplained: bool = False

    @property
    def candidates(self) -> frozenset:
        """Every variable that may hold a real fault."""
        return self.real_faults | self.ambiguous_group | self.masked_candidates

    def describe(self) -> str:
        if self.case is VerdictCase.NO_FAULT:
            return "no fault"
        parts = []
        if self.real_faults:
            parts.append("real fault: " + ", ".join(sorted(self.real_faults)))
        if self.ambiguous_group:
            parts.append("one real fault among: " + ", ".join(sorted(self.ambiguous_group)))
        if self.case is VerdictCase.INDISTINGUISHABLE:
            parts.append("multiple faults, not distinguishable")
        if self.masked_candidates:
            parts.append("possible masked: " + ", ".join(sorted(self.masked_candidates)))
        if self.unexplained:
            parts.append("some flags unexplained by any EMB")
        return "; ".join(parts)

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "apparent": sorted(self.apparent),
            "real_faults": sorted(self.real_faults),
            "ambiguous_group": sorted(self.ambiguous_group),
            "masked_candidates": sorted(self.masked_candidates),
            "covers": [sorted(c) for c in self.covers],
            "unexplained": self.unexplained,
        }


@dataclass(frozen=True)
class DistinguishabilityReport:
    identical_groups: tuple[tuple[str, ...], ...]
    subset_pairs: tuple[tuple[str, str], ...]
    all_distinct: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "all_distinct", not self.identical_groups)

    def to_dict(self) -> dict:
        return {
            "identical_groups": [list(g) for g in self.identical_groups],
            "subset_pairs": [list(p) for p in self.subset_pairs],
            "all_distinct": self.all_distinct,
        }


def _as_set(S: Iterable[str], table: BlanketSets) -> frozenset:
    S = frozenset(S)
    for x in sorted(S):
        if x not in table:
            raise UnknownId(x, "apparent-fault set")
    return S


def _fitting(S: frozenset, table: BlanketSets) -> list[str]:
    return sorted(x for x in table if table.emb[x] <= S)


def exact_cover_search(S: Iterable[str], table: BlanketSets,
                       max_candidates: int = MAX_COVER_CANDIDATES) -> list[frozenset]:
    """All families of pairwise-disjoint EMBs whose union is exactly ``S``.

    Returns families as sets of variable ids, sorted by their sorted member
    lists. Raises :class:`CoverSearchLimit` if more than ``max_candidates``
    EMBs fit inside ``S``.
    """
    S = _as_set(S, table)
    if not S:
        return [frozenset()]
    cands = _fitting(S, table)
    if len(cands) > max_candidates:
        raise CoverSearchLimit(f"{len(cands)} candidate EMBs exceed the limit of {max_candidates}")

    covers: list[frozenset] = []

    def search(uncovered: frozenset, usable: list[str], chosen: list[str]):
        if not uncovered:
            covers.append(frozenset(chosen))
            return
        # Branch on the uncovered element with the fewest usable EMBs.
        options = None
        for e in sorted(uncovered):
            opts = [y for y in usable if e in table.emb[y]]
            if options is None or len(opts) < len(options):
                options = opts
                if not opts:
                    return
        for y in options:
            emb = table.emb[y]
            rest = [z for z in usable if z != y and table.emb[z].isdisjoint(emb)]
            search(uncovered - emb, rest, chosen + [y])

    search(S, cands, [])
    return sorted(set(covers), key=lambda c: (len(c), sorted(c)))


def isolate(S: Iterable[str], table: BlanketSets) -> Verdict:
    """Classify an apparent-fault set into one of the five verdict cases."""
    S = _as_set(S, table)
    if not S:
        return Verdict(VerdictCase.NO_FAULT, S)

    fitting = _fitting(S, table)
    equal = frozenset(x for x in fitting if table.emb[x] == S)
    proper = frozenset(x for x in fitting if table.emb[x] < S)

    if equal:
        real, ambiguous = (equal, frozenset()) if len(equal) == 1 else (frozenset(), equal)
        case = VerdictCase.SINGLE_REAL_WITH_MASKED if proper else VerdictCase.SINGLE_REAL
        return Verdict(case, S, real, ambiguous, proper)

    try:
        covers = [c for c in exact_cover_search(S, table) if len(c) >= 2]
    except CoverSearchLimit:
        covers = []
    if covers:
        # Only members common to every disjoint explanation are certain.
        real = frozenset.intersection(*covers)
        return Verdict(VerdictCase.MULTIPLE_DISJOINT, S, real, frozenset(),
                       frozenset(fitting) - real, tuple(covers))

    explained = frozenset().union(*(table.emb[x] for x in fitting))
    return Verdict(VerdictCase.INDISTINGUISHABLE, S, masked_candidates=frozenset(fitting),
                   unexplained=explained != S)


def distinguishability_report(table: BlanketSets) -> DistinguishabilityReport:
    """Groups of variables sharing an EMB, and pairs ``(y, x)`` with EMB(y) < EMB(x)."""
    by_emb: dict[frozenset, list[str]] = {}
    for x in table:
        by_emb.setdefault(table.emb[x], []).append(x)
    groups = sorted(tuple(sorted(g)) for g in by_emb.values() if len(g) > 1)
    pairs = sorted((y, x) for x in table for y in table if table.emb[y] < table.emb[x])
    return DistinguishabilityReport(tuple(groups), tuple(pairs))
