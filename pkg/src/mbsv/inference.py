"""Posterior of a variable given its instantiated Markov blanket.

The main path is a local product over the variable's own CPT and its
children's CPTs. :func:`joint_enumerate` sums the full joint and is kept as an
independent oracle; it shares nothing with the local product beyond the CPTs.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph_model import ModelError, Network

MAX_JOINT_STATES = 2 ** 24
TIE_TOL = 1e-12

Assignment = Mapping[str, int]


class IncompleteEvidence(ModelError):
    def __init__(self, x: str, missing):
        self.variable = x
        self.missing = sorted(missing)
        super().__init__(f"evidence for {x!r} is missing blanket member(s): {', '.join(self.missing)}")


class StateSpaceTooLarge(ModelError):
    pass


@dataclass(frozen=True)
class Distribution:
    variable: str
    probs: tuple[float, ...]
    degenerate: bool = False

    def __getitem__(self, i: int) -> float:
        return self.probs[i]

    def __len__(self):
        return len(self.probs)

    def argmax(self) -> int:
        """Most probable state; near-ties go to the lowest index."""
        top = max(self.probs)
        return next(i for i, p in enumerate(self.probs) if p >= top - TIE_TOL)


def _normalize(x: str, weights: np.ndarray) -> Distribution:
    total = float(weights.sum())
    if total <= 0.0:
        k = len(weights)
        return Distribution(x, (1.0 / k,) * k, degenerate=True)
    return Distribution(x, tuple(float(w) for w in weights / total))


def _check_evidence(net: Network, evidence: Assignment) -> None:
    for v, s in evidence.items():
        k = net.cardinality(v)
        if not 0 <= s < k:
            raise ModelError(f"state index {s} out of range for {v!r} ({k} states)")


def posterior_given_blanket(net: Network, x: str, evidence: Assignment) -> Distribution:
    """P(x | MB(x) = evidence) by the local product.

    Entries of ``evidence`` outside the blanket, including ``x`` itself, are
    ignored. If every state gets zero mass the result is uniform and flagged
    ``degenerate``.
    """
    net.variable(x)
    mb = net.blankets.mb[x]
    missing = [v for v in mb if v not in evidence]
    if missing:
        raise IncompleteEvidence(x, missing)
    ev = {v: evidence[v] for v in mb}
    _check_evidence(net, ev)

    k = net.cardinality(x)
    weights = np.empty(k)
    for s in range(k):
        ev[x] = s
        w = net.cpt_row(x, ev)[s]
        for c in net.children(x):
            w *= net.cpt_row(c, ev)[ev[c]]
        weights[s] = w
    return _normalize(x, weights)


@functools.lru_cache(maxsize=16)
def joint_table(net: Network) -> np.ndarray:
    """Full joint as an array with one axis per variable, in declaration order."""
    size = net.joint_size()
    if size > MAX_JOINT_STATES:
        raise StateSpaceTooLarge(f"{net.name or 'network'} has {size} joint states "
                                 f"(limit {MAX_JOINT_STATES})")
    axis = {x: i for i, x in enumerate(net.ids)}
    shape = [net.cardinality(x) for x in net.ids]
    joint = np.ones(shape)
    for x in net.ids:
        cpt = net.cpts[x]
        scope = list(cpt.parents) + [x]
        factor = cpt.table.reshape([net.cardinality(v) for v in scope])
        # Move the factor's axes into network order and broadcast.
        order = sorted(range(len(scope)), key=lambda i: axis[scope[i]])
        factor = np.transpose(factor, order)
        bshape = [1] * len(shape)
        for i in order:
            bshape[axis[scope[i]]] = shape[axis[scope[i]]]
        joint = joint * factor.reshape(bshape)
    joint.setflags(write=False)
    return joint


def joint_enumerate(net: Network, x: str, evidence: Assignment) -> Distribution:
    """Exact P(x | evidence) by summing the full joint over all completions."""
    net.variable(x)
    if x in evidence:
        raise ModelError(f"evidence must not assign the query variable {x!r}")
    _check_evidence(net, evidence)
    joint = joint_table(net)
    index = tuple(evidence[v] if v in evidence else slice(None) for v in net.ids)
    sub = joint[index]
    # Remaining axes are the unassigned variables in declaration order.
    free = [v for v in net.ids if v not in evidence]
    keep = free.index(x)
    weights = sub.sum(axis=tuple(i for i in range(len(free)) if i != keep))
    return _normalize(x, np.asarray(weights, dtype=float))


def sample(net: Network, seed: int | None = None, rng: np.random.Generator | None = None) -> dict[str, int]:
    """Forward-sample one total assignment in topological order.

    Uses a PCG64 generator seeded with ``seed`` unless ``rng`` is given.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(seed))
    out: dict[str, int] = {}
    for x in net.topological_order:
        row = net.cpt_row(x, out)
        u = rng.random()
        s = int(np.searchsorted(np.cumsum(row), u, side="right"))
        # Guard against round-off pushing u past the last cumulative bin.
        out[x] = min(s, len(row) - 1)
    return {x: out[x] for x in net.ids}
