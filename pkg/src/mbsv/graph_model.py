"""Discrete Bayesian-network model and Markov-blanket bookkeeping.

A :class:`Network` is an immutable DAG over named discrete variables with one
conditional probability table per variable. The blanket of a variable is
always parents + children + spouses; the extended blanket adds the variable
itself. Both are computed once per network and exposed via :class:`BlanketSets`.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9


class ModelError(Exception):
    """Base class for invalid model descriptions."""


class UnknownId(ModelError):
    def __init__(self, ident, where: str = "network"):
        self.ident = ident
        super().__init__(f"unknown variable id {ident!r} in {where}")


class CycleDetected(ModelError):
    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__("graph contains a cycle: " + " -> ".join(self.cycle))


class MissingCpt(ModelError):
    pass


class BadRowSum(ModelError):
    def __init__(self, child: str, row: int, total: float):
        self.child = child
        self.row = row
        self.total = total
        super().__init__(f"CPT of {child!r}: row {row} sums to {total!r}, expected 1")


class BadCpt(ModelError):
    pass


@dataclass(frozen=True)
class Variable:
    id: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.id:
            raise ModelError("variable id must be non-empty")
        if len(self.states) < 2:
            raise ModelError(f"variable {self.id!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ModelError(f"variable {self.id!r} has duplicate state names")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def state_index(self, name) -> int:
        """Resolve a state name (or an in-range integer index) to its index."""
        if isinstance(name, (int, np.integer)) and not isinstance(name, bool):
            if 0 <= name < len(self.states):
                return int(name)
        elif name in self.states:
            return self.states.index(name)
        raise ModelError(f"variable {self.id!r} has no state {name!r}")


@dataclass(frozen=True, eq=False)
class Cpt:
    """Table of P(child | parents).

    Rows enumerate parent assignments in mixed-radix order: the first parent
    is the most significant digit and state indices follow declaration order.
    """

    child: str
    parents: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        table = np.array(self.table, dtype=float)
        if table.ndim == 1:
            table = table.reshape(1, -1)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def row(self, parent_states: Sequence[int], parent_cards: Sequence[int]) -> np.ndarray:
        idx = 0
        for s, k in zip(parent_states, parent_cards):
            idx = idx * k + s
        return self.table[idx]


@dataclass(frozen=True)
class BlanketSets:
    """Per-variable parents, children, spouses, blanket and extended blanket."""

    order: tuple[str, ...]
    parents: Mapping[str, frozenset]
    children: Mapping[str, frozenset]
    spouses: Mapping[str, frozenset]
    mb: Mapping[str, frozenset]
    emb: Mapping[str, frozenset]

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    def __contains__(self, x):
        return x in self.emb

    def check(self, x: str) -> None:
        if x not in self.emb:
            raise UnknownId(x, "blanket table")

    def rows(self):
        """Yield ``(id, sorted MB, sorted EMB)`` in declaration order."""
        for x in self.order:
            yield x, sorted(self.mb[x]), sorted(self.emb[x])


class Network:
    """Validated, immutable discrete Bayesian network.

    Args:
        variables: variables in declaration order.
        edges: ``(parent, child)`` pairs.
        cpts: one :class:`Cpt` per variable, parent order matching in-edges.
        name: optional model name.
    """

    def __init__(self, variables: Iterable[Variable], edges: Iterable[tuple[str, str]],
                 cpts: Iterable[Cpt], name: str = ""):
        self.name = name
        self.variables: tuple[Variable, ...] = tuple(variables)
        self._vars = {}
        for v in self.variables:
            if v.id in self._vars:
                raise ModelError(f"duplicate variable id {v.id!r}")
            self._vars[v.id] = v
        self.ids: tuple[str, ...] = tuple(v.id for v in self.variables)

        edge_list = []
        for p, c in edges:
            for e in (p, c):
                if e not in self._vars:
                    raise UnknownId(e, "edge list")
            if p == c:
                raise CycleDetected([p, p])
            if (p, c) in edge_list:
                raise ModelError(f"duplicate edge {p}->{c}")
            edge_list.append((p, c))
        self.edges: tuple[tuple[str, str], ...] = tuple(edge_list)

        parents = {x: [] for x in self.ids}
        children = {x: [] for x in self.ids}
        for p, c in self.edges:
            parents[c].append(p)
            children[p].append(c)
        self._parents = {x: tuple(ps) for x, ps in parents.items()}
        self._children = {x: tuple(cs) for x, cs in children.items()}
        self.topological_order: tuple[str, ...] = self._toposort()

        self.cpts: dict[str, Cpt] = {}
        for cpt in cpts:
            if cpt.child not in self._vars:
                raise UnknownId(cpt.child, "CPT list")
            if cpt.child in self.cpts:
                raise BadCpt(f"more than one CPT for {cpt.child!r}")
            self._check_cpt(cpt)
            self.cpts[cpt.child] = cpt
        missing = [x for x in self.ids if x not in self.cpts]
        if missing:
            raise MissingCpt("no CPT for variable(s): " + ", ".join(missing))
        # CPTs keep their own parent order; local factors need it to index rows.
        self._parents = {x: self.cpts[x].parents for x in self.ids}
        self.blankets: BlanketSets = self._blankets()

    def _check_cpt(self, cpt: Cpt) -> None:
        x = cpt.child
        for p in cpt.parents:
            if p not in self._vars:
                raise UnknownId(p, f"CPT of {x!r}")
        if sorted(cpt.parents) != sorted(self._parents[x]) or len(set(cpt.parents)) != len(cpt.parents):
            raise BadCpt(f"CPT of {x!r} lists parents {list(cpt.parents)}, "
                         f"graph has {list(self._parents[x])}")
        rows = math.prod(self._vars[p].cardinality for p in cpt.parents)
        k = self._vars[x].cardinality
        if cpt.table.shape != (rows, k):
            raise BadCpt(f"CPT of {x!r} has shape {cpt.table.shape}, expected {(rows, k)}")
        if not np.all(np.isfinite(cpt.table)) or np.any(cpt.table < 0) or np.any(cpt.table > 1):
            raise BadCpt(f"CPT of {x!r} has entries outside [0, 1]")
        for i, total in enumerate(cpt.table.sum(axis=1)):
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise BadRowSum(x, i, float(total))

    def _toposort(self) -> tuple[str, ...]:
        # Kahn's algorithm; ties resolved by declaration order.
        pos = {x: i for i, x in enumerate(self.ids)}
        indeg = {x: len(self._parents[x]) for x in self.ids}
        ready = [pos[x] for x in self.ids if indeg[x] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            x = self.ids[heapq.heappop(ready)]
            order.append(x)
            for c in self._children[x]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, pos[c])
        if len(order) != len(self.ids):
            raise CycleDetected(self._find_cycle({x for x in self.ids if indeg[x] > 0}))
        return tuple(order)

    def _find_cycle(self, remaining: set) -> list[str]:
        # Every node left after Kahn has a parent that is also left; walk back until a repeat.
        start = min(remaining, key=self.ids.index)
        path, seen = [start], {start: 0}
        x = start
        while True:
            x = next(p for p in self._parents[x] if p in remaining)
            if x in seen:
                cyc = path[seen[x]:] + [x]
                return list(reversed(cyc))
            seen[x] = len(path)
            path.append(x)

    def _blankets(self) -> BlanketSets:
        pa, su, sp, mb, emb = {}, {}, {}, {}, {}
        for x in self.ids:
            pa[x] = frozenset(self._parents[x])
            su[x] = frozenset(self._children[x])
            sp[x] = frozenset(p for c in self._children[x] for p in self._parents[c]) - {x}
            mb[x] = (pa[x] | su[x] | sp[x]) - {x}
            emb[x] = mb[x] | {x}
        return BlanketSets(self.ids, pa, su, sp, mb, emb)

    # -- accessors
    def __len__(self):
        return len(self.variables)

    def __contains__(self, x):
        return x in self._vars

    def __repr__(self):
        return f"Network({self.name!r}, {len(self.ids)} variables, {len(self.edges)} edges)"

    def variable(self, x: str) -> Variable:
        try:
            return self._vars[x]
        except KeyError:
            raise UnknownId(x) from None

    def cardinality(self, x: str) -> int:
        return self.variable(x).cardinality

    def parents(self, x: str) -> tuple[str, ...]:
        self.variable(x)
        return self._parents[x]

    def children(self, x: str) -> tuple[str, ...]:
        self.variable(x)
        return self._children[x]

    def cpt_row(self, x: str, assignment: Mapping[str, int]) -> np.ndarray:
        """P(x | parents) for the parent states found in ``assignment``."""
        cpt = self.cpts[x]
        return cpt.row([assignment[p] for p in cpt.parents],
                       [self._vars[p].cardinality for p in cpt.parents])

    def joint_size(self) -> int:
        return math.prod(v.cardinality for v in self.variables)


def build_network(desc: Mapping) -> Network:
    """Build a :class:`Network` from a parsed model description.

    ``desc`` holds ``variables`` (``{"id", "states"}``), ``edges``
    (``[parent, child]`` pairs) and ``cpts`` (``{"child", "parents", "table"}``).
    Table entries may be numbers or decimal strings.
    """
    try:
        variables = [Variable(v["id"], tuple(v["states"])) for v in desc["variables"]]
        edges = [tuple(e) for e in desc.get("edges", [])]
        for e in edges:
            if len(e) != 2:
                raise ModelError(f"edge {list(e)!r} is not a (parent, child) pair")
        cpts = []
        for c in desc.get("cpts", []):
            table = [[float(p) for p in row] for row in c["table"]]
            cpts.append(Cpt(c["child"], tuple(c.get("parents", ())), np.array(table, dtype=float)))
    except KeyError as exc:
        raise ModelError(f"model description is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ModelError(f"malformed model description: {exc}") from None
    return Network(variables, edges, cpts, name=desc.get("name", ""))


def markov_blanket(net: Network, x: str) -> frozenset:
    net.variable(x)
    return net.blankets.mb[x]


def extended_markov_blanket(net: Network, x: str) -> frozenset:
    net.variable(x)
    return net.blankets.emb[x]


def emb_table(net: Network) -> BlanketSets:
    """The precomputed blanket table; built once when the network is constructed."""
    return net.blankets


def blankets_from_edges(ids: Iterable[str], edges: Iterable[tuple[str, str]]) -> dict[str, frozenset]:
    """Parents + children + spouses straight from an edge list (no CPTs needed)."""
    ids = list(ids)
    edges = list(edges)
    out = {}
    for x in ids:
        pa = {p for p, c in edges if c == x}
        su = {c for p, c in edges if p == x}
        sp = {p for p, c in edges if c in su and p != x}
        out[x] = frozenset(pa | su | sp)
    return out


def reduced_model(net: Network, x: str) -> Network:
    """Sub-network over EMB(x) used to predict ``x``.

    Keeps the CPT of ``x`` and of each child of ``x``. Every other blanket
    member becomes a root with a uniform prior, since it is instantiated as
    evidence anyway.
    """
    emb = extended_markov_blanket(net, x)
    keep_cpt = {x, *net.children(x)}
    variables = [v for v in net.variables if v.id in emb]
    edges = [(p, c) for p, c in net.edges if c in keep_cpt and p in emb]
    cpts = []
    for v in variables:
        if v.id in keep_cpt:
            cpts.append(net.cpts[v.id])
        else:
            k = v.cardinality
            cpts.append(Cpt(v.id, (), np.full((1, k), 1.0 / k)))
    return Network(variables, edges, cpts, name=f"{net.name}|{x}" if net.name else x)


def random_network(seed: int, n_nodes: int, max_states: int = 2, edge_prob: float = 0.4,
                   max_parents: int | None = None, deterministic_frac: float = 0.0) -> Network:
    """Random DAG with Dirichlet(1) CPT rows, for property checks.

    ``deterministic_frac`` is the chance that a CPT row is replaced by a
    one-hot row, which exercises zero-mass evidence.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = [f"v{i}" for i in range(n_nodes)]
    perm = rng.permutation(n_nodes)
    variables = [Variable(x, tuple(f"s{j}" for j in range(int(rng.integers(2, max_states + 1)))))
                 for x in ids]
    edges = []
    for a, b in itertools.combinations(range(n_nodes), 2):
        if rng.random() < edge_prob:
            edges.append((ids[perm[a]], ids[perm[b]]))
    if max_parents is not None:
        kept, count = [], {x: 0 for x in ids}
        for p, c in edges:
            if count[c] < max_parents:
                kept.append((p, c))
                count[c] += 1
        edges = kept
    card = {v.id: v.cardinality for v in variables}
    cpts = []
    for v in variables:
        parents = tuple(p for p, c in edges if c == v.id)
        rows = math.prod(card[p] for p in parents)
        table = rng.dirichlet(np.ones(v.cardinality), size=rows)
        for r in range(rows):
            if rng.random() < deterministic_frac:
                table[r] = np.eye(v.cardinality)[rng.integers(v.cardinality)]
        cpts.append(Cpt(v.id, parents, table))
    return Network(variables, edges, cpts, name=f"random-{seed}")
