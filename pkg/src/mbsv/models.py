"""Model and readings files, plus the two built-in turbine models.

Model files are JSON::

    {"name": "...",
     "variables": [{"id": "m", "states": ["low", "high"]}, ...],
     "edges": [["m", "t"], ...],
     "cpts": [{"child": "t", "parents": ["m"], "table": [[0.95, 0.05], [0.05, 0.95]]}, ...]}

Readings files hold either one ``{id: state}`` map or a list of them.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .graph_model import Cpt, ModelError, Network, Variable, build_network

BUILTIN_PREFIX = "builtin:"
FIG1_EPS = 0.05
GAS_TURBINE_EPS = 0.02


class ParseError(ModelError):
    def __init__(self, source: str, msg: str, line: int | None = None, col: int | None = None):
        self.source = source
        self.line = line
        self.col = col
        where = f"{source}:{line}:{col}" if line is not None else source
        super().__init__(f"{where}: {msg}")


def _noisy_row(target: int, k: int, eps: float) -> list[float]:
    if k == 1:
        return [1.0]
    other = eps / (k - 1)
    return [1.0 - eps if s == target else other for s in range(k)]


def noisy_cpt(child: str, parents: Sequence[str], card: Mapping[str, int], eps: float,
              prior: Sequence[float] | None = None) -> Cpt:
    """CPT whose child copies its parent (or the rounded mean of several parents) with noise ``eps``.

    Roots get ``prior`` (uniform if omitted).
    """
    k = card[child]
    if not parents:
        row = list(prior) if prior is not None else [1.0 / k] * k
        return Cpt(child, (), np.array([row]))
    rows = []
    for states in np.ndindex(*[card[p] for p in parents]):
        if len(parents) == 1:
            target = states[0]
        else:
            # Round half up; Python's round() would go to even.
            target = math.floor(sum(states) / len(states) + 0.5)
        rows.append(_noisy_row(min(target, k - 1), k, eps))
    return Cpt(child, tuple(parents), np.array(rows))


def _assemble(name: str, variables: list[Variable], edges: list[tuple[str, str]], eps: float,
              root_prior: Sequence[float] | None) -> Network:
    card = {v.id: v.cardinality for v in variables}
    cpts = [noisy_cpt(v.id, [p for p, c in edges if c == v.id], card, eps, root_prior)
            for v in variables]
    return Network(variables, edges, cpts, name=name)


def fig1_binary(eps: float = FIG1_EPS) -> Network:
    """Four-sensor turbine tree: megawatts m feeds temperature t and pressure p, t feeds fuel g."""
    states = ("low", "high")
    variables = [Variable(x, states) for x in ("m", "t", "p", "g")]
    edges = [("m", "t"), ("m", "p"), ("t", "g")]
    return _assemble("fig1-binary", variables, edges, eps, None)


GAS_TURBINE_VARIABLES = {
    "T": "Selected blade path temp.",
    "t1": "Blade path temp. avg. 1",
    "t2": "Blade path temp. avg. 2",
    "t3": "Blade path temp. avg. 3",
    "f1": "Flow of gas",
    "f2": "Flow of air",
    "ps": "Gas fuel pressure supply",
    "pr": "Real fuel valve position",
    "pa": "Real IGV position",
    "dp": "Position demand fuel valve",
    "da": "Position demand IGV's",
}


def gas_turbine(eps: float = GAS_TURBINE_EPS) -> Network:
    """Eleven-sensor gas-turbine model with three states per sensor."""
    states = ("low", "normal", "high")
    variables = [Variable(x, states) for x in GAS_TURBINE_VARIABLES]
    edges = [(t, c) for t in ("t1", "t2", "t3") for c in ("T", "f1", "f2")]
    edges += [("f1", "ps"), ("f1", "pr"), ("pr", "dp"), ("f2", "pa"), ("pa", "da")]
    return _assemble("gas-turbine", variables, edges, eps, (0.2, 0.6, 0.2))


BUILTINS = {"fig1-binary": fig1_binary, "gas-turbine": gas_turbine}


def parse_model(text: str, source: str = "<string>") -> Network:
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(source, exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(desc, dict):
        raise ParseError(source, "model file must hold a JSON object")
    return build_network(desc)


def load_model(ref: str | os.PathLike, eps: float | None = None) -> Network:
    """Load ``builtin:<name>`` or a JSON model file.

    ``eps`` overrides the noise level of a built-in model and is ignored for files.
    """
    ref = str(ref)
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX):]
        if name not in BUILTINS:
            raise ModelError(f"unknown builtin model {name!r}; known: {', '.join(BUILTINS)}")
        return BUILTINS[name]() if eps is None else BUILTINS[name](eps)
    path = Path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelError(f"cannot read model file {ref}: {exc.strerror}") from None
    return parse_model(text, ref)


def model_to_dict(net: Network) -> dict:
    return {
        "name": net.name,
        "variables": [{"id": v.id, "states": list(v.states)} for v in net.variables],
        "edges": [list(e) for e in net.edges],
        "cpts": [{"child": x, "parents": list(net.cpts[x].parents),
                  "table": net.cpts[x].table.tolist()} for x in net.ids],
    }


def dump_model(net: Network) -> str:
    # json writes floats with repr(), which round-trips exactly.
    return json.dumps(model_to_dict(net), indent=2)


def save_model(net: Network, path: str | os.PathLike) -> None:
    Path(path).write_text(dump_model(net) + "\n")


def models_equivalent(a: Network, b: Network, tol: float = 1e-12) -> bool:
    """Same variables, edge set, and CPTs (after aligning parent order) within ``tol``."""
    if [(v.id, v.states) for v in a.variables] != [(v.id, v.states) for v in b.variables]:
        return False
    if set(a.edges) != set(b.edges):
        return False
    for x in a.ids:
        ca, cb = a.cpts[x], b.cpts[x]
        ta = ca.table.reshape([a.cardinality(p) for p in ca.parents] + [a.cardinality(x)])
        tb = cb.table.reshape([b.cardinality(p) for p in cb.parents] + [b.cardinality(x)])
        perm = [list(cb.parents).index(p) for p in ca.parents] + [len(ca.parents)]
        if not np.allclose(ta, np.transpose(tb, perm), rtol=0.0, atol=tol):
            return False
    return True


def resolve_readings(net: Network, raw: Mapping) -> dict[str, int]:
    """Map ``{id: state name or index}`` to ``{id: index}``."""
    if not isinstance(raw, Mapping):
        raise ModelError("a reading vector must be an object mapping variable id to state")
    return {x: net.variable(x).state_index(s) for x, s in raw.items()}


def parse_readings(net: Network, text: str, source: str = "<string>") -> tuple[list[dict[str, int]], bool]:
    """Parse a readings document. Returns the vectors and whether it was a batch."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(source, exc.msg, exc.lineno, exc.colno) from None
    if isinstance(data, list):
        return [resolve_readings(net, r) for r in data], True
    return [resolve_readings(net, data)], False


def load_readings(net: Network, path: str | os.PathLike) -> tuple[list[dict[str, int]], bool]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read readings file {path}: {exc.strerror}") from None
    return parse_readings(net, text, str(path))


def readings_to_names(net: Network, readings: Mapping[str, int]) -> dict[str, str]:
    return {x: net.variable(x).states[s] for x, s in readings.items()}
