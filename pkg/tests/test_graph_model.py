import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbsv.graph_model import (BadCpt, BadRowSum, CycleDetected, MissingCpt, ModelError, Network,
                              UnknownId, Variable, blankets_from_edges, build_network, emb_table,
                              extended_markov_blanket, markov_blanket, random_network,
                              reduced_model)

FIG1_BLANKETS = {"m": {"t", "p"}, "t": {"m", "g"}, "p": {"m"}, "g": {"t"}}
FIG1_EMBS = {"m": {"m", "t", "p"}, "t": {"m", "t", "g"}, "p": {"m", "p"}, "g": {"t", "g"}}
TURBINE_BLANKETS = {
    "T": {"t1", "t2", "t3"},
    "t1": {"T", "t2", "t3", "f1", "f2"},
    "t2": {"T", "t1", "t3", "f1", "f2"},
    "t3": {"T", "t1", "t2", "f1", "f2"},
    "f1": {"t1", "t2", "t3", "ps", "pr"},
    "f2": {"t1", "t2", "t3", "pa"},
    "ps": {"f1"},
    "pr": {"f1", "dp"},
    "pa": {"f2", "da"},
    "dp": {"pr"},
    "da": {"pa"},
}


def desc(variables, edges, cpts):
    return {"variables": [{"id": v, "states": ["a", "b"]} for v in variables],
            "edges": [list(e) for e in edges], "cpts": cpts}


def test_fig1_topological_order(fig1):
    assert fig1.topological_order == ("m", "t", "p", "g")


def test_single_variable_network():
    net = build_network(desc(["x"], [], [{"child": "x", "parents": [], "table": [[0.3, 0.7]]}]))
    assert net.ids == ("x",)
    assert markov_blanket(net, "x") == frozenset()
    assert extended_markov_blanket(net, "x") == {"x"}


def test_two_cycle_rejected():
    cpts = [{"child": "m", "parents": ["t"], "table": [[0.5, 0.5]] * 2},
            {"child": "t", "parents": ["m"], "table": [[0.5, 0.5]] * 2}]
    with pytest.raises(CycleDetected) as exc:
        build_network(desc(["m", "t"], [("m", "t"), ("t", "m")], cpts))
    assert set(exc.value.cycle) == {"m", "t"}


def test_longer_cycle_reported():
    edges = [("a", "b"), ("b", "c"), ("c", "a")]
    cpts = [{"child": c, "parents": [p], "table": [[0.5, 0.5]] * 2} for p, c in edges]
    with pytest.raises(CycleDetected) as exc:
        build_network(desc(["a", "b", "c"], edges, cpts))
    cyc = exc.value.cycle
    assert cyc[0] == cyc[-1] and set(cyc) == {"a", "b", "c"}


def test_construction_errors():
    ok = {"child": "x", "parents": [], "table": [[0.5, 0.5]]}
    with pytest.raises(MissingCpt):
        build_network(desc(["x", "y"], [], [ok]))
    with pytest.raises(UnknownId):
        build_network(desc(["x"], [("x", "zz")], [ok]))
    with pytest.raises(BadRowSum) as exc:
        build_network(desc(["x"], [], [{"child": "x", "parents": [], "table": [[0.5, 0.4]]}]))
    assert exc.value.child == "x" and exc.value.row == 0
    with pytest.raises(BadCpt):
        build_network(desc(["x", "y"], [("x", "y")],
                           [ok, {"child": "y", "parents": [], "table": [[0.5, 0.5]]}]))
    with pytest.raises(BadCpt):
        build_network(desc(["x"], [], [{"child": "x", "parents": [], "table": [[1.5, -0.5]]}]))
    with pytest.raises(ModelError):
        Variable("x", ("only",))
    with pytest.raises(ModelError):
        Variable("x", ("a", "a"))


def test_bad_row_sum_names_the_offending_row():
    cpts = [{"child": "x", "parents": [], "table": [[0.5, 0.5]]},
            {"child": "y", "parents": ["x"], "table": [[0.5, 0.5], [0.6, 0.3]]}]
    with pytest.raises(BadRowSum) as exc:
        build_network(desc(["x", "y"], [("x", "y")], cpts))
    assert (exc.value.child, exc.value.row) == ("y", 1)
    assert "row 1" in str(exc.value)


def test_fig1_blankets(fig1):
    for x, mb in FIG1_BLANKETS.items():
        assert markov_blanket(fig1, x) == mb
        assert extended_markov_blanket(fig1, x) == FIG1_EMBS[x]
    table = emb_table(fig1)
    assert {x: set(table.emb[x]) for x in table} == FIG1_EMBS


def test_turbine_blankets_match_table3(turbine):
    assert {x: set(markov_blanket(turbine, x)) for x in turbine.ids} == TURBINE_BLANKETS
    assert markov_blanket(turbine, "f2") == {"t1", "t2", "t3", "pa"}


def test_unknown_id(fig1):
    with pytest.raises(UnknownId):
        markov_blanket(fig1, "nope")
    with pytest.raises(UnknownId):
        extended_markov_blanket(fig1, "nope")
    with pytest.raises(UnknownId):
        reduced_model(fig1, "nope")


def test_empty_network_table():
    net = Network([], [], [])
    assert len(emb_table(net)) == 0


def test_reduced_models(fig1):
    assert set(reduced_model(fig1, "m").ids) == {"m", "t", "p"}
    red_g = reduced_model(fig1, "g")
    assert set(red_g.ids) == {"t", "g"}
    assert red_g.edges == (("t", "g"),)
    np.testing.assert_allclose(red_g.cpts["t"].table, [[0.5, 0.5]])
    iso = build_network(desc(["x", "y"], [], [{"child": "x", "parents": [], "table": [[0.5, 0.5]]},
                                             {"child": "y", "parents": [], "table": [[0.5, 0.5]]}]))
    assert reduced_model(iso, "x").ids == ("x",)


def test_reduced_model_keeps_spouse_edges():
    net = random_network(3, 7, edge_prob=0.6)
    for x in net.ids:
        red = reduced_model(net, x)
        assert set(red.ids) == net.blankets.emb[x]
        assert red.blankets.mb[x] == net.blankets.mb[x]


def test_cpt_parent_order_may_differ_from_edge_order():
    cpts = [{"child": "a", "parents": [], "table": [[0.5, 0.5]]},
            {"child": "b", "parents": [], "table": [[0.5, 0.5]]},
            {"child": "c", "parents": ["b", "a"], "table": [[1, 0], [0, 1], [0, 1], [1, 0]]}]
    net = build_network(desc(["a", "b", "c"], [("a", "c"), ("b", "c")], cpts))
    assert net.parents("c") == ("b", "a")
    np.testing.assert_allclose(net.cpt_row("c", {"a": 1, "b": 0}), [0, 1])


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10))
def test_blanket_symmetry(seed, n):
    net = random_network(seed, n, edge_prob=0.45)
    mb = net.blankets.mb
    for x, y in itertools.permutations(net.ids, 2):
        assert (x in mb[y]) == (y in mb[x])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 9))
def test_table_consistency_and_order_independence(seed, n):
    net = random_network(seed, n, edge_prob=0.4)
    raw = blankets_from_edges(net.ids, net.edges)
    b = net.blankets
    for x in net.ids:
        assert b.mb[x] == raw[x]
        assert b.mb[x] == b.parents[x] | b.children[x] | b.spouses[x]
        assert x not in b.mb[x] and x in b.emb[x]
        assert b.emb[x] == b.mb[x] | {x}

    shuffled = list(net.variables)
    random.Random(seed).shuffle(shuffled)
    again = Network(shuffled, net.edges, net.cpts.values())
    assert {x: again.blankets.emb[x] for x in net.ids} == dict(b.emb)
    assert emb_table(net) is emb_table(net)
