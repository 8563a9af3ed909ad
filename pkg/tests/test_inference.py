import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbsv.graph_model import Cpt, Network, Variable, random_network
from mbsv.inference import (IncompleteEvidence, StateSpaceTooLarge, joint_enumerate,
                            posterior_given_blanket, sample)
from mbsv.models import fig1_binary

EPS = 0.05


def fig1_brute(query, evidence, eps=EPS):
    """P(query | evidence) on the four-node tree, by summing all 16 assignments by hand."""
    def copy(a, b):
        return 1 - eps if a == b else eps

    w = [0.0, 0.0]
    for m, t, p, g in itertools.product((0, 1), repeat=4):
        a = {"m": m, "t": t, "p": p, "g": g}
        if any(a[k] != v for k, v in evidence.items()):
            continue
        w[a[query]] += 0.5 * copy(t, m) * copy(p, m) * copy(g, t)
    return [x / sum(w) for x in w]


def test_posterior_matches_hand_enumeration(fig1):
    d = posterior_given_blanket(fig1, "t", {"m": 0, "g": 0})
    assert d[0] == pytest.approx(0.9025 / 0.905, abs=1e-12)
    assert d[0] == pytest.approx(fig1_brute("t", {"m": 0, "g": 0})[0], abs=1e-12)
    d = posterior_given_blanket(fig1, "t", {"m": 0, "g": 1})
    assert d.probs == pytest.approx((0.5, 0.5), abs=1e-12)
    assert d.argmax() == 0


def test_every_fig1_blanket_posterior_against_hand_enumeration(fig1):
    for x in fig1.ids:
        mb = sorted(fig1.blankets.mb[x])
        for states in itertools.product((0, 1), repeat=len(mb)):
            ev = dict(zip(mb, states))
            got = posterior_given_blanket(fig1, x, ev).probs
            assert got == pytest.approx(fig1_brute(x, ev), abs=1e-12)


def test_empty_blanket_gives_prior():
    net = Network([Variable("x", ("a", "b", "c"))], [], [Cpt("x", (), np.array([[0.2, 0.5, 0.3]]))])
    assert posterior_given_blanket(net, "x", {}).probs == pytest.approx((0.2, 0.5, 0.3))
    assert joint_enumerate(net, "x", {}).probs == pytest.approx((0.2, 0.5, 0.3))


def test_incomplete_evidence_lists_missing(fig1):
    with pytest.raises(IncompleteEvidence) as exc:
        posterior_given_blanket(fig1, "t", {"m": 0})
    assert exc.value.missing == ["g"]


def test_own_reading_is_ignored(fig1):
    a = posterior_given_blanket(fig1, "t", {"m": 0, "g": 0, "t": 1, "p": 1})
    b = posterior_given_blanket(fig1, "t", {"m": 0, "g": 0})
    assert a == b


def test_zero_mass_is_flagged_degenerate():
    net = fig1_binary(eps=0.0)
    d = posterior_given_blanket(net, "t", {"m": 0, "g": 1})
    assert d.degenerate and d.probs == (0.5, 0.5)
    d = joint_enumerate(net, "t", {"m": 0, "g": 1})
    assert d.degenerate


def test_root_prior_from_enumeration(fig1):
    assert joint_enumerate(fig1, "m", {}).probs == pytest.approx((0.5, 0.5), abs=1e-15)


def test_state_space_guard():
    variables = [Variable(f"v{i}", ("a", "b")) for i in range(25)]
    cpts = [Cpt(v.id, (), np.array([[0.5, 0.5]])) for v in variables]
    net = Network(variables, [], cpts)
    with pytest.raises(StateSpaceTooLarge):
        joint_enumerate(net, "v0", {})


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8))
def test_oracle_equivalence(seed, n):
    net = random_network(seed, n, edge_prob=0.5)
    rng = np.random.default_rng(seed)
    for x in net.ids:
        ev = {v: int(rng.integers(net.cardinality(v))) for v in net.blankets.mb[x]}
        a = posterior_given_blanket(net, x, ev)
        b = joint_enumerate(net, x, ev)
        assert max(abs(p - q) for p, q in zip(a.probs, b.probs)) <= 1e-9
        assert math.isclose(sum(a.probs), 1.0, abs_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_blanket_shields_the_rest(seed, n):
    net = random_network(seed, n, max_states=3, edge_prob=0.5)
    for x in net.ids:
        mb = sorted(net.blankets.mb[x])
        rest = [v for v in net.ids if v != x and v not in net.blankets.mb[x]]
        for mb_states in itertools.product(*[range(net.cardinality(v)) for v in mb]):
            ev = dict(zip(mb, mb_states))
            ref = joint_enumerate(net, x, ev)
            for rest_states in itertools.product(*[range(net.cardinality(v)) for v in rest]):
                full = {**ev, **dict(zip(rest, rest_states))}
                got = joint_enumerate(net, x, full)
                if got.degenerate:
                    continue
                assert np.max(np.abs(np.subtract(got.probs, ref.probs))) <= 1e-9


def test_sample_is_seeded(fig1):
    assert sample(fig1, 42) == sample(fig1, 42)
    draws = {tuple(sample(fig1, s).values()) for s in range(50)}
    assert len(draws) > 1


def test_deterministic_channels_copy_root():
    net = fig1_binary(eps=0.0)
    for s in range(30):
        a = sample(net, s)
        assert a["t"] == a["m"] and a["p"] == a["m"] and a["g"] == a["t"]


def test_sample_frequency_binomial(fig1):
    rng = np.random.Generator(np.random.PCG64(123))
    n = 100_000
    hits = sum(a["t"] == a["m"] for a in (sample(fig1, rng=rng) for _ in range(n)))
    sigma = math.sqrt(n * EPS * (1 - EPS))
    assert abs(hits - n * (1 - EPS)) <= 3 * sigma
