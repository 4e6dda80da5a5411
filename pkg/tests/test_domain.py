import copy
import itertools
import json
import random

import pytest

from fairplan import automata as A
from fairplan.domain import (AGENT, DomainError, FixedChoice, RoundRobin, dump_domain,
                             dump_policy, enumerate_lassos, is_policy_trace,
                             is_state_action_fair, is_trace, load_domain, load_policy,
                             make_domain, memoryless_policy, product, run_policy,
                             trace_steps)
from fairplan.fixtures import D1_DOCUMENT
from fairplan.games import brute_force_rabin, solve_rabin, strategy_wins
from fairplan.logic import Lasso, parse_formula
from fairplan.randgen import random_domain, random_domain_lasso

L, M_, R, ACT = frozenset("l"), frozenset("m"), frozenset("r"), frozenset("a")


def test_d1_shape(D1):
    assert len(D1.reachable_states()) == 3
    assert len(D1.transitions) == 4
    assert D1.init == L


def test_dead_state_rejected():
    doc = copy.deepcopy(D1_DOCUMENT)
    doc["transitions"] = [t for t in doc["transitions"] if t["from"] != ["r"]]
    with pytest.raises(DomainError, match="no applicable action"):
        load_domain(doc)
    D = load_domain(doc, auto_sink=True)
    assert frozenset({"deadend"}) in D.states
    assert all(D.applicable(s) for s in D.states)


def test_fluent_action_overlap_rejected():
    doc = copy.deepcopy(D1_DOCUMENT)
    doc["action_vars"] = ["a", "l"]
    with pytest.raises(DomainError, match="both fluent and action"):
        load_domain(doc)


@pytest.mark.parametrize("mutate", [
    lambda d: d["transitions"].append({"from": ["q"], "act": ["a"], "to": [["l"]]}),
    lambda d: d["transitions"].append({"from": ["l"], "act": ["a"], "to": [["l", "m"]]}),
    lambda d: d.update(init=["r", "m"]),
    lambda d: d.update(format="other/2"),
    lambda d: d.pop("states"),
])
def test_malformed_documents(mutate):
    doc = copy.deepcopy(D1_DOCUMENT)
    mutate(doc)
    with pytest.raises(DomainError):
        load_domain(doc)


def test_reachable_only():
    doc = copy.deepcopy(D1_DOCUMENT)
    doc["fluents"].append("z")
    doc["states"].append(["z"])
    doc["transitions"].append({"from": ["z"], "act": ["a"], "to": [["z"]]})
    assert len(load_domain(doc).states) == 4
    assert len(load_domain(doc, reachable_only=True).states) == 3


def test_dump_is_canonical(D1):
    text = dump_domain(D1)
    assert dump_domain(load_domain(text)) == text
    shuffled = copy.deepcopy(D1_DOCUMENT)
    shuffled["states"].reverse()
    shuffled["transitions"].reverse()
    assert dump_domain(load_domain(json.dumps(shuffled))) == text


# -- fairness


def test_tau1_is_fair(D1, TAU1):
    assert is_state_action_fair(TAU1, D1)


def test_lm_loop_is_unfair(D1):
    assert not is_state_action_fair(Lasso((), (L | ACT, M_ | ACT)), D1)


def test_prefix_is_irrelevant(D1):
    w = Lasso((L | ACT, M_ | ACT, R | ACT), (M_ | ACT, L | ACT, M_ | ACT, R | ACT))
    assert is_state_action_fair(w, D1)


def test_non_trace_rejected(D1):
    with pytest.raises(DomainError):
        is_state_action_fair(Lasso((), (L | ACT, R | ACT)), D1)
    with pytest.raises(DomainError):
        trace_steps(Lasso((), (M_ | ACT, L | ACT)), D1)
    assert not is_trace(Lasso((), (L | ACT,)), D1)


def test_deterministic_domains_always_fair():
    rng = random.Random(21)
    done = 0
    while done < 30:
        D = random_domain(rng, max_outcomes=1)
        assert D.is_deterministic()
        for w in itertools.islice(enumerate_lassos(D, 3, 3), 100):
            assert is_state_action_fair(w, D)
        done += 1


def test_enumerated_lassos_are_traces(D1):
    ws = list(enumerate_lassos(D1, 4, 4))
    assert ws and all(is_trace(w, D1) for w in ws)


# -- policies


def test_round_robin_yields_tau1(D1, TAU1):
    # the first visit to m goes back to l, so the loop is a rotation of tau1
    w = run_policy(D1, memoryless_policy(D1), RoundRobin())
    v = TAU1.loop
    rotations = [Lasso((), v[k:] + v[:k]) for k in range(len(v))]
    assert any(Lasso((), w.loop).same_word(x) for x in rotations)


def test_always_left(D1):
    pick = FixedChoice(lambda s, a, succs: L if L in succs else succs[0])
    w = run_policy(D1, memoryless_policy(D1), pick)
    assert w.same_word(Lasso((), (L | ACT, M_ | ACT)))


def test_bad_selector(D1):
    with pytest.raises(DomainError, match="non-successor"):
        run_policy(D1, memoryless_policy(D1), FixedChoice(lambda s, a, succs: frozenset("q")))


def test_deterministic_run_ignores_selector():
    rng = random.Random(22)
    for _ in range(20):
        D = random_domain(rng, max_outcomes=1)
        pi = memoryless_policy(D)
        w1 = run_policy(D, pi, RoundRobin())
        w2 = run_policy(D, pi, FixedChoice(lambda s, a, succs: succs[-1]))
        assert w1.same_word(w2)


def test_policy_runs_are_valid_lassos():
    rng = random.Random(23)
    for _ in range(500):
        D = random_domain(rng)
        pi = memoryless_policy(D, lambda s: rng.choice(D.applicable(s)))
        sel = RoundRobin() if rng.random() < 0.5 else FixedChoice(
            lambda s, a, succs: succs[hash((s, a)) % len(succs)])
        w = run_policy(D, pi, sel)
        assert is_trace(w, D) and is_policy_trace(w, D, pi)


def test_policy_round_trip(D1):
    pi = memoryless_policy(D1)
    text = dump_policy(pi)
    assert dump_policy(load_policy(text, D1)) == text
    doc = json.loads(text)
    doc["step"][0]["act"] = ["b"]
    with pytest.raises(DomainError):
        load_policy(doc, D1)
    with pytest.raises(DomainError):
        load_policy({"memory": 1}, D1)


# -- product


def test_product_structure(D1, PSI2):
    M = A.ltl_to_drw(PSI2, alphabet=D1.letters())
    G = product(D1, M)
    agents = G.agent_vertices()
    assert len(agents) <= len(D1.states) * M.size
    for v in range(G.n):
        assert G.succ[v]
    for p in G.pairs:
        assert all(G.owner[v] == AGENT for v in p.I | p.F)


def test_product_projection(D1, PSI2):
    # random plays project to traces and carry the automaton's run
    M = A.ltl_to_drw(PSI2, alphabet=D1.letters())
    G = product(D1, M)
    rng = random.Random(24)
    for _ in range(100):
        v, q = G.initial, M.initial
        for _ in range(20):
            d, q_here = G.label[v]
            assert q_here == q
            e = rng.choice(G.succ[v])
            d_, _, a = G.label[e]
            w = rng.choice(G.succ[e])
            assert G.label[w][0] in D1.succ(d, a)
            q = M.step(q, d | a)
            v = w


def test_product_alphabet_gap(D1):
    M = A.dfw_to_drw(A.ltlf_to_dfw(parse_formula("F l", "ltlf"), props="la",
                                   alphabet=[frozenset("la")]))
    with pytest.raises(A.AlphabetError):
        product(D1, M)


def test_unfair_alone_loses_to_tau1(D1):
    G = product(D1, A.unfair_drw(D1))
    assert not solve_rabin(G).agent_wins
    assert not brute_force_rabin(G).agent_wins


def test_unfair_or_psi2_loses_to_tau1(D1, PSI2):
    goal = A.ltl_to_drw(PSI2, props=D1.props, alphabet=D1.letters())
    M = A.drw_union(A.unfair_drw(D1), goal)
    G = product(D1, M)
    assert solve_rabin(G).agent_wins is False
    # one action in D1: the only strategy has a losing cycle (the tau1 loop)
    only = {v: G.succ[v][0] for v in G.agent_vertices()}
    assert not strategy_wins(G, only)


def test_product_vertex_bound():
    rng = random.Random(25)
    for _ in range(30):
        D = random_domain(rng)
        M = A.unfair_drw(D)
        G = product(D, M)
        assert len(G.agent_vertices()) <= len(D.states) * M.size


def test_random_domain_lassos_are_traces():
    rng = random.Random(26)
    for _ in range(100):
        D = random_domain(rng)
        w = random_domain_lasso(rng, D)
        if w is not None:
            assert is_trace(w, D)
            is_state_action_fair(w, D)


def test_make_domain_rejects_unknown_action():
    with pytest.raises(DomainError):
        make_domain(["p"], ["x"], [set()], [{"x"}], set(), [(set(), {"y"}, set())])
