import random

import pytest
from hypothesis import given, settings, strategies as st

from fairplan import automata as A
from fairplan.automata import RabinPair
from fairplan.domain import AGENT, ENV, DomainError, RabinGame, enumerate_lassos, \
    is_state_action_fair, product
from fairplan.games import (GuardError, WinningCertificate, audit_certificate,
                            brute_force_rabin, extract_policy, solve_rabin, strategy_wins)
from fairplan.logic import eval_ltl_lasso, parse_formula
from fairplan.planning import goal_automaton
from fairplan.randgen import random_game


def self_loop(pairs):
    return RabinGame([AGENT, ENV], [(1,), (0,)], 0, pairs)


def test_single_pair_wins():
    G = self_loop([RabinPair(frozenset({0}), frozenset())])
    assert solve_rabin(G).agent_wins and brute_force_rabin(G).agent_wins


def test_f_cancels_i():
    G = self_loop([RabinPair(frozenset({0}), frozenset({0}))])
    assert not solve_rabin(G).agent_wins and not brute_force_rabin(G).agent_wins


def test_no_pairs_env_wins():
    G = self_loop([])
    assert not solve_rabin(G).agent_wins and not brute_force_rabin(G).agent_wins


def test_choice_matters():
    # agent 0 may go to env 2 (back to 0) or env 3 (to agent 1, self loop)
    G = RabinGame([AGENT, AGENT, ENV, ENV, ENV], [(2, 3), (4,), (0,), (1,), (1,)], 0,
                  [RabinPair(frozenset({1}), frozenset())])
    cert = solve_rabin(G)
    assert cert.agent_wins and cert.strategy[0] == 3
    assert audit_certificate(G, cert)


def test_env_choice_defeats_agent():
    # env vertex 2 may send the play to the bad agent vertex 1 forever
    G = RabinGame([AGENT, AGENT, ENV, ENV], [(2,), (3,), (0, 1), (1,)], 0,
                  [RabinPair(frozenset({0}), frozenset())])
    assert not solve_rabin(G).agent_wins
    assert not brute_force_rabin(G).agent_wins


def test_oracle_agreement_300():
    rng = random.Random(31)
    for _ in range(300):
        G = random_game(rng)
        cert = solve_rabin(G)
        assert cert.agent_wins == brute_force_rabin(G).agent_wins
        if cert.agent_wins:
            assert audit_certificate(G, cert)


def test_brute_force_guard():
    n = 13
    owner = [AGENT] * n + [ENV] * n
    succ = [(n + v,) for v in range(n)] + [((v + 1) % n,) for v in range(n)]
    with pytest.raises(GuardError):
        brute_force_rabin(RabinGame(owner, succ, 0, []))


def test_audit_rejects_env_certificate():
    assert not audit_certificate(self_loop([]), WinningCertificate("environment"))


def _agent_region(G):
    out = set()
    for v in G.agent_vertices():
        if solve_rabin(RabinGame(G.owner, G.succ, v, G.pairs)).agent_wins:
            out.add(v)
    return out


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_extra_pair_never_shrinks_region(seed):
    rng = random.Random(seed)
    G = random_game(rng)
    na = len(G.agent_vertices())
    extra = RabinPair(frozenset(v for v in range(na) if rng.random() < 0.4),
                      frozenset(v for v in range(na) if rng.random() < 0.3))
    G2 = RabinGame(G.owner, G.succ, G.initial, list(G.pairs) + [extra])
    assert _agent_region(G) <= _agent_region(G2)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_certificate_strategy_closed(seed):
    G = random_game(random.Random(seed))
    cert = solve_rabin(G)
    if not cert.agent_wins:
        return
    for v, e in cert.strategy.items():
        assert e in G.succ[v] and e in cert.region
        assert all(w in cert.region for w in G.succ[e])
    assert strategy_wins(G, cert.strategy)


# -- planning games


def test_psi1_game_env_wins(D1, PSI1):
    M = A.LazyUnion(A.unfair_drw(D1), goal_automaton(PSI1, "ltlf", D1))
    G = product(D1, M)
    assert not solve_rabin(G).agent_wins
    only = {v: G.succ[v][0] for v in G.agent_vertices()}
    assert not strategy_wins(G, only)


def test_reach_r_policy(D1):
    phi = parse_formula("F r", "ltlf")
    M = A.LazyUnion(A.unfair_drw(D1), goal_automaton(phi, "ltlf", D1))
    G = product(D1, M)
    cert = solve_rabin(G)
    assert cert.agent_wins
    pi = extract_policy(G, cert, D1, M)
    assert set(pi.out.values()) == {frozenset("a")}
    for w in enumerate_lassos(D1, 6, 6, policy=pi):
        if is_state_action_fair(w, D1):
            assert eval_ltl_lasso(w, phi, "ltlf")


def test_extracted_policies_random():
    from fairplan.randgen import random_domain, random_formula
    rng = random.Random(32)
    checked = 0
    for _ in range(40):
        D = random_domain(rng, max_states=4)
        phi = random_formula(rng, D.fluents, 2)
        goal = A.ltl_to_drw(phi, props=D.props, alphabet=D.letters())
        M = A.drw_union(A.unfair_drw(D), goal)
        G = product(D, M)
        cert = solve_rabin(G)
        if not cert.agent_wins:
            continue
        pi = extract_policy(G, cert, D, M)
        assert pi.memory <= M.size
        for w in enumerate_lassos(D, 4, 4, policy=pi):
            if is_state_action_fair(w, D):
                assert eval_ltl_lasso(w, phi)
        checked += 1
    assert checked > 5


def test_extract_needs_agent_certificate(D1):
    M = A.unfair_drw(D1)
    G = product(D1, M)
    with pytest.raises(DomainError):
        extract_policy(G, solve_rabin(G), D1, M)
