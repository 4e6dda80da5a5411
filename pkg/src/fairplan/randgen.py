"""Seeded random instances for property tests and demos."""
from __future__ import annotations

import random

from . import logic
from .automata import DRW, RabinPair, all_letters
from .domain import AGENT, ENV, RabinGame, make_domain
from .logic import Lasso


def random_domain(rng: random.Random, max_states=6, max_actions=3, max_outcomes=2,
                  n_fluents=3, exact_states=None):
    """Small FOND domain; every state has at least one applicable action."""
    fluents = [f"p{i}" for i in range(n_fluents)]
    acts = [f"x{i}" for i in range(rng.randint(1, max_actions))]
    n = exact_states or rng.randint(1, max_states)
    pool = [frozenset(f for f, bit in zip(fluents, format(k, f"0{n_fluents}b")) if bit == "1")
            for k in range(2 ** n_fluents)]
    states = rng.sample(pool, n)
    trans = []
    for s in states:
        k = rng.randint(1, len(acts))
        for a in rng.sample(acts, k):
            for t in rng.sample(states, min(len(states), rng.randint(1, max_outcomes))):
                trans.append((s, {a}, t))
    return make_domain(fluents, acts, states, [{a} for a in acts], states[0], trans)


def random_target(rng: random.Random, D):
    """Fluent literal or a conjunction of two literals."""
    lits = [logic.Atom(f) if rng.random() < 0.6 else logic.Not(logic.Atom(f))
            for f in rng.sample(list(D.fluents), rng.randint(1, 2))]
    return logic.And(*lits)


def random_formula(rng: random.Random, props, depth=3, temporal=True):
    """Random formula over ``props`` with operator nesting at most ``depth``."""
    props = sorted(props)
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.05:
            return logic.TRUE
        return logic.Atom(rng.choice(props))
    ops = ["not", "and", "or"] + (["X", "F", "G", "U"] if temporal else [])
    op = rng.choice(ops)
    sub = lambda: random_formula(rng, props, depth - 1, temporal)  # noqa: E731
    if op == "not":
        return logic.Not(sub())
    if op == "and":
        return logic.And(sub(), sub())
    if op == "or":
        return logic.Or(sub(), sub())
    if op == "X":
        return logic.Next(sub())
    if op == "F":
        return logic.Eventually(sub())
    if op == "G":
        return logic.Always(sub())
    return logic.Until(sub(), sub())


def random_lasso(rng: random.Random, props, max_prefix=4, max_loop=4):
    letters = all_letters(props)
    u = tuple(rng.choice(letters) for _ in range(rng.randint(0, max_prefix)))
    v = tuple(rng.choice(letters) for _ in range(rng.randint(1, max_loop)))
    return Lasso(u, v)


def random_domain_lasso(rng: random.Random, D, max_prefix=6, max_loop=6, tries=200):
    """Random walk of ``D`` closed into a lasso at a repeated state."""
    for _ in range(tries):
        s = D.init
        steps = []
        length = rng.randint(1, max_prefix + max_loop)
        for _ in range(length):
            a = rng.choice(D.applicable(s))
            steps.append((s, a))
            s = rng.choice(D.succ(s, a))
        # positions whose state equals the state after the last step
        starts = [i for i, (x, _) in enumerate(steps)
                  if x == s and len(steps) - i <= max_loop and i <= max_prefix]
        if starts:
            k = rng.choice(starts)
            letters = [x | a for x, a in steps]
            return Lasso(tuple(letters[:k]), tuple(letters[k:]))
    return None


def random_game(rng: random.Random, max_agent=7, max_pairs=2, max_actions=2, max_choices=2):
    """Two-tier game with agent vertices 0..k-1 followed by env vertices."""
    na = rng.randint(1, max_agent)
    owner = [AGENT] * na
    succ = [None] * na
    for v in range(na):
        outs = []
        for _ in range(rng.randint(1, max_actions)):
            e = len(owner)
            owner.append(ENV)
            succ.append(tuple(sorted({rng.randrange(na) for _ in range(rng.randint(1, max_choices))})))
            outs.append(e)
        succ[v] = tuple(outs)
    pairs = []
    for _ in range(rng.randint(0, max_pairs)):
        I = frozenset(v for v in range(na) if rng.random() < 0.35)
        F = frozenset(v for v in range(na) if rng.random() < 0.3)
        pairs.append(RabinPair(I, F))
    return RabinGame(owner, succ, 0, pairs)


def random_drw(rng: random.Random, props=("p", "q"), max_states=4, max_pairs=2):
    props = frozenset(props)
    alphabet = all_letters(props)
    n = rng.randint(1, max_states)
    delta = tuple({a: rng.randrange(n) for a in alphabet} for _ in range(n))
    pairs = tuple(RabinPair(frozenset(q for q in range(n) if rng.random() < 0.4),
                            frozenset(q for q in range(n) if rng.random() < 0.3))
                  for _ in range(rng.randint(1, max_pairs)))
    return DRW(props, alphabet, 0, delta, pairs)
