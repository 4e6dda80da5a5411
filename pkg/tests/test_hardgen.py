import random
import re

import numpy as np
import pytest

from fairplan import hardgen as H
from fairplan import logic
from fairplan.domain import dump_domain
from fairplan.hardgen import AlternatingTM, GeneratorError
from fairplan.logic import Atom, Next, Not, And, Until, eval_ltlf_finite

CHAR = {H.ZERO: "0", H.ONE: "1", H.PCT: "%", H.DOLLAR: "$", H.HASH: "#",
        H.HASH1: "'", H.HASH2: '"', H.BOT: "B"}


def symbol(state):
    (s,) = [f for f in state if f in CHAR]
    return CHAR[s]


def prefix_regex(n):
    cell = "[01%$]"
    round_ = f"#[01]+'{cell}+\"[01]{{{n}}}"
    partial = f"#(?:B*|[01]+(?:'(?:{cell}+(?:\"[01]{{0,{n}}})?)?)?)"
    return re.compile(f"%{cell}*(?:{round_})*(?:{partial})?")


def universal_machine(second):
    """q0 (exists) -> q1 (forall) -> {qa, second} on the blank."""
    trans = [(("_", "q0"), ("_", "q1"), "N"),
             (("_", "q1"), ("_", "qa"), "N"),
             (("_", "q1"), ("_", second), "N")]
    return AlternatingTM(("q0",), ("q1",), ("0", "_"), "_", tuple(trans), "q0", "qa", "qr")


# -- machines


def test_fixture_acceptance():
    assert H.atm_accepts(H.machine_accept(), "0", 1)
    assert not H.atm_accepts(H.machine_reject(), "0", 1)
    assert H.atm_accepts(H.machine_branch(), "0", 1)


def test_universal_needs_all_branches():
    assert H.atm_accepts(universal_machine("qa"), "", 1)
    assert not H.atm_accepts(universal_machine("qr"), "", 1)


def test_branch_moves_head():
    conf = H.initial_config(H.machine_branch(), "0", 1)
    assert conf == (("0", "q0"), "_")
    succ = dict(H.step_configs(H.machine_branch(), conf))
    assert set(succ.values()) == {("0", ("_", "qa")), (("0", "qr"), "_")}


def test_off_tape_move_stays():
    t = (("0", "q0"), ("0", "qa"), "L")
    assert H._apply(t, None, ("0", "q0"), "_") == ("0", "qa")


@pytest.mark.parametrize("kwargs", [
    dict(exists=("q0",), forall=("q0",)),
    dict(initial="q1"),
    dict(blank="x"),
    dict(transitions=((("_", "q0"), ("_", "q0"), "N"),)),
    dict(transitions=((("_", "q0"), ("_", "qa"), "U"),)),
    dict(transitions=((("_", "qa"), ("_", "q0"), "N"),)),
])
def test_machine_validation(kwargs):
    base = dict(exists=("q0",), forall=("q1",), alphabet=("0", "_"), blank="_",
                transitions=(), initial="q0", accept="qa", reject="qr")
    base.update(kwargs)
    with pytest.raises(GeneratorError):
        AlternatingTM(**base)


def test_non_halting_machine_rejected():
    # q0 -> q1 -> q0 forever
    M = AlternatingTM(("q0",), ("q1",), ("0", "_"), "_",
                      ((("_", "q0"), ("_", "q1"), "N"), (("_", "q1"), ("_", "q0"), "N")),
                      "q0", "qa", "qr")
    with pytest.raises(GeneratorError):
        H.gen_goal(M, "", 1)


def test_input_too_long():
    with pytest.raises(GeneratorError):
        H.gen_goal(H.machine_accept(), "000", 1)


def test_machine_file_round_trip():
    M = H.machine_branch()
    text = H.dump_atm(M)
    assert H.load_atm(text) == M
    with pytest.raises(GeneratorError):
        H.load_atm('{"format": "other"}')
    with pytest.raises(GeneratorError):
        H.load_atm('{"exists": ["q0"]}')


# -- domain


@pytest.mark.parametrize("n", [1, 2])
def test_domain_letters(n):
    D = H.gen_domain(n)
    for s in D.states:
        assert sum(f in CHAR for f in s) == 1
    assert len(D.letters()) == len({(s, a) for s, a, _ in D.transitions})


def test_bot_is_absorbing():
    D = H.gen_domain(1)
    bot = frozenset({H.BOT})
    for a in D.applicable(bot):
        assert D.succ(bot, a) == (bot,)


def test_bot_only_after_hash():
    D = H.gen_domain(2)
    bot = frozenset({H.BOT})
    for s, a, t in D.transitions:
        if t == bot:
            assert H.HASH in s or s == bot


def test_domain_guard():
    with pytest.raises(GeneratorError):
        H.gen_domain(0)
    with pytest.raises(GeneratorError):
        H.gen_domain(H.MAX_N + 1)


def _domain_strings(D, k):
    """String of symbols -> set of states reachable by that string."""
    layer = {"%": {D.init}}
    for _ in range(k - 1):
        nxt = {}
        for w, states in layer.items():
            for s in states:
                for a in D.applicable(s):
                    for t in D.succ(s, a):
                        nxt.setdefault(w + symbol(t), set()).add(t)
        layer = nxt
    return set(layer)


def _regex_strings(rx, k):
    layer = {"%"}
    for _ in range(k - 1):
        layer = {w + c for w in layer for c in "01%$#'\"B" if rx.fullmatch(w + c)}
    return layer


@pytest.mark.parametrize("n", [1, 2])
def test_domain_prefixes_match_shape_exhaustively(n):
    D = H.gen_domain(n)
    rx = prefix_regex(n)
    for k in range(1, 10):
        assert _domain_strings(D, k) == _regex_strings(rx, k)


def test_random_twenty_step_walks_match_shape():
    rng = random.Random(61)
    for n in (1, 2, 3):
        D = H.gen_domain(n)
        rx = prefix_regex(n)
        for _ in range(500):
            s, word = D.init, ""
            for _ in range(20):
                word += symbol(s)
                a = rng.choice(D.applicable(s))
                s = rng.choice(D.succ(s, a))
            assert rx.fullmatch(word), word


def test_who_writes_what():
    # the environment moves exactly at even-round T letters and at K letters
    D = H.gen_domain(2)
    for s, a, t in D.transitions:
        env = len(D.succ(s, a)) > 1
        if env:
            assert a == frozenset({H.WAIT})
            assert (H.IN_T in t and H.ODD not in t) or H.IN_K in t


def test_domain_independent_of_machine():
    texts = {dump_domain(H.gen_instance(M, x, 1).domain)
             for M, x in [(H.machine_accept(), "0"), (H.machine_reject(), ""),
                          (H.machine_branch(), "0_")]}
    assert len(texts) == 1


# -- goal


def test_scan_two_is_nested_scan():
    f1, f2 = Atom("p"), Atom("q")
    once = Until(Not(f1), And(f1, Next(f2)))
    assert H.scan(f1, f2, 1) is once
    assert H.scan(f1, f2, 2) is H.scan(f1, H.scan(f1, f2))
    assert H.scan(f1, f2, 2) is Until(Not(f1), And(f1, Next(once)))


def test_goal_size_linear_in_n():
    sizes = [logic.dag_size(H.gen_goal(H.machine_branch(), "0", n)) for n in (1, 2, 3)]
    assert sizes[0] < sizes[1] < sizes[2]
    slope, icept = np.polyfit([1, 2, 3], sizes, 1)
    fit = np.polyval([slope, icept], [1, 2, 3])
    r2 = 1 - np.sum((np.array(sizes) - fit) ** 2) / np.sum((sizes - np.mean(sizes)) ** 2)
    assert r2 > 0.95


def test_goal_atoms_are_domain_fluents():
    inst = H.gen_instance(H.machine_branch(), "0", 2)
    assert logic.atoms(inst.goal) <= set(inst.domain.fluents)
    assert inst.dialect == "ltlf"


def _letters(text):
    """Letters for a handcrafted symbol string (phase fluents omitted)."""
    inv = {v: k for k, v in CHAR.items()}
    return [frozenset({inv[c]}) for c in text]


def test_cha_on_handcrafted_words():
    g = H.GoalBuilder(H.machine_accept(), "0", 1)
    m = g.enc.m
    sym = "0" * m
    # two blocks numbered 0 and 1, then the challenge
    blocks = f"%0${sym}%1${sym}"
    cha = g.cha(1)
    assert eval_ltlf_finite(_letters(blocks + '"1#'), cha)
    assert not eval_ltlf_finite(_letters(blocks + '"0#'), cha)
    # the last block is never the left end of a challenge window
    assert not eval_ltlf_finite(_letters(f"%1${sym}" + '"1#'), cha)


def test_counter_on_handcrafted_words():
    g = H.GoalBuilder(H.machine_accept(), "0", 1)
    sym = "0" * g.enc.m
    H_ = Atom(H.HASH)
    good = _letters(f"%0${sym}%1${sym}#")
    bad = _letters(f"%0${sym}%0${sym}#")
    assert eval_ltlf_finite(good, g.counter(H_))
    assert not eval_ltlf_finite(bad, g.counter(H_))


def test_subformulas_evaluate_on_generated_prefixes():
    inst = H.gen_instance(H.machine_branch(), "0", 1)
    D = inst.domain
    subs = list(logic.subformulas(inst.goal))
    rng = random.Random(62)
    for _ in range(3):
        s, word = D.init, []
        for _ in range(25):
            a = rng.choice(D.applicable(s))
            word.append(s | a)
            s = rng.choice(D.succ(s, a))
        for f in subs:
            assert eval_ltlf_finite(word, f) in (True, False)
