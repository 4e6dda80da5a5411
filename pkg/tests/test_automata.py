import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fairplan import automata as A
from fairplan import logic
from fairplan.automata import RabinPair, drw_run_lasso
from fairplan.domain import enumerate_lassos, is_state_action_fair
from fairplan.logic import Lasso, eval_ltl_lasso, eval_ltlf_finite, parse_formula
from fairplan.randgen import random_domain, random_drw, random_formula, random_lasso

PQ = frozenset("pq")
CAP = 3000


def lm_loop():
    return Lasso((), ({"l", "a"}, {"m", "a"}))


def lassos(props, max_prefix=2, max_loop=2):
    letters = A.all_letters(props)
    for k in range(max_prefix + 1):
        for u in itertools.product(letters, repeat=k):
            for j in range(1, max_loop + 1):
                for v in itertools.product(letters, repeat=j):
                    yield Lasso(u, v)


# -- LTLf -> DFW -> DRW


def test_true_dfw_has_one_accepting_state():
    dfw = A.ltlf_to_dfw(logic.TRUE)
    assert dfw.size == 1 and dfw.accepting == {0}


def test_two_steps_dfw():
    phi = parse_formula("l & X X l", "ltlf")
    dfw = A.ltlf_to_dfw(phi, props="lmra")
    yes = [{"l", "a"}, {"m", "a"}, {"l", "a"}]
    no = [{"l", "a"}, {"m", "a"}, {"r", "a"}]
    assert dfw.accepts(yes) and eval_ltlf_finite(yes, phi)
    assert not dfw.accepts(no) and not eval_ltlf_finite(no, phi)


def test_dfw_matches_finite_semantics():
    rng = random.Random(11)
    letters = A.all_letters(PQ)
    for _ in range(500):
        phi = random_formula(rng, PQ, 3)
        dfw = A.ltlf_to_dfw(phi, PQ)
        assert A.is_total(dfw)
        trace = [rng.choice(letters) for _ in range(rng.randint(1, 6))]
        assert dfw.accepts(trace) == eval_ltlf_finite(trace, phi)


def test_true_drw_accepts_everything():
    M = A.dfw_to_drw(A.ltlf_to_dfw(logic.TRUE))
    assert all(drw_run_lasso(M, w) for w in lassos(frozenset("p")))


def test_psi1_drw_rejects_tau1(PSI1, TAU1, D1):
    M = A.dfw_to_drw(A.ltlf_to_dfw(PSI1, alphabet=D1.letters()))
    assert M.index == 1
    assert not drw_run_lasso(M, TAU1)
    assert drw_run_lasso(M, lm_loop())


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dfw_to_drw_index_one_and_total(seed):
    rng = random.Random(seed)
    phi = random_formula(rng, PQ, 3)
    M = A.dfw_to_drw(A.ltlf_to_dfw(phi, PQ))
    assert M.index == 1 and A.is_total(M)


# -- LTL -> NBW -> DRW


def test_g_true_nbw_accepts_all():
    nbw = A.ltl_to_nbw(parse_formula("G true"), PQ)
    M = A.nbw_to_drw_safra(nbw)
    assert all(drw_run_lasso(M, w) for w in lassos(PQ, 1, 2))


def test_psi2_pipeline(PSI2, TAU1, D1):
    nbw = A.ltl_to_nbw(PSI2, alphabet=D1.letters())
    M = A.nbw_to_drw_safra(nbw)
    assert not drw_run_lasso(M, TAU1)
    assert drw_run_lasso(M, lm_loop())
    lazy = A.LazySafra(nbw)
    assert not drw_run_lasso(lazy, TAU1)
    assert drw_run_lasso(lazy, lm_loop())


def _nbw_accepts(nbw, w):
    # independent check: is there an accepting cycle in the product of the
    # NBW with the lasso positions?
    n = len(w)
    start = [(nbw.initial, 0)]

    def nxt(node):
        q, i = node
        j = i + 1 if i + 1 < n else len(w.prefix)
        return [(t, j) for t in nbw.post({q}, w.letter(i))]

    reach = set(start)
    stack = list(start)
    while stack:
        x = stack.pop()
        for y in nxt(x):
            if y not in reach:
                reach.add(y)
                stack.append(y)
    for x in reach:
        if x[0] not in nbw.buchi:
            continue
        seen, stack = set(), nxt(x)
        while stack:
            y = stack.pop()
            if y == x:
                return True
            if y not in seen:
                seen.add(y)
                stack.extend(nxt(y))
    return False


def test_nbw_matches_lasso_semantics():
    rng = random.Random(12)
    for _ in range(500):
        phi = random_formula(rng, PQ, 3)
        w = random_lasso(rng, PQ)
        nbw = A.ltl_to_nbw(phi, PQ)
        assert _nbw_accepts(nbw, w) == eval_ltl_lasso(w, phi)


def test_deterministic_buchi_to_drw():
    # accepts words with infinitely many p; state 1 = "just read p"
    letters = A.all_letters(frozenset("p"))
    delta = tuple({a: frozenset({1 if "p" in a else 0}) for a in letters} for _ in range(2))
    nbw = A.NBW(frozenset("p"), letters, 0, delta, frozenset({1}))
    M = A.nbw_to_drw_safra(nbw)
    rng = random.Random(13)
    for _ in range(100):
        w = random_lasso(rng, "p")
        assert drw_run_lasso(M, w) == any("p" in x for x in w.loop)


def test_empty_buchi_rejects_everything():
    letters = A.all_letters(PQ)
    nbw = A.NBW(PQ, letters, 0, ({a: frozenset({0}) for a in letters},), frozenset())
    M = A.nbw_to_drw_safra(nbw)
    assert not any(drw_run_lasso(M, w) for w in lassos(PQ, 1, 2))


def test_safra_explicit_and_lazy_agree():
    rng = random.Random(14)
    for _ in range(60):
        phi = random_formula(rng, PQ, 3)
        nbw = A.ltl_to_nbw(phi, PQ)
        try:
            M = A.nbw_to_drw_safra(nbw, max_states=CAP)
        except A.CapacityError:
            continue
        lazy = A.LazySafra(nbw)
        for _ in range(10):
            w = random_lasso(rng, PQ)
            assert drw_run_lasso(M, w) == drw_run_lasso(lazy, w) == eval_ltl_lasso(w, phi)


def test_capacity_error():
    phi = parse_formula("G F p & G F q & F G (p | q)")
    with pytest.raises(A.CapacityError):
        A.ltl_to_drw(phi, PQ, max_states=3)


# -- union


def test_union_sizes():
    rng = random.Random(15)
    letters = A.all_letters(PQ)

    def make(n, k):
        delta = tuple({a: rng.randrange(n) for a in letters} for _ in range(n))
        pairs = tuple(RabinPair(frozenset({0}), frozenset()) for _ in range(k))
        return A.DRW(PQ, letters, 0, delta, pairs)

    U = A.drw_union(make(3, 2), make(4, 1))
    assert U.size == 12 and U.index == 3


def test_union_with_self_and_empty():
    rng = random.Random(16)
    letters = A.all_letters(PQ)
    empty = A.DRW(PQ, letters, 0, ({a: 0 for a in letters},), ())
    for _ in range(20):
        M = random_drw(rng)
        MM = A.drw_union(M, M)
        ME = A.drw_union(M, empty)
        for _ in range(10):
            w = random_lasso(rng, PQ)
            assert drw_run_lasso(MM, w) == drw_run_lasso(M, w) == drw_run_lasso(ME, w)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_union_is_language_union(seed):
    rng = random.Random(seed)
    M1, M2 = random_drw(rng), random_drw(rng)
    U = A.drw_union(M1, M2)
    lazy = A.LazyUnion(M1, M2)
    assert U.size == M1.size * M2.size and U.index == M1.index + M2.index
    for _ in range(5):
        w = random_lasso(rng, PQ)
        expect = drw_run_lasso(M1, w) or drw_run_lasso(M2, w)
        assert drw_run_lasso(U, w) == drw_run_lasso(lazy, w) == expect


# -- unfairness


def test_unfair_drw_d1(D1, TAU1):
    M = A.unfair_drw(D1)
    assert M.index == len(D1.transitions) == 4
    assert not drw_run_lasso(M, TAU1)
    assert drw_run_lasso(M, lm_loop())


def test_unfair_drw_is_complement_of_fairness_d1(D1):
    M = A.unfair_drw(D1)
    for w in enumerate_lassos(D1, 6, 6):
        assert drw_run_lasso(M, w) == (not is_state_action_fair(w, D1))


def test_unfair_drw_random_domains():
    rng = random.Random(17)
    for _ in range(50):
        D = random_domain(rng, max_states=4)
        M = A.unfair_drw(D)
        assert M.index == len(D.transitions)
        for w in itertools.islice(enumerate_lassos(D, 3, 3), 300):
            assert drw_run_lasso(M, w) == (not is_state_action_fair(w, D))


# -- run semantics and serialisation


def test_single_state_pairs():
    letters = A.all_letters(frozenset("p"))
    delta = ({a: 0 for a in letters},)
    good = A.DRW(frozenset("p"), letters, 0, delta, (RabinPair(frozenset({0}), frozenset()),))
    bad = A.DRW(frozenset("p"), letters, 0, delta, (RabinPair(frozenset({0}), frozenset({0})),))
    for w in lassos(frozenset("p"), 1, 2):
        assert drw_run_lasso(good, w) and not drw_run_lasso(bad, w)


def test_dump_load_round_trip(PSI2):
    M = A.ltl_to_drw(PSI2)
    text = A.dump(M)
    M2 = A.load(text)
    assert A.dump(M2) == text
    dfw = A.ltlf_to_dfw(parse_formula("F (p & X q)", "ltlf"))
    assert A.dump(A.load(A.dump(dfw))) == A.dump(dfw)
    nbw = A.ltl_to_nbw(parse_formula("G F p"))
    assert A.dump(A.load(A.dump(nbw))) == A.dump(nbw)


def test_translations_are_total():
    rng = random.Random(18)
    for _ in range(30):
        phi = random_formula(rng, PQ, 3)
        assert A.is_total(A.ltlf_to_dfw(phi, PQ))
        try:
            assert A.is_total(A.ltl_to_drw(phi, PQ, max_states=CAP))
        except A.CapacityError:
            pass


# -- reduction


def test_reduced_true_has_one_state():
    assert A.ltl_to_drw(logic.TRUE).size == 1
    assert A.reduce_drw(A.dfw_to_drw(A.ltlf_to_dfw(logic.TRUE))).size == 1


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reduce_preserves_language(seed):
    rng = random.Random(seed)
    M = random_drw(rng, max_states=6)
    R = A.reduce_drw(M)
    assert R.size <= M.size and R.index == M.index and A.is_total(R)
    for _ in range(10):
        w = random_lasso(rng, PQ)
        assert drw_run_lasso(R, w) == drw_run_lasso(M, w)


def test_reduce_safra_output():
    rng = random.Random(19)
    for _ in range(40):
        phi = random_formula(rng, PQ, 3)
        try:
            raw = A.nbw_to_drw_safra(A.ltl_to_nbw(phi, PQ), max_states=CAP)
        except A.CapacityError:
            continue
        R = A.reduce_drw(raw)
        for _ in range(10):
            w = random_lasso(rng, PQ)
            assert drw_run_lasso(R, w) == drw_run_lasso(raw, w) == eval_ltl_lasso(w, phi)
