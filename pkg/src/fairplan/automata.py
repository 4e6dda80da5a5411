"""Word automata: DFW, NBW and DRW, plus the translations between them.

Letters are frozensets of proposition names.  Every automaton reads the
propositions in ``props`` and ignores the rest of a letter, so an automaton
built for a goal can run directly on domain letters ``s | a``.

Deterministic automata share a small duck-typed interface used by the
product construction: ``props``, ``initial``, ``index``, ``step(q, letter)``
and ``membership(q) -> (I-pair indices, F-pair indices)``.
"""
from __future__ import annotations

import itertools
import json
import sys
from dataclasses import dataclass, field
from typing import Iterable

from dd import cudd

from . import logic
from .logic import Formula, Lasso

DEFAULT_MAX_STATES = 10**6
MAX_LETTERS = 2**20
FORMAT = "fairplan-automaton/1"

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100000))


class CapacityError(RuntimeError):
    """A construction exceeded its explicit state or alphabet budget."""


class AlphabetError(ValueError):
    """A letter is outside an automaton's alphabet, or alphabets differ."""


def letter_key(letter) -> tuple:
    return tuple(sorted(letter))


def all_letters(props: Iterable[str], limit: int = MAX_LETTERS) -> tuple:
    props = sorted(set(props))
    if 2 ** len(props) > limit:
        raise CapacityError(f"alphabet 2^{len(props)} exceeds {limit} letters")
    out = []
    for k in range(len(props) + 1):
        for combo in itertools.combinations(props, k):
            out.append(frozenset(combo))
    return tuple(sorted(out, key=letter_key))


@dataclass(frozen=True)
class RabinPair:
    I: frozenset
    F: frozenset


# ---------------------------------------------------------------------------
# explicit automata


@dataclass(frozen=True, eq=False)
class DFW:
    props: frozenset
    alphabet: tuple
    initial: int
    delta: tuple  # delta[q][letter] -> q'
    accepting: frozenset

    @property
    def size(self):
        return len(self.delta)

    def step(self, q, letter):
        key = frozenset(letter) & self.props
        try:
            return self.delta[q][key]
        except KeyError:
            raise AlphabetError(f"letter {sorted(letter)} outside alphabet") from None

    def accepts(self, word) -> bool:
        q = self.initial
        for letter in word:
            q = self.step(q, letter)
        return q in self.accepting


@dataclass(frozen=True, eq=False)
class NBW:
    props: frozenset
    alphabet: tuple
    initial: int
    delta: tuple  # delta[q][letter] -> frozenset of successors
    buchi: frozenset

    @property
    def size(self):
        return len(self.delta)

    def post(self, states, letter):
        key = frozenset(letter) & self.props
        out = set()
        for q in states:
            out |= self.delta[q].get(key, frozenset())
        return out


@dataclass(frozen=True, eq=False)
class DRW:
    """Deterministic Rabin word automaton with explicit transition table.

    ``sink`` (optional) is the target of letters outside ``alphabet``; it
    keeps the transition function total on all of ``2^props``.
    """

    props: frozenset
    alphabet: tuple
    initial: int
    delta: tuple  # delta[q][letter] -> q'
    pairs: tuple
    sink: int | None = None
    _member: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        member = {}
        for q in range(len(self.delta)):
            member[q] = (
                frozenset(i for i, p in enumerate(self.pairs) if q in p.I),
                frozenset(i for i, p in enumerate(self.pairs) if q in p.F),
            )
        object.__setattr__(self, "_member", member)

    @property
    def size(self):
        return len(self.delta)

    @property
    def index(self):
        return len(self.pairs)

    def step(self, q, letter):
        key = frozenset(letter) & self.props
        nxt = self.delta[q].get(key)
        if nxt is None:
            if self.sink is None:
                raise AlphabetError(f"letter {sorted(letter)} outside alphabet")
            return self.sink
        return nxt

    def membership(self, q):
        return self._member[q]


def is_total(aut) -> bool:
    """Structural check that every state has a successor on every letter."""
    return all(
        all(letter in row for letter in aut.alphabet) for row in aut.delta)


def drw_run_lasso(M, w: Lasso) -> bool:
    """Rabin acceptance of the run of ``M`` on ``u.v^omega``."""
    q = M.initial
    for letter in w.prefix:
        q = M.step(q, letter)
    seen = {}
    history = []
    while q not in seen:
        seen[q] = len(history)
        history.append(q)
        for letter in w.loop:
            q = M.step(q, letter)
    # states visited infinitely often: everything on the loop passes from
    # the first repeated loop-entry state onward
    cycle = set()
    for q0 in history[seen[q]:]:
        x = q0
        for letter in w.loop:
            cycle.add(x)
            x = M.step(x, letter)
    inf_I, inf_F = set(), set()
    for x in cycle:
        i_set, f_set = M.membership(x)
        inf_I |= i_set
        inf_F |= f_set
    return bool(inf_I - inf_F)


# ---------------------------------------------------------------------------
# LTLf -> DFW by progression


class LTLfProgression:
    """On-the-fly deterministic automaton for an LTLf formula.

    A state is ``(obligation, accepting)``: ``obligation`` is a BDD over
    temporal sub-formulas that the remaining suffix must satisfy, and
    ``accepting`` records whether the word read so far satisfies the
    formula.  States are numbered in discovery order.
    """

    def __init__(self, phi: Formula, max_states: int = DEFAULT_MAX_STATES):
        self.phi = phi
        self.props = logic.atoms(phi)
        self.max_states = max_states
        self.bdd = cudd.BDD()
        self._var = {}       # temporal sub-formula -> variable name
        self._formula = {}   # variable name -> sub-formula
        self._prog = {}
        self._final = {}
        self._ids = {}
        self._keys = []
        self._succ = {}
        root = self._lift(phi)
        self.initial = self._id((root, _eps(phi)))

    # state numbering
    def _id(self, key):
        q = self._ids.get(key)
        if q is None:
            if len(self._keys) >= self.max_states:
                raise CapacityError(f"LTLf automaton exceeds {self.max_states} states")
            q = len(self._keys)
            self._ids[key] = q
            self._keys.append(key)
        return q

    @property
    def num_states(self):
        return len(self._keys)

    def accepting(self, q) -> bool:
        return self._keys[q][1]

    def _v(self, f):
        name = self._var.get(f)
        if name is None:
            name = f"v{len(self._var)}"
            self.bdd.declare(name)
            self._var[f] = name
            self._formula[name] = f
        return self.bdd.var(name)

    def _lift(self, f):
        b = self.bdd
        op = f.op
        if op == "true":
            return b.true
        if op == "false":
            return b.false
        if op == "not":
            return ~self._lift(f.args[0])
        if op == "and":
            return self._lift(f.args[0]) & self._lift(f.args[1])
        if op == "or":
            return self._lift(f.args[0]) | self._lift(f.args[1])
        if op == "implies":
            return ~self._lift(f.args[0]) | self._lift(f.args[1])
        return self._v(f)

    def _progress(self, f, letter):
        key = (f, letter)
        r = self._prog.get(key)
        if r is not None:
            return r
        b = self.bdd
        op = f.op
        if op == "atom":
            r = b.true if f.name in letter else b.false
        elif op == "true":
            r = b.true
        elif op == "false":
            r = b.false
        elif op == "not":
            r = ~self._progress(f.args[0], letter)
        elif op == "and":
            r = self._progress(f.args[0], letter) & self._progress(f.args[1], letter)
        elif op == "or":
            r = self._progress(f.args[0], letter) | self._progress(f.args[1], letter)
        elif op == "implies":
            r = ~self._progress(f.args[0], letter) | self._progress(f.args[1], letter)
        elif op == "next":
            r = self._lift(f.args[0])
        elif op == "until":
            r = self._progress(f.args[1], letter) | (
                self._progress(f.args[0], letter) & self._v(f))
        elif op == "eventually":
            r = self._progress(f.args[0], letter) | self._v(f)
        elif op == "always":
            r = self._progress(f.args[0], letter) & self._v(f)
        else:  # pragma: no cover
            raise AssertionError(op)
        self._prog[key] = r
        return r

    def _last(self, f, letter):
        # truth of f at a position that is the last one of the trace
        memo = self._final.setdefault(letter, {})
        if f in memo:
            return memo[f]
        for n in logic.subformulas(f):
            if n in memo:
                continue
            op = n.op
            a = [memo[c] for c in n.args]
            if op == "atom":
                v = n.name in letter
            elif op == "true":
                v = True
            elif op == "false":
                v = False
            elif op == "not":
                v = not a[0]
            elif op == "and":
                v = a[0] and a[1]
            elif op == "or":
                v = a[0] or a[1]
            elif op == "implies":
                v = (not a[0]) or a[1]
            elif op == "next":
                v = False
            elif op == "until":
                v = a[1]
            elif op in ("eventually", "always"):
                v = a[0]
            else:  # pragma: no cover
                raise AssertionError(op)
            memo[n] = v
        return memo[f]

    def step(self, q, letter):
        letter = frozenset(letter) & self.props
        key = (q, letter)
        r = self._succ.get(key)
        if r is not None:
            return r
        obligation = self._keys[q][0]
        b, formula = self.bdd, self._formula
        names = b.support(obligation)
        if not names:
            r = self._id((obligation, obligation == b.true))
            self._succ[key] = r
            return r
        final = {v: self._last(formula[v], letter) for v in names}
        acc = b.let(final, obligation) == b.true
        nxt = b.let({v: self._progress(formula[v], letter) for v in names}, obligation)
        r = self._id((nxt, acc))
        self._succ[key] = r
        return r


def _eps(phi):
    # Convention for the empty word; only decides whether the initial DFW
    # state is accepting (traces have length >= 1, so this never matters
    # for trace semantics).
    memo = {}
    for n in logic.subformulas(phi):
        a = [memo[c] for c in n.args]
        op = n.op
        if op == "true":
            v = True
        elif op in ("false", "atom", "next", "until", "eventually"):
            v = False
        elif op == "always":
            v = True
        elif op == "not":
            v = not a[0]
        elif op == "and":
            v = a[0] and a[1]
        elif op == "or":
            v = a[0] or a[1]
        elif op == "implies":
            v = (not a[0]) or a[1]
        else:  # pragma: no cover
            raise AssertionError(op)
        memo[n] = v
    return memo[phi]


def _explore(initial, step, alphabet, max_states):
    order = [initial]
    index = {initial: 0}
    delta = []
    i = 0
    while i < len(order):
        q = order[i]
        row = {}
        for letter in alphabet:
            t = step(q, letter)
            if t not in index:
                if len(order) >= max_states:
                    raise CapacityError(f"automaton exceeds {max_states} states")
                index[t] = len(order)
                order.append(t)
            row[letter] = index[t]
        delta.append(row)
        i += 1
    return order, delta


def ltlf_to_dfw(phi: Formula, props=None, alphabet=None,
                max_states: int = DEFAULT_MAX_STATES) -> DFW:
    """Total DFW accepting exactly the finite traces that satisfy ``phi``."""
    props = frozenset(props) if props is not None else logic.atoms(phi)
    if alphabet is None:
        alphabet = all_letters(props)
    alphabet = tuple(frozenset(a) & props for a in alphabet)
    alphabet = tuple(sorted(set(alphabet), key=letter_key))
    eng = LTLfProgression(phi, max_states=max_states)
    order, delta = _explore(eng.initial, eng.step, alphabet, max_states)
    accepting = frozenset(i for i, q in enumerate(order) if eng.accepting(q))
    return DFW(frozenset(props), alphabet, 0, tuple(delta), accepting)


def dfw_to_drw(A: DFW) -> DRW:
    """DRW accepting the infinite words having a nonempty accepted prefix.

    Every transition entering an accepting state is redirected to a fresh
    absorbing sink; the single pair is ``({sink}, {})``.
    """
    sink = A.size
    delta = []
    for row in A.delta:
        delta.append({a: (sink if t in A.accepting else t) for a, t in row.items()})
    delta.append({a: sink for a in A.alphabet})
    return DRW(A.props, A.alphabet, A.initial, tuple(delta),
               (RabinPair(frozenset({sink}), frozenset()),))


def reduce_drw(M: DRW) -> DRW:
    """Language-preserving quotient of ``M`` with the same pair count.

    Acceptance only looks at states visited infinitely often, so a state on
    no cycle may borrow the pair membership of its first successor.  After
    that relabelling, states with equal membership and equal successor
    classes are merged (Moore refinement).  States are renumbered in
    breadth-first order from the initial state.
    """
    from .graphs import is_nontrivial, scc_sinks_first

    letters = M.alphabet
    extra = () if M.sink is None else (M.sink,)

    def succ(q):
        return list(M.delta[q].values()) + list(extra)

    member = {}
    for comp in scc_sinks_first(range(M.size), succ):
        for q in comp:
            if is_nontrivial(comp, succ) or not letters:
                member[q] = M.membership(q)
            else:
                member[q] = member.get(M.delta[q][letters[0]], M.membership(q))
    # the chosen successor of a transient state lies in an earlier component
    cls = {q: member[q] for q in range(M.size)}
    while True:
        sig = {q: (cls[q], tuple(cls[M.delta[q][a]] for a in letters)) for q in range(M.size)}
        ids = {}
        for q in range(M.size):
            ids.setdefault(sig[q], len(ids))
        new = {q: ids[sig[q]] for q in range(M.size)}
        if len(ids) == len(set(cls.values())):
            cls = new
            break
        cls = new
    order, num = [cls[M.initial]], {cls[M.initial]: 0}
    rep = {}
    for q in range(M.size):
        rep.setdefault(cls[q], q)
    i = 0
    while i < len(order):
        q = rep[order[i]]
        for t in [M.delta[q][a] for a in letters] + list(extra):
            if cls[t] not in num:
                num[cls[t]] = len(order)
                order.append(cls[t])
        i += 1
    delta = tuple({a: num[cls[M.delta[rep[c]][a]]] for a in letters} for c in order)
    pairs = tuple(RabinPair(frozenset(num[c] for c in order if j in member[rep[c]][0]),
                            frozenset(num[c] for c in order if j in member[rep[c]][1]))
                  for j in range(M.index))
    sink = None if M.sink is None else num[cls[M.sink]]
    return DRW(M.props, M.alphabet, 0, delta, pairs, sink)


class ReachDRW:
    """Lazy ``dfw_to_drw`` over an on-the-fly LTLf automaton.

    State 0 is the accepting sink; other ids are assigned on discovery.
    """

    index = 1

    def __init__(self, phi: Formula, max_states: int = DEFAULT_MAX_STATES):
        self.dfw = LTLfProgression(phi, max_states=max_states)
        self.props = self.dfw.props
        self._ids = {None: 0}
        self._keys = [None]
        self.initial = self._id(self.dfw.initial)

    def _id(self, q):
        i = self._ids.get(q)
        if i is None:
            i = len(self._keys)
            self._ids[q] = i
            self._keys.append(q)
        return i

    def step(self, q, letter):
        if q == 0:
            return 0
        t = self.dfw.step(self._keys[q], letter)
        if self.dfw.accepting(t):
            return 0
        return self._id(t)

    def membership(self, q):
        return (frozenset({0}), frozenset()) if q == 0 else (frozenset(), frozenset())


# ---------------------------------------------------------------------------
# LTL -> NBW (GPVW tableau + counter degeneralisation)


def nnf(phi: Formula) -> Formula:
    """Negation normal form over ``true false atom not(atom) and or next
    until release`` (infinite-word semantics)."""
    memo = {}

    def go(f, neg):
        key = (f, neg)
        if key in memo:
            return memo[key]
        op = f.op
        if op == "atom":
            r = logic.Not(f) if neg else f
        elif op == "true":
            r = logic.FALSE if neg else logic.TRUE
        elif op == "false":
            r = logic.TRUE if neg else logic.FALSE
        elif op == "not":
            r = go(f.args[0], not neg)
        elif op in ("and", "or"):
            a, b = go(f.args[0], neg), go(f.args[1], neg)
            r = Formula(("or" if op == "and" else "and") if neg else op, (a, b))
        elif op == "implies":
            a, b = go(f.args[0], not neg), go(f.args[1], neg)
            r = Formula("and" if neg else "or", (a, b))
        elif op == "next":
            r = Formula("next", (go(f.args[0], neg),))
        elif op == "until":
            a, b = go(f.args[0], neg), go(f.args[1], neg)
            r = Formula("release" if neg else "until", (a, b))
        elif op == "release":
            a, b = go(f.args[0], neg), go(f.args[1], neg)
            r = Formula("until" if neg else "release", (a, b))
        elif op == "eventually":
            a = go(f.args[0], neg)
            r = Formula("release", (logic.FALSE, a)) if neg else Formula("until", (logic.TRUE, a))
        elif op == "always":
            a = go(f.args[0], neg)
            r = Formula("until", (logic.TRUE, a)) if neg else Formula("release", (logic.FALSE, a))
        else:  # pragma: no cover
            raise AssertionError(op)
        memo[key] = r
        return r

    return go(phi, False)


def _is_literal(f):
    return f.op in ("atom", "true", "false") or (f.op == "not" and f.args[0].op == "atom")


def _fkey(f):
    return (logic.tree_size(f), logic.to_text(f))


def ltl_to_nbw(phi: Formula, props=None, max_states: int = DEFAULT_MAX_STATES,
               alphabet=None, reduce: bool = True) -> NBW:
    """NBW accepting exactly the infinite words satisfying ``phi``.

    With ``alphabet`` the automaton only has transitions on those letters
    (projected onto ``props``).  ``reduce`` trims empty-language states and
    merges bisimilar ones.
    """
    props = frozenset(props) if props is not None else logic.atoms(phi)
    if alphabet is None:
        alphabet = all_letters(props)
    else:
        alphabet = tuple(sorted({frozenset(a) & props for a in alphabet}, key=letter_key))
    A = _ltl_to_nbw(phi, props, alphabet, max_states)
    return reduce_nbw(A) if reduce else A


def _ltl_to_nbw(phi, props, alphabet, max_states):
    f0 = nnf(phi)
    INIT = 0
    nodes = {}  # (old, next) -> node id
    incoming = {}  # node id -> set of predecessor ids
    olds = {}
    todo = [(frozenset({INIT}), frozenset({f0}), frozenset(), frozenset())]
    while todo:
        inc, new, old, nxt = todo.pop()
        if not new:
            key = (old, nxt)
            nid = nodes.get(key)
            if nid is not None:
                incoming[nid] |= inc
                continue
            nid = len(nodes) + 1
            if nid >= max_states:
                raise CapacityError(f"tableau exceeds {max_states} nodes")
            nodes[key] = nid
            incoming[nid] = set(inc)
            olds[nid] = old
            todo.append((frozenset({nid}), nxt, frozenset(), frozenset()))
            continue
        eta = min(new, key=_fkey)
        new = new - {eta}
        old2 = old | {eta}
        op = eta.op
        if _is_literal(eta):
            if op == "false":
                continue
            if op == "atom" and logic.Not(eta) in old:
                continue
            if op == "not" and eta.args[0] in old:
                continue
            todo.append((inc, new, old2, nxt))
        elif op == "and":
            todo.append((inc, new | (frozenset(eta.args) - old), old2, nxt))
        elif op == "or":
            for a in reversed(eta.args):
                todo.append((inc, new | (frozenset({a}) - old), old2, nxt))
        elif op == "next":
            todo.append((inc, new, old2, nxt | {eta.args[0]}))
        elif op == "until":
            mu, psi = eta.args
            todo.append((inc, new | (frozenset({psi}) - old), old2, nxt))
            todo.append((inc, new | (frozenset({mu}) - old), old2, nxt | {eta}))
        elif op == "release":
            mu, psi = eta.args
            todo.append((inc, new | (frozenset({mu, psi}) - old), old2, nxt))
            todo.append((inc, new | (frozenset({psi}) - old), old2, nxt | {eta}))
        else:  # pragma: no cover
            raise AssertionError(op)

    n = len(nodes) + 1
    untils = sorted({g for g in logic.subformulas(f0) if g.op == "until"}, key=_fkey)
    acc_sets = []
    for u in untils:
        acc_sets.append(frozenset(
            nid for nid, old in olds.items() if u not in old or u.args[1] in old))

    def sat(nid, letter):
        for g in olds[nid]:
            if g.op == "atom" and g.name not in letter:
                return False
            if g.op == "not" and g.args[0].name in letter:
                return False
        return True

    gdelta = [dict() for _ in range(n)]
    for nid in sorted(incoming):
        for letter in alphabet:
            if sat(nid, letter):
                for src in incoming[nid]:
                    gdelta[src].setdefault(letter, set()).add(nid)

    # degeneralise: state (q, i), counter advances when q is in set i
    k = len(acc_sets)
    if k == 0:
        delta = tuple({a: frozenset(s) for a, s in row.items()} for row in gdelta)
        return NBW(props, alphabet, INIT, delta, frozenset(range(n)))
    ids = {(INIT, 0): 0}
    order = [(INIT, 0)]
    delta = []
    i = 0
    while i < len(order):
        q, c = order[i]
        c2 = (c + 1) % k if q in acc_sets[c] else c
        row = {}
        for letter, succs in gdelta[q].items():
            tgt = set()
            for t in succs:
                key = (t, c2)
                if key not in ids:
                    if len(order) >= max_states:
                        raise CapacityError(f"NBW exceeds {max_states} states")
                    ids[key] = len(order)
                    order.append(key)
                tgt.add(ids[key])
            row[letter] = frozenset(tgt)
        delta.append(row)
        i += 1
    buchi = frozenset(ids[(q, c)] for (q, c) in order if c == k - 1 and q in acc_sets[k - 1])
    return NBW(props, alphabet, 0, tuple(delta), buchi)


def reduce_nbw(A: NBW) -> NBW:
    """Drop states with empty language, then quotient by bisimulation.

    Both steps preserve the language.  The initial state is kept even if
    its language is empty.
    """
    from .graphs import backward_reach, is_nontrivial, scc_partition

    def succ(q):
        out = set()
        for t in A.delta[q].values():
            out |= t
        return out

    states = range(A.size)
    good = set()
    for comp in scc_partition(states, succ):
        if is_nontrivial(comp, succ) and any(q in A.buchi for q in comp):
            good.update(comp)
    pred = {q: set() for q in states}
    for q in states:
        for t in succ(q):
            pred[t].add(q)
    live = backward_reach(good, lambda q: pred[q])
    keep = sorted(live | {A.initial})
    # partition refinement on (accepting, letter -> successor blocks)
    block = {q: int(q in A.buchi) for q in keep}
    while True:
        sigs = {}
        for q in keep:
            sig = (block[q], tuple(
                (letter_key(a), frozenset(block[t] for t in A.delta[q].get(a, ()) if t in live))
                for a in A.alphabet))
            sigs[q] = sig
        ids = {}
        new = {}
        for q in keep:
            new[q] = ids.setdefault(sigs[q], len(ids))
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    # renumber blocks in BFS order from the initial state
    order = [block[A.initial]]
    seen = {order[0]: 0}
    rep = {}
    for q in keep:
        rep.setdefault(block[q], q)
    delta = []
    i = 0
    while i < len(order):
        q = rep[order[i]]
        row = {}
        for a in A.alphabet:
            tgt = set()
            for t in sorted(A.delta[q].get(a, ())):
                if t not in live:
                    continue
                b = block[t]
                if b not in seen:
                    seen[b] = len(order)
                    order.append(b)
                tgt.add(seen[b])
            if tgt:
                row[a] = frozenset(tgt)
        delta.append(row)
        i += 1
    buchi = frozenset(seen[b] for b in order if rep[b] in A.buchi)
    return NBW(A.props, A.alphabet, 0, tuple(delta), buchi)


# ---------------------------------------------------------------------------
# Safra determinisation


def _safra_step(tree, letter, A: NBW, pool):
    if tree is None:
        return None

    def thaw(t):
        name, label, _mark, kids = t
        return [name, set(label), False, [thaw(k) for k in kids]]

    root = thaw(tree)
    used = set()

    def names(n):
        used.add(n[0])
        for k in n[3]:
            names(k)

    names(root)

    def spawn(n):
        for k in list(n[3]):
            spawn(k)
        acc = n[1] & A.buchi
        if acc:
            name = min(x for x in range(pool) if x not in used)
            used.add(name)
            n[3].append([name, set(acc), False, []])

    spawn(root)

    def update(n):
        n[1] = A.post(n[1], letter)
        for k in n[3]:
            update(k)

    update(root)

    def horizontal(n, blocked):
        n[1] -= blocked
        claimed = set()
        for k in n[3]:
            horizontal(k, blocked | claimed)
            claimed |= k[1]

    horizontal(root, set())

    def prune(n):
        n[3] = [k for k in n[3] if k[1]]
        for k in n[3]:
            prune(k)

    if not root[1]:
        return None
    prune(root)

    def vertical(n):
        if n[3]:
            union = set()
            for k in n[3]:
                union |= k[1]
            if union == n[1]:
                n[3] = []
                n[2] = True
                return
        for k in n[3]:
            vertical(k)

    vertical(root)

    def freeze(n):
        return (n[0], frozenset(n[1]), n[2], tuple(freeze(k) for k in n[3]))

    return freeze(root)


def _tree_nodes(t):
    if t is None:
        return
    yield t
    for k in t[3]:
        yield from _tree_nodes(k)


def nbw_to_drw_safra(A: NBW, max_states: int = DEFAULT_MAX_STATES) -> DRW:
    """Language-equivalent DRW by Safra's construction.

    One pair per node name: ``I`` = trees where the node is marked, ``F`` =
    trees where it is absent.  The empty tree is a rejecting sink.
    """
    pool = 2 * max(A.size, 1)
    init = (0, frozenset({A.initial}), False, ())
    order, delta = _explore(init, lambda t, a: _safra_step(t, a, A, pool),
                            A.alphabet, max_states)
    present = {}
    for i, t in enumerate(order):
        for n in _tree_nodes(t):
            present.setdefault(n[0], {})[i] = n[2]
    pairs = []
    for name in sorted(present):
        marked = frozenset(i for i, m in present[name].items() if m)
        absent = frozenset(i for i in range(len(order)) if i not in present[name])
        pairs.append(RabinPair(marked, absent))
    return DRW(A.props, A.alphabet, 0, tuple(delta), tuple(pairs))


def ltl_to_drw(phi: Formula, props=None, max_states: int = DEFAULT_MAX_STATES,
               alphabet=None) -> DRW:
    return reduce_drw(nbw_to_drw_safra(ltl_to_nbw(phi, props, max_states, alphabet), max_states))


class LazySafra:
    """On-the-fly Safra DRW; only trees reached by ``step`` are built.

    Pair ``j`` belongs to node name ``j`` of the name pool, so the index is
    twice the NBW size even when most names never occur.
    """

    def __init__(self, A: NBW, max_states: int = DEFAULT_MAX_STATES):
        self.nbw = A
        self.props = A.props
        self.max_states = max_states
        self._pool = 2 * max(A.size, 1)
        self.index = self._pool
        self._ids = {}
        self._keys = []
        self._cache = {}
        self.initial = self._id((0, frozenset({A.initial}), False, ()))

    @property
    def num_states(self):
        return len(self._keys)

    def _id(self, t):
        i = self._ids.get(t)
        if i is None:
            if len(self._keys) >= self.max_states:
                raise CapacityError(f"automaton exceeds {self.max_states} states")
            i = len(self._keys)
            self._ids[t] = i
            self._keys.append(t)
        return i

    def step(self, q, letter):
        letter = frozenset(letter) & self.props
        key = (q, letter)
        r = self._cache.get(key)
        if r is None:
            r = self._cache[key] = self._id(
                _safra_step(self._keys[q], letter, self.nbw, self._pool))
        return r

    def membership(self, q):
        I, present = set(), set()
        for n in _tree_nodes(self._keys[q]):
            present.add(n[0])
            if n[2]:
                I.add(n[0])
        return frozenset(I), frozenset(range(self._pool)) - present


# ---------------------------------------------------------------------------
# union and domain unfairness


def _lift_membership(m1, m2, q1, q2):
    i1, f1 = m1.membership(q1)
    i2, f2 = m2.membership(q2)
    k = m1.index
    return (i1 | frozenset(k + j for j in i2), f1 | frozenset(k + j for j in f2))


class LazyUnion:
    """On-the-fly ``M1 v M2``: product states numbered on discovery."""

    def __init__(self, m1, m2):
        self.m1, self.m2 = m1, m2
        self.props = frozenset(m1.props) | frozenset(m2.props)
        self.index = m1.index + m2.index
        self._ids = {}
        self._keys = []
        self._member = {}
        self.initial = self._id((m1.initial, m2.initial))

    def _id(self, key):
        i = self._ids.get(key)
        if i is None:
            i = len(self._keys)
            self._ids[key] = i
            self._keys.append(key)
        return i

    def step(self, q, letter):
        q1, q2 = self._keys[q]
        return self._id((self.m1.step(q1, letter), self.m2.step(q2, letter)))

    def membership(self, q):
        r = self._member.get(q)
        if r is None:
            q1, q2 = self._keys[q]
            r = self._member[q] = _lift_membership(self.m1, self.m2, q1, q2)
        return r

    def component_states(self, q):
        return self._keys[q]


def drw_union(M1: DRW, M2: DRW) -> DRW:
    """Explicit product DRW accepting ``L(M1) | L(M2)``.

    State ``(q1, q2)`` is numbered ``q1 * size(M2) + q2``; pairs of ``M1``
    come first, lifted to ``I x Q2``, then those of ``M2`` as ``Q1 x I``.
    """
    p1, p2 = frozenset(M1.props), frozenset(M2.props)
    if p1 != p2:
        raise AlphabetError("drw_union needs automata over the same propositions")
    if set(M1.alphabet) != set(M2.alphabet):
        raise AlphabetError("drw_union needs automata over the same alphabet")
    n1, n2 = M1.size, M2.size
    delta = []
    for q1 in range(n1):
        for q2 in range(n2):
            delta.append({a: M1.step(q1, a) * n2 + M2.step(q2, a) for a in M1.alphabet})
    pairs = []
    Q1, Q2 = range(n1), range(n2)
    for p in M1.pairs:
        pairs.append(RabinPair(frozenset(i * n2 + q2 for i in p.I for q2 in Q2),
                               frozenset(i * n2 + q2 for i in p.F for q2 in Q2)))
    for p in M2.pairs:
        pairs.append(RabinPair(frozenset(q1 * n2 + i for q1 in Q1 for i in p.I),
                               frozenset(q1 * n2 + i for q1 in Q1 for i in p.F)))
    sink = None
    if M1.sink is not None and M2.sink is not None:
        sink = M1.sink * n2 + M2.sink
    return DRW(p1, tuple(M1.alphabet), M1.initial * n2 + M2.initial,
               tuple(delta), tuple(pairs), sink)


def unfair_drw(D) -> DRW:
    """DRW accepting exactly the infinite traces of ``D`` that are not
    state-action fair.

    States remember the last (state, action) and the last (state, action,
    state) step; state 0 is "nothing read yet" and state 1 the rejecting
    sink for letters that do not continue a trace of ``D``.
    """
    props = frozenset(D.fluents) | frozenset(D.action_vars)
    letters = {}
    for s in D.states:
        for a in D.applicable(s):
            letters[s | a] = (s, a)
    alphabet = tuple(sorted(letters, key=letter_key))
    keys = [("init",), ("sink",)]
    ids = {k: i for i, k in enumerate(keys)}
    delta = []
    i = 0
    while i < len(keys):
        key = keys[i]
        row = {}
        for letter in alphabet:
            s, a = letters[letter]
            if key[0] == "sink":
                t = ("sink",)
            elif key[0] == "init":
                t = ("sa", (s, a), None) if s == D.init else ("sink",)
            else:
                ps, pa = key[1]
                t = ("sa", (s, a), (ps, pa, s)) if s in D.succ(ps, pa) else ("sink",)
            if t not in ids:
                ids[t] = len(keys)
                keys.append(t)
            row[letter] = ids[t]
        delta.append(row)
        i += 1
    pairs = []
    for s, a, t in D.transitions:
        I = frozenset(j for j, k in enumerate(keys) if k[0] == "sa" and k[1] == (s, a))
        F = frozenset(j for j, k in enumerate(keys) if k[0] == "sa" and k[2] == (s, a, t))
        pairs.append(RabinPair(I, F))
    return DRW(props, alphabet, 0, tuple(delta), tuple(pairs), sink=1)


# ---------------------------------------------------------------------------
# serialisation


def dump(aut) -> str:
    """Canonical JSON dump of an explicit DFW, NBW or DRW."""
    kind = {DFW: "dfw", NBW: "nbw", DRW: "drw"}[type(aut)]
    alphabet = list(aut.alphabet)
    lindex = {a: i for i, a in enumerate(alphabet)}
    trans = []
    for q, row in enumerate(aut.delta):
        for a in alphabet:
            if a not in row:
                continue
            tgt = row[a]
            if kind == "nbw":
                trans.extend([q, lindex[a], t] for t in sorted(tgt))
            else:
                trans.append([q, lindex[a], tgt])
    doc = {
        "format": FORMAT,
        "type": kind,
        "props": sorted(aut.props),
        "alphabet": [sorted(a) for a in alphabet],
        "states": aut.size,
        "initial": aut.initial,
        "transitions": trans,
    }
    if kind == "dfw":
        doc["accepting"] = sorted(aut.accepting)
    elif kind == "nbw":
        doc["accepting"] = sorted(aut.buchi)
    else:
        doc["pairs"] = [{"I": sorted(p.I), "F": sorted(p.F)} for p in aut.pairs]
        if aut.sink is not None:
            doc["sink"] = aut.sink
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def load(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError(f"unsupported automaton format {doc.get('format')!r}")
    props = frozenset(doc["props"])
    alphabet = tuple(frozenset(a) for a in doc["alphabet"])
    n = doc["states"]
    kind = doc["type"]
    rows = [dict() for _ in range(n)]
    for q, li, t in doc["transitions"]:
        a = alphabet[li]
        if kind == "nbw":
            rows[q].setdefault(a, set()).add(t)
        else:
            rows[q][a] = t
    if kind == "dfw":
        return DFW(props, alphabet, doc["initial"], tuple(rows), frozenset(doc["accepting"]))
    if kind == "nbw":
        rows = [{a: frozenset(s) for a, s in r.items()} for r in rows]
        return NBW(props, alphabet, doc["initial"], tuple(rows), frozenset(doc["accepting"]))
    pairs = tuple(RabinPair(frozenset(p["I"]), frozenset(p["F"])) for p in doc["pairs"])
    return DRW(props, alphabet, doc["initial"], tuple(rows), pairs, doc.get("sink"))
