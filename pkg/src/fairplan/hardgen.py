"""Instance generator: alternating TM + input -> (domain, LTLf goal).

The agent writes configurations and the transitions of odd rounds; the
environment writes the transition bits of even rounds and, after every
configuration, an n-bit challenge position.  The goal is solvable exactly
when the machine accepts the input within ``2**n`` tape cells.

Letters of the generated traces::

    C0 # T1 #' C1 #'' K1 # T2 #' C2 #'' K2 ... # bot bot ...

Configurations are sequences of blocks ``% <n-bit number> $ <m-bit symbol>``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .domain import Domain, make_domain
from .graphs import is_nontrivial, scc_partition
from .logic import (TRUE, And, Atom, Eventually, Always, Formula, Iff, Implies, Next, Not,
                    Or, Until, WeakNext)

ATM_FORMAT = "fairplan-atm/1"
MAX_N = 4
MAX_STATES = 8

# symbol fluents (mutually exclusive) and phase fluents
ZERO, ONE, PCT, DOLLAR = "zero", "one", "pct", "dollar"
HASH, HASH1, HASH2, BOT = "hash", "hash1", "hash2", "bot"
INIT, IN_T, IN_K, ODD = "init", "inT", "inK", "odd"
SYMBOLS = (ZERO, ONE, PCT, DOLLAR, HASH, HASH1, HASH2, BOT)
FLUENTS = SYMBOLS + (INIT, IN_T, IN_K, ODD)

WRITE = {ZERO: "w0", ONE: "w1", PCT: "wpct", DOLLAR: "wdollar", HASH: "whash",
         HASH1: "whash1", HASH2: "whash2", BOT: "wbot"}
WAIT = "wait"
ACTIONS = tuple(WRITE.values()) + (WAIT,)


class GeneratorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# alternating Turing machines


@dataclass(frozen=True)
class AlternatingTM:
    exists: tuple
    forall: tuple
    alphabet: tuple
    blank: str
    transitions: tuple  # ((l, q), (l2, q2), move)
    initial: str
    accept: str
    reject: str

    def __post_init__(self):
        modal = set(self.exists) | set(self.forall)
        if set(self.exists) & set(self.forall):
            raise GeneratorError("a state cannot be both existential and universal")
        if self.accept in modal or self.reject in modal or self.accept == self.reject:
            raise GeneratorError("accepting/rejecting states must be distinct and modeless")
        if self.initial not in self.exists:
            raise GeneratorError("the initial state must be existential")
        if self.blank not in self.alphabet:
            raise GeneratorError("blank must be a tape letter")
        if len(self.states) > MAX_STATES:
            raise GeneratorError(f"at most {MAX_STATES} states supported")
        for (l, q), (l2, q2), move in self.transitions:
            if q not in modal:
                raise GeneratorError(f"transition from halting or unknown state {q!r}")
            if q2 not in self.states or l not in self.alphabet or l2 not in self.alphabet:
                raise GeneratorError("transition mentions unknown state or letter")
            if move not in ("L", "R", "N"):
                raise GeneratorError(f"bad move {move!r}")
            other = self.forall if q in self.exists else self.exists
            if q2 in modal and q2 not in other:
                raise GeneratorError("existential and universal modes must alternate")

    @property
    def states(self):
        return tuple(self.exists) + tuple(self.forall) + (self.accept, self.reject)

    def moves(self, letter, state):
        return [t for t in self.transitions if t[0] == (letter, state)]


def load_atm(document) -> AlternatingTM:
    if isinstance(document, str):
        document = json.loads(document)
    fmt = document.get("format", ATM_FORMAT)
    if fmt != ATM_FORMAT:
        raise GeneratorError(f"unsupported machine format {fmt!r}")
    try:
        trans = tuple(((t["from"][0], t["from"][1]), (t["to"][0], t["to"][1]), t["move"])
                      for t in document["transitions"])
        return AlternatingTM(tuple(document["exists"]), tuple(document["forall"]),
                             tuple(document["alphabet"]), document["blank"], trans,
                             document["initial"], document["accept"], document["reject"])
    except KeyError as e:
        raise GeneratorError(f"missing field {e}") from None


def dump_atm(M: AlternatingTM) -> str:
    doc = {"format": ATM_FORMAT, "exists": list(M.exists), "forall": list(M.forall),
           "alphabet": list(M.alphabet), "blank": M.blank, "initial": M.initial,
           "accept": M.accept, "reject": M.reject,
           "transitions": [{"from": list(a), "to": list(b), "move": d}
                           for a, b, d in M.transitions]}
    return json.dumps(doc, sort_keys=True, indent=1)


def _fixture(exists, forall, trans):
    return AlternatingTM(tuple(exists), tuple(forall), ("0", "_"), "_", tuple(trans),
                         "q0", "qa", "qr")


def machine_accept():
    """q0 moves straight to the accepting state."""
    return _fixture(["q0"], [], [(("0", "q0"), ("0", "qa"), "N"), (("_", "q0"), ("_", "qa"), "N")])


def machine_reject():
    """q0 moves straight to the rejecting state."""
    return _fixture(["q0"], [], [(("0", "q0"), ("0", "qr"), "N"), (("_", "q0"), ("_", "qr"), "N")])


def machine_branch():
    """q0 chooses between accepting and rejecting."""
    return _fixture(["q0"], [], [(("0", "q0"), ("0", "qa"), "R"), (("0", "q0"), ("0", "qr"), "N")])


def _apply(t, x, y, z):
    """Middle cell after applying ``t``; ``x``/``z`` are None off the tape.

    Cells are letters or (letter, state) pairs.  A move off the tape keeps
    the head in place.
    """
    (l, q), (l2, q2), move = t
    if isinstance(y, tuple):
        if move == "N" or (move == "L" and x is None) or (move == "R" and z is None):
            return (l2, q2)
        return l2
    if isinstance(x, tuple) and move == "R":
        return (y, q2)
    if isinstance(z, tuple) and move == "L":
        return (y, q2)
    return y


def step_configs(M: AlternatingTM, conf: tuple):
    """Successor configurations, one per applicable transition."""
    pos = next(i for i, c in enumerate(conf) if isinstance(c, tuple))
    out = []
    for t in M.moves(*conf[pos]):
        new = []
        for i in range(len(conf)):
            x = conf[i - 1] if i > 0 else None
            z = conf[i + 1] if i + 1 < len(conf) else None
            new.append(_apply(t, x, conf[i], z))
        out.append((t, tuple(new)))
    return out


def initial_config(M: AlternatingTM, x: str, n: int) -> tuple:
    cells = 2 ** n
    if len(x) > cells:
        raise GeneratorError(f"input of length {len(x)} does not fit in {cells} cells")
    if not x:
        x = M.blank
    bad = set(x) - set(M.alphabet)
    if bad:
        raise GeneratorError(f"input letters {sorted(bad)} not in the tape alphabet")
    conf = [M.blank] * cells
    for i, c in enumerate(x):
        conf[i] = c
    conf[0] = (conf[0], M.initial)
    return tuple(conf)


def _head_state(conf):
    return next(cell for cell in conf if isinstance(cell, tuple))[1]


def configuration_graph(M: AlternatingTM, x: str, n: int):
    """Reachable configurations (initial first) and their successor lists."""
    start = initial_config(M, x, n)
    order, index, succ = [start], {start: 0}, []
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        halted = _head_state(c) in (M.accept, M.reject)
        row = []
        for _, d in ([] if halted else step_configs(M, c)):
            if d not in index:
                index[d] = len(order)
                order.append(d)
            row.append(index[d])
        succ.append(row)
    return order, succ


def check_halting(M: AlternatingTM, x: str, n: int):
    """Every branch must halt; otherwise fair and unfair answers may differ."""
    order, succ = configuration_graph(M, x, n)
    for comp in scc_partition(range(len(order)), lambda v: succ[v]):
        if is_nontrivial(comp, lambda v: succ[v]):
            raise GeneratorError("the machine has a non-halting branch on this input")


def atm_accepts(M: AlternatingTM, x: str, n: int) -> bool:
    """Acceptance on a tape of ``2**n`` cells (least fixpoint over configurations).

    A universal configuration without moves accepts; an existential one
    rejects.
    """
    order, succ = configuration_graph(M, x, n)
    good = {i for i, c in enumerate(order) if _head_state(c) == M.accept}
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(order):
            if i in good:
                continue
            q = _head_state(c)
            if q in M.exists:
                ok = any(j in good for j in succ[i])
            elif q in M.forall:
                ok = all(j in good for j in succ[i])
            else:
                ok = False
            if ok:
                good.add(i)
                changed = True
    return 0 in good


# ---------------------------------------------------------------------------
# domain


def _state(*fluents):
    return frozenset(fluents)


def kpos(j):
    """Fluent marking the ``j``-th challenge bit (1-based)."""
    return f"k{j}"


def gen_domain(n: int) -> Domain:
    """The arena; it depends on ``n`` only (challenges have exactly n bits)."""
    if not 1 <= n <= MAX_N:
        raise GeneratorError(f"n must be in [1, {MAX_N}]")
    cell = (ZERO, ONE, PCT, DOLLAR)
    trans = []

    def add(s, act, *targets):
        for t in targets:
            trans.append((s, {act}, t))

    def par(p):
        return (ODD,) if p else ()

    # C0, written by the agent, closed by the first '#'
    for c in cell:
        s = _state(INIT, c)
        for c2 in cell:
            add(s, WRITE[c2], _state(INIT, c2))
        add(s, WRITE[HASH], _state(HASH, ODD))
    for p in (0, 1):
        h = _state(HASH, *par(p))
        add(h, WRITE[BOT], _state(BOT))
        # T bits: the agent writes them in odd rounds, the environment in
        # even rounds; the agent always closes T
        tbits = [_state(IN_T, b, *par(p)) for b in (ZERO, ONE)]
        for x in [h] + tbits:
            if p:
                for b, t in zip((ZERO, ONE), tbits):
                    add(x, WRITE[b], t)
            else:
                add(x, WAIT, *tbits)
        for t in tbits:
            add(t, WRITE[HASH1], _state(HASH1, *par(p)))
        h1 = _state(HASH1, *par(p))
        for c in cell:
            add(h1, WRITE[c], _state(c, *par(p)))
        for c in cell:
            s = _state(c, *par(p))
            for c2 in cell:
                add(s, WRITE[c2], _state(c2, *par(p)))
            add(s, WRITE[HASH2], _state(HASH2, *par(p)))
        prev = [_state(HASH2, *par(p))]
        for j in range(1, n + 1):
            bits = [_state(IN_K, kpos(j), b, *par(p)) for b in (ZERO, ONE)]
            for x in prev:
                add(x, WAIT, *bits)
            prev = bits
        for x in prev:
            add(x, WAIT, _state(HASH, *par(1 - p)))
    add(_state(BOT), WRITE[BOT], _state(BOT))
    states = sorted({s for s, _, _ in trans} | {t for _, _, t in trans}, key=sorted)
    fluents = FLUENTS + tuple(kpos(j) for j in range(1, n + 1))
    return make_domain(fluents, ACTIONS, states, [{a} for a in ACTIONS],
                       _state(INIT, PCT), trans)


# ---------------------------------------------------------------------------
# goal formula


Z, O, P, D = Atom(ZERO), Atom(ONE), Atom(PCT), Atom(DOLLAR)
H, H1, H2, B = Atom(HASH), Atom(HASH1), Atom(HASH2), Atom(BOT)
INIT_A, ODD_A = Atom(INIT), Atom(ODD)


def X(a, k=1):
    return a if k == 0 else Next(a, k)


def WX(a, k=1):
    return a if k == 0 else WeakNext(a, k)


def weak_until(a, b):
    return Or(Until(a, b), Always(a))


def scan(f1, f2, times=1):
    """``f2`` holds one step after the ``times``-th occurrence of ``f1``."""
    for _ in range(times):
        f2 = Until(Not(f1), And(f1, Next(f2)))
    return f2


def scan_weak(f1, f2):
    return weak_until(Not(f1), And(f1, WeakNext(f2)))


def bit(b):
    return O if b == "1" else Z


def bits_at(code, offset=0, weak=False):
    """``code`` written at positions ``offset, offset+1, ...``."""
    step = WX if weak else X
    return And(*[step(bit(c), offset + i) for i, c in enumerate(code)])


@dataclass
class Encoding:
    n: int
    m: int
    symbols: tuple   # letters then (letter, state) pairs
    codes: dict      # symbol -> m-bit string
    tcodes: dict     # transition -> m-bit string

    @property
    def block(self):
        return self.n + self.m + 2


def encoding(M: AlternatingTM, n: int) -> Encoding:
    symbols = tuple(M.alphabet) + tuple((l, q) for q in M.states for l in M.alphabet)
    m = math.ceil(math.log2(len(symbols))) + 1
    while 2 ** m < len(M.transitions):
        m += 1
    codes = {s: format(i, f"0{m}b") for i, s in enumerate(symbols)}
    tcodes = {t: format(i, f"0{m}b") for i, t in enumerate(M.transitions)}
    return Encoding(n, m, symbols, codes, tcodes)


class GoalBuilder:
    """Builds the goal for one machine, input and ``n``."""

    def __init__(self, M: AlternatingTM, x: str, n: int):
        self.M, self.x, self.n = M, x, n
        self.enc = encoding(M, n)
        self.L = self.enc.block

    # -- block-relative helpers, evaluated at a '%' position
    def sym_is(self, s):
        return bits_at(self.enc.codes[s], self.n + 2)

    def heads(self, states=None):
        return [s for s in self.enc.symbols if isinstance(s, tuple)
                and (states is None or s[1] in states)]

    def shape(self, term):
        n, m, L = self.n, self.enc.m, self.L
        bitf = Or(Z, O)
        parts = [X(bitf, 1 + i) for i in range(n)] + [X(D, n + 1)]
        parts += [X(bitf, n + 2 + i) for i in range(m)]
        parts.append(X(Or(P, term), L))
        parts.append(Or(*[self.sym_is(s) for s in self.enc.symbols]))
        return And(*parts)

    def counter(self, term):
        n, L = self.n, self.L
        all_ones = And(*[X(O, 1 + i) for i in range(n)])
        lower = TRUE
        incr = []
        for j in reversed(range(n)):
            cur = X(O, 1 + j)
            flip = Or(And(cur, Not(lower)), And(Not(cur), lower))
            incr.append(Iff(X(O, L + 1 + j), flip))
            lower = And(cur, lower)
        return And(Iff(all_ones, X(term, L)), Implies(X(P, L), And(*incr)))

    def conf(self, term):
        """Current position starts a well-formed configuration ended by ``term``."""
        n = self.n
        hb = And(P, Or(*[self.sym_is(s) for s in self.heads()]))
        one_head = Until(Not(hb), And(hb, Next(Until(Not(hb), term))))
        return And(P, And(*[X(Z, 1 + i) for i in range(n)]),
                   Until(Implies(P, And(self.shape(term), self.counter(term))), term),
                   one_head)

    def init(self):
        M, L = self.M, self.L
        start = initial_config(M, self.x, self.n)
        used = max(1, len(self.x))
        parts = [self.conf(H)]
        for j in range(used):
            parts.append(X(self.sym_is(start[j]), j * L))
        parts.append(X(Until(Implies(P, self.sym_is(M.blank)), H), used * L))
        return And(*parts)

    # -- transitions
    def ttail(self, t, weak=False):
        code = self.enc.tcodes[t]
        step = WX if weak else X
        return And(bits_at(code, 0, weak), step(H1, self.enc.m))

    def head_here(self, l, q):
        return And(P, self.sym_is((l, q)))

    def tran_odd(self):
        """Odd rounds: the agent writes an applicable transition (or stops)."""
        M = self.M
        parts = [Always(Implies(And(H, ODD_A),
                                Next(Or(B, *[self.ttail(t) for t in M.transitions]))))]
        for (l, q) in self.heads(M.exists):
            opts = [self.ttail(t) for t in M.moves(l, q)]
            parts.append(Always(Implies(And(self.head_here(l, q), Not(ODD_A)),
                                        scan(H, Or(B, *opts)))))
        return And(*parts)

    def tran_close(self):
        """Even rounds: the agent closes the transition after exactly m bits."""
        m = self.enc.m
        body = And(*[X(Atom(IN_T), i) for i in range(m)], X(H1, m))
        return Always(Implies(And(H, Not(ODD_A)), Next(Or(B, body))))

    def tran_even(self):
        """Even rounds: the environment's transition letters are bits."""
        return Always(Implies(And(Atom(IN_T), Not(ODD_A)), Or(Z, O)))

    def num(self):
        n = self.n
        return Always(Implies(H2, And(*[WX(Not(H), j) for j in range(1, n + 1)],
                                      WX(H, n + 1))))

    def acc(self):
        M = self.M
        reached = Eventually(Or(*[self.head_here(l, M.accept) for l in M.alphabet]))
        never_rej = Always(Not(Or(*[self.head_here(l, M.reject) for l in M.alphabet])))
        return And(reached, never_rej, Eventually(B))

    # -- challenges
    def symbits(self, s):
        return bits_at(self.enc.codes[s])

    def cur(self, s):
        return scan(D, self.symbits(s))

    def nx(self, s):
        return scan(P, scan(D, self.symbits(s)), 2)

    def nxnx(self, s):
        return scan(P, scan(D, self.symbits(s)), 3)

    def tr(self, t):
        return scan(H, bits_at(self.enc.tcodes[t]))

    def k_equals(self, bits_formula, times):
        return scan(H2, bits_formula, times)

    def numeq(self, times):
        """Bits from here equal the challenge after the ``times``-th '#''."""
        n = self.n
        return And(*[Iff(X(b, i), scan(H2, X(b, i), times))
                     for i in range(n) for b in (Z, O)])

    def match(self):
        n = self.n
        return And(*[Iff(X(b, 1 + i), scan(H2, X(b, i))) for i in range(n) for b in (Z, O)])

    def img(self, s):
        return scan(H1, Until(Implies(And(P, self.match()), scan(D, self.symbits(s))), H2))

    def _cases(self, with_left, with_right):
        """(x, y, z, t, y') with x/z possibly None at the tape border.

        ``t`` is None when no head is in the window (the image is ``y``).
        """
        syms = self.enc.symbols
        xs = [None] if not with_left else syms
        zs = [None] if not with_right else syms
        out = []
        for x in xs:
            for y in syms:
                for z in zs:
                    cells = [c for c in (x, y, z) if c is not None]
                    hs = [c for c in cells if isinstance(c, tuple)]
                    if len(hs) > 1:
                        continue
                    if not hs:
                        out.append((x, y, z, None, y))
                        continue
                    h = hs[0]
                    for t in self.M.moves(*h):
                        out.append((x, y, z, t, _apply(t, x, y, z)))
        return out

    def tr_case(self, t, default):
        """Transition letters select ``t``.

        With ``default``, codes that name no move of the head select its
        first move, so every bit string the environment writes is legal.
        """
        if t is None:
            return []
        if not default:
            return [self.tr(t)]
        moves = self.M.moves(*t[0])
        if t != moves[0]:
            return [self.tr(t)]
        return [Not(self.tr(u)) for u in moves[1:]]

    def cha(self, times):
        """At a '%' that is not the last block: the next block's number
        equals the challenge after the ``times``-th '#''."""
        here_last = And(*[X(O, 1 + i) for i in range(self.n)])
        return And(P, Not(here_last), scan(P, self.numeq(times), 2))

    def chal(self, times, default=False):
        """Challenge clauses at block starts of a configuration whose
        challenge follows the ``times``-th later '#''."""
        n = self.n
        zeros = And(*[X(Z, i) for i in range(n)])
        ones = And(*[X(O, i) for i in range(n)])
        here_zero = And(*[X(Z, 1 + i) for i in range(n)])
        k_zero = self.k_equals(zeros, times)
        k_last = self.k_equals(ones, times)
        cha = self.cha(times)
        rules = []
        # challenge at block 0: no left neighbour
        left = And(P, here_zero, k_zero)
        for x, y, z, t, y2 in self._cases(False, True):
            pre = [left, self.cur(y), self.nx(z)] + self.tr_case(t, default)
            rules.append(Implies(And(*pre), self.img(y2)))
        # challenge at the last block: no right neighbour
        for x, y, z, t, y2 in self._cases(True, False):
            pre = [cha, k_last, self.cur(x), self.nx(y)] + self.tr_case(t, default)
            rules.append(Implies(And(*pre), self.img(y2)))
        # interior challenge
        for x, y, z, t, y2 in self._cases(True, True):
            pre = [cha, Not(k_last), self.cur(x), self.nx(y), self.nxnx(z)]
            pre += self.tr_case(t, default)
            rules.append(Implies(And(*pre), self.img(y2)))
        return And(*rules)

    def challenge(self):
        first = Always(Implies(INIT_A, self.chal(1)))
        even = Always(Implies(And(Not(INIT_A), Not(ODD_A)), self.chal(2)))
        odd = Always(Implies(ODD_A, self.chal(2, default=True)))
        return And(first, even, odd)

    def build(self):
        ag = And(self.init(), Always(Implies(H1, Next(self.conf(H2)))),
                 self.tran_odd(), self.tran_close(), self.challenge(), self.acc())
        env = And(self.num(), self.tran_even())
        return Implies(env, ag)


def gen_goal(M: AlternatingTM, x: str, n: int) -> Formula:
    if not 1 <= n <= MAX_N:
        raise GeneratorError(f"n must be in [1, {MAX_N}]")
    check_halting(M, x, n)
    return GoalBuilder(M, x, n).build()


@dataclass
class HardInstance:
    domain: Domain
    goal: Formula
    dialect: str
    n: int
    m: int


def gen_instance(M: AlternatingTM, x: str, n: int) -> HardInstance:
    return HardInstance(gen_domain(n), gen_goal(M, x, n), "ltlf", n, encoding(M, n).m)
