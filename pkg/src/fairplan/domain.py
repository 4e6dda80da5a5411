"""Explicit FOND domains, policies, fairness of lassos and the game product.

States and actions are frozensets of propositions (fluents, resp. action
variables).  A trace letter is ``s | a``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .automata import letter_key
from .logic import Lasso

DOMAIN_FORMAT = "fairplan-domain/1"
POLICY_FORMAT = "fairplan-policy/1"

DUMMY_FLUENT = "deadend"
DUMMY_ACTION = "noop"


class DomainError(ValueError):
    """Malformed or inconsistent domain, policy or trace."""


def _fs(xs):
    return frozenset(xs)


def _skey(s):
    return letter_key(s)


@dataclass(frozen=True, eq=False)
class Domain:
    fluents: tuple
    action_vars: tuple
    states: tuple
    actions: tuple
    init: frozenset
    transitions: tuple
    _succ: dict = field(default=None, repr=False)
    _app: dict = field(default=None, repr=False)

    def __post_init__(self):
        succ, app = {}, {}
        for s, a, t in self.transitions:
            succ.setdefault((s, a), []).append(t)
        for (s, a) in succ:
            app.setdefault(s, []).append(a)
        object.__setattr__(self, "_succ", {k: tuple(sorted(v, key=_skey)) for k, v in succ.items()})
        object.__setattr__(self, "_app", {k: tuple(sorted(v, key=_skey)) for k, v in app.items()})

    def succ(self, s, a) -> tuple:
        return self._succ.get((s, a), ())

    def applicable(self, s) -> tuple:
        return self._app.get(s, ())

    @property
    def props(self):
        return frozenset(self.fluents) | frozenset(self.action_vars)

    def split(self, letter):
        letter = frozenset(letter)
        return letter & frozenset(self.fluents), letter & frozenset(self.action_vars)

    def letters(self) -> tuple:
        """All realisable letters ``s | a``."""
        return tuple(sorted({s | a for s in self.states for a in self.applicable(s)},
                            key=letter_key))

    def reachable_states(self) -> list:
        seen, order = {self.init}, [self.init]
        i = 0
        while i < len(order):
            s = order[i]
            for a in self.applicable(s):
                for t in self.succ(s, a):
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
            i += 1
        return order

    def restrict_reachable(self) -> "Domain":
        keep = set(self.reachable_states())
        trans = tuple(x for x in self.transitions if x[0] in keep)
        acts = {a for _, a, _ in trans}
        return Domain(self.fluents, self.action_vars,
                      tuple(s for s in self.states if s in keep),
                      tuple(a for a in self.actions if a in acts),
                      self.init, trans)

    def is_deterministic(self) -> bool:
        return all(len(v) == 1 for v in self._succ.values())


def make_domain(fluents, action_vars, states, actions, init, transitions,
                auto_sink=False, reachable_only=False) -> Domain:
    """Build and validate a domain from plain Python collections."""
    fluents = tuple(sorted(set(fluents)))
    action_vars = tuple(sorted(set(action_vars)))
    fset, aset = set(fluents), set(action_vars)
    if fset & aset:
        raise DomainError(f"propositions declared as both fluent and action: {sorted(fset & aset)}")
    if len(fluents) + len(action_vars) == 0:
        raise DomainError("domain declares no propositions")

    def state(xs, what):
        xs = _fs(xs)
        bad = xs - fset
        if bad:
            raise DomainError(f"unknown proposition(s) {sorted(bad)} in {what}")
        return xs

    def action(xs, what):
        xs = _fs(xs)
        bad = xs - aset
        if bad:
            raise DomainError(f"unknown proposition(s) {sorted(bad)} in {what}")
        return xs

    st = [state(s, "state") for s in states]
    acts = [action(a, "action") for a in actions]
    s0 = state(init, "init")
    stset, actset = set(st), set(acts)
    if s0 not in stset:
        raise DomainError(f"initial state {sorted(s0)} is not a declared state")
    trans = set()
    for s, a, t in transitions:
        s, a, t = state(s, "transition"), action(a, "transition"), state(t, "transition")
        if s not in stset or t not in stset:
            raise DomainError(f"transition endpoint not a declared state: {sorted(s)} -> {sorted(t)}")
        if a not in actset:
            raise DomainError(f"transition action {sorted(a)} is not a declared action")
        trans.add((s, a, t))
    D = Domain(fluents, action_vars, tuple(sorted(set(st), key=_skey)),
               tuple(sorted(set(acts), key=_skey)), s0,
               tuple(sorted(trans, key=lambda x: (_skey(x[0]), _skey(x[1]), _skey(x[2])))))
    if reachable_only:
        D = D.restrict_reachable()
    dead = [s for s in D.states if not D.applicable(s)]
    if dead:
        if not auto_sink:
            raise DomainError(f"state {sorted(dead[0])} has no applicable action")
        D = _add_sink(D, dead)
    return D


def _add_sink(D, dead):
    if DUMMY_FLUENT in D.props or DUMMY_ACTION in D.props:
        raise DomainError("cannot add dummy sink: reserved proposition names in use")
    sink, noop = frozenset({DUMMY_FLUENT}), frozenset({DUMMY_ACTION})
    trans = list(D.transitions) + [(s, noop, sink) for s in dead] + [(sink, noop, sink)]
    return make_domain(D.fluents + (DUMMY_FLUENT,), D.action_vars + (DUMMY_ACTION,),
                       list(D.states) + [sink], list(D.actions) + [noop], D.init, trans)


def load_domain(document, auto_sink=False, reachable_only=False) -> Domain:
    """Domain from its JSON document (a dict or JSON text)."""
    if isinstance(document, str):
        document = json.loads(document)
    fmt = document.get("format", DOMAIN_FORMAT)
    if fmt != DOMAIN_FORMAT:
        raise DomainError(f"unsupported domain format {fmt!r}")
    try:
        trans = []
        for tr in document["transitions"]:
            for t in tr["to"]:
                trans.append((tr["from"], tr["act"], t))
        return make_domain(document["fluents"], document["action_vars"],
                           document["states"], document["actions"], document["init"],
                           trans, auto_sink=auto_sink, reachable_only=reachable_only)
    except KeyError as e:
        raise DomainError(f"missing field {e}") from None


def dump_domain(D: Domain) -> str:
    groups = {}
    for s, a, t in D.transitions:
        groups.setdefault((s, a), []).append(t)
    doc = {
        "format": DOMAIN_FORMAT,
        "fluents": list(D.fluents),
        "action_vars": list(D.action_vars),
        "init": sorted(D.init),
        "states": [sorted(s) for s in D.states],
        "actions": [sorted(a) for a in D.actions],
        "transitions": [{"from": sorted(s), "act": sorted(a), "to": [sorted(t) for t in ts]}
                        for (s, a), ts in groups.items()],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


# ---------------------------------------------------------------------------
# traces


def trace_steps(w: Lasso, D: Domain) -> list:
    """``(s, a)`` per lasso position, checking that ``w`` is a trace of ``D``."""
    n = len(w)
    steps = [D.split(w.letter(i)) for i in range(n)]
    if steps[0][0] != D.init:
        raise DomainError("lasso does not start in the initial state")
    for i in range(n):
        s, a = steps[i]
        j = i + 1 if i + 1 < n else len(w.prefix)
        if steps[j][0] not in D.succ(s, a):
            raise DomainError(f"lasso step {i} is not a transition of the domain")
    return steps


def is_trace(w: Lasso, D: Domain) -> bool:
    try:
        trace_steps(w, D)
    except DomainError:
        return False
    return True


def is_state_action_fair(w: Lasso, D: Domain) -> bool:
    """Every (s, a) on the loop realises all of its outcomes on the loop."""
    steps = trace_steps(w, D)
    k = len(w.prefix)
    loop = steps[k:]
    seen_sa, seen_step = set(), set()
    for i, (s, a) in enumerate(loop):
        t = loop[(i + 1) % len(loop)][0]
        seen_sa.add((s, a))
        seen_step.add((s, a, t))
    return all((s, a, t) in seen_step for (s, a) in seen_sa for t in D.succ(s, a))


def lasso_from_path(D: Domain, path: list, loop_start: int) -> Lasso:
    """Lasso from a list of ``(s, a)`` steps."""
    letters = [s | a for s, a in path]
    return Lasso(tuple(letters[:loop_start]), tuple(letters[loop_start:]))


def enumerate_lassos(D: Domain, max_prefix: int, max_loop: int, policy=None):
    """All lassos of ``D`` with ``|u| <= max_prefix`` and ``1 <= |v| <= max_loop``.

    With a policy, lassos live in the product with the policy memory: the
    loop must return to the same (state, memory) pair, so every yielded word
    is a trace generated by the policy.  The same infinite word may be
    yielded more than once (different unrollings).
    """
    total = max_prefix + max_loop

    def moves(s, m):
        if policy is None:
            return [(a, None) for a in D.applicable(s)]
        return [(policy.action(m, s), policy.update(m, s))]

    m0 = None if policy is None else policy.init
    path = []  # entries (s, a, m)

    def rec(s, m):
        for a, m2 in moves(s, m):
            path.append((s, a, m))
            n = len(path)
            for t in D.succ(s, a):
                # close a loop back to an earlier position k
                for k in range(max(0, n - max_loop), min(n, max_prefix + 1)):
                    ks, _, km = path[k]
                    if ks == t and km == m2:
                        yield lasso_from_path(D, [(x, y) for x, y, _ in path], k)
                if n < total:
                    yield from rec(t, m2)
            path.pop()

    yield from rec(D.init, m0)


# ---------------------------------------------------------------------------
# policies


@dataclass(frozen=True, eq=False)
class PolicyMachine:
    """Finite-state policy: ``action(m, s)`` and ``update(m, s)``.

    Pairs missing from the tables fall back to the first applicable action
    and an unchanged memory state.
    """

    memory: int
    init: int
    out: dict
    upd: dict
    domain: Domain = field(default=None, repr=False)

    def action(self, m, s):
        a = self.out.get((m, s))
        if a is None:
            app = self.domain.applicable(s) if self.domain is not None else ()
            if not app:
                raise DomainError(f"policy undefined at memory {m}, state {sorted(s)}")
            return app[0]
        return a

    def update(self, m, s):
        return self.upd.get((m, s), m)

    def validate(self, D: Domain):
        for (m, s), a in self.out.items():
            if not (0 <= m < self.memory):
                raise DomainError(f"memory state {m} out of range")
            if s in set(D.states) and a not in D.applicable(s):
                raise DomainError(f"policy action {sorted(a)} not applicable in {sorted(s)}")
        return self


def memoryless_policy(D: Domain, choice: Callable | dict | None = None) -> PolicyMachine:
    """One-memory-state policy; default picks the first applicable action."""
    out = {}
    for s in D.states:
        if choice is None:
            a = D.applicable(s)[0]
        elif callable(choice):
            a = choice(s)
        else:
            a = choice[s]
        out[(0, s)] = frozenset(a)
    return PolicyMachine(1, 0, out, {}, D).validate(D)


def load_policy(document, D: Domain) -> PolicyMachine:
    if isinstance(document, str):
        document = json.loads(document)
    fmt = document.get("format", POLICY_FORMAT)
    if fmt != POLICY_FORMAT:
        raise DomainError(f"unsupported policy format {fmt!r}")
    out, upd = {}, {}
    try:
        for st in document["step"]:
            key = (st["mem"], frozenset(st["state"]))
            out[key] = frozenset(st["act"])
            upd[key] = st["next_mem"]
        pi = PolicyMachine(document["memory"], document["init"], out, upd, D)
    except (KeyError, TypeError) as e:
        raise DomainError(f"bad policy document: {e!r}") from None
    return pi.validate(D)


def dump_policy(pi: PolicyMachine) -> str:
    steps = []
    for (m, s) in sorted(pi.out, key=lambda k: (k[0], _skey(k[1]))):
        steps.append({"mem": m, "state": sorted(s), "act": sorted(pi.out[(m, s)]),
                      "next_mem": pi.update(m, s)})
    doc = {"format": POLICY_FORMAT, "memory": pi.memory, "init": pi.init, "step": steps}
    return json.dumps(doc, sort_keys=True, indent=1)


class RoundRobin:
    """Selector cycling through the successors of each (state, action)."""

    start = ()

    def __call__(self, sel, s, a, succs):
        counts = dict(sel)
        k = counts.get((s, a), 0)
        counts[(s, a)] = (k + 1) % len(succs)
        key = tuple(sorted(counts.items(), key=lambda x: (_skey(x[0][0]), _skey(x[0][1]))))
        return succs[k % len(succs)], key


class FixedChoice:
    """Stateless selector: ``choose(s, a, succs) -> successor``."""

    start = None

    def __init__(self, choose):
        self.choose = choose

    def __call__(self, sel, s, a, succs):
        return self.choose(s, a, succs), None


def run_policy(D: Domain, pi: PolicyMachine, selector, max_steps: int = 10**6) -> Lasso:
    """Lasso generated by ``pi`` when the environment follows ``selector``.

    The run stops as soon as a (state, memory, selector state) triple
    repeats.
    """
    s, m, sel = D.init, pi.init, selector.start
    seen = {}
    letters = []
    while (s, m, sel) not in seen:
        if len(letters) >= max_steps:
            raise DomainError("run did not close a lasso within max_steps")
        seen[(s, m, sel)] = len(letters)
        a = pi.action(m, s)
        succs = D.succ(s, a)
        if not succs:
            raise DomainError(f"policy action {sorted(a)} not applicable in {sorted(s)}")
        t, sel2 = selector(sel, s, a, succs)
        if t not in succs:
            raise DomainError(f"selector returned a non-successor {sorted(t)}")
        letters.append(s | a)
        m = pi.update(m, s)
        s, sel = t, sel2
    k = seen[(s, m, sel)]
    return Lasso(tuple(letters[:k]), tuple(letters[k:]))


def is_policy_trace(w: Lasso, D: Domain, pi: PolicyMachine) -> bool:
    """Whether the infinite word ``w`` is generated by ``pi``."""
    steps = trace_steps(w, D)
    m = pi.init
    k, n = len(w.prefix), len(w)
    i = 0
    seen = set()
    while True:
        if i >= k:
            key = ((i - k) % (n - k), m)
            if key in seen:
                return True
            seen.add(key)
        pos = i if i < n else k + (i - k) % (n - k)
        s, a = steps[pos]
        if pi.action(m, s) != a:
            return False
        m = pi.update(m, s)
        i += 1


# ---------------------------------------------------------------------------
# game product


AGENT, ENV = 0, 1


@dataclass(eq=False)
class RabinGame:
    """Two-tier arena: agent vertices choose actions, env vertices outcomes.

    ``label[v]`` is ``(d, q)`` for agent vertices and ``(d, q, a)`` for
    environment vertices of a product; hand-built games may use anything.
    """

    owner: list
    succ: list
    initial: int
    pairs: list
    label: list = None

    def __post_init__(self):
        if self.label is None:
            self.label = list(range(len(self.owner)))
        for v, out in enumerate(self.succ):
            if not out:
                raise DomainError(f"vertex {v} has no successor")

    @property
    def n(self):
        return len(self.owner)

    def agent_vertices(self):
        return [v for v in range(self.n) if self.owner[v] == AGENT]

    def predecessors(self):
        pred = [[] for _ in range(self.n)]
        for v, out in enumerate(self.succ):
            for w in out:
                pred[w].append(v)
        return pred


def product(D: Domain, M, max_vertices: int = 10**7) -> RabinGame:
    """Synchronous product of ``D`` with a deterministic Rabin automaton.

    Agent vertex ``(d, q)`` picks an applicable action ``a`` leading to env
    vertex ``(d, q, a)``, which moves to ``(d', M.step(q, d | a))`` for each
    ``d'`` in ``Tr(d, a)``.  Pair membership sits on agent vertices only.
    """
    from .automata import AlphabetError

    owner, succ, label = [], [], []
    ids = {}

    def vid(key, who):
        v = ids.get(key)
        if v is None:
            if len(owner) >= max_vertices:
                from .automata import CapacityError
                raise CapacityError(f"product exceeds {max_vertices} vertices")
            v = len(owner)
            ids[key] = v
            owner.append(who)
            succ.append(None)
            label.append(key)
        return v

    root = vid((D.init, M.initial), AGENT)
    i = 0
    while i < len(owner):
        key = label[i]
        if owner[i] == AGENT:
            d, q = key
            succ[i] = tuple(vid((d, q, a), ENV) for a in D.applicable(d))
            if not succ[i]:
                raise DomainError(f"state {sorted(d)} has no applicable action")
        else:
            d, q, a = key
            try:
                q2 = M.step(q, d | a)
            except AlphabetError as e:
                raise AlphabetError(f"alphabet gap at letter {sorted(d | a)}: {e}") from None
            succ[i] = tuple(vid((t, q2), AGENT) for t in D.succ(d, a))
        i += 1
    pairs = [[set(), set()] for _ in range(M.index)]
    for v in range(len(owner)):
        if owner[v] == AGENT:
            I, F = M.membership(label[v][1])
            for j in I:
                pairs[j][0].add(v)
            for j in F:
                pairs[j][1].add(v)
    from .automata import RabinPair
    return RabinGame(owner, succ, root, [RabinPair(frozenset(I), frozenset(F)) for I, F in pairs],
                     label)
