"""Planning pipelines: goal automata, game reductions, bounded verification."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import logic
from .automata import (DEFAULT_MAX_STATES, LazySafra, LazyUnion, ReachDRW, ltl_to_nbw,
                       unfair_drw)
from .domain import Domain, PolicyMachine, enumerate_lassos, is_state_action_fair, make_domain, product
from .games import extract_policy, solve_rabin
from .logic import Formula, Lasso

FAIRNESS = ("none", "stochastic", "state-action")
MODES = ("sound", "naive-product")

DEFAULT_BOUND = 8


@dataclass
class SolveResult:
    sat: bool
    policy: PolicyMachine | None = None
    diagnostic: bool = False
    stats: dict = field(default_factory=dict)


@dataclass
class VerifyResult:
    passed: bool
    witness: Lasso | None = None
    checked: int = 0
    bound: int = DEFAULT_BOUND
    method: str = "lasso"


def goal_automaton(phi: Formula, dialect: str, D: Domain,
                   max_states: int = DEFAULT_MAX_STATES):
    """Lazy deterministic Rabin automaton for ``phi`` over the letters of ``D``."""
    if dialect == "ltlf":
        return ReachDRW(phi, max_states=max_states)
    if dialect == "ltl":
        nbw = ltl_to_nbw(phi, props=logic.atoms(phi), max_states=max_states,
                         alphabet=D.letters())
        return LazySafra(nbw, max_states=max_states)
    raise logic.FormulaError(f"unknown dialect {dialect!r}")


def solve(D: Domain, phi: Formula, dialect: str = "ltl", fairness: str = "state-action",
          mode: str = "sound", max_states: int = DEFAULT_MAX_STATES) -> SolveResult:
    """Decide whether some policy enforces ``phi`` under the given fairness."""
    if fairness not in FAIRNESS:
        raise ValueError(f"unknown fairness {fairness!r}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "naive-product":
        if fairness != "state-action":
            raise ValueError("naive-product mode only exists for state-action fairness")
        return solve_naive_product(D, phi, dialect, max_states)
    if fairness == "stochastic":
        from .stochastic import almost_sure_solve
        return almost_sure_solve(D, phi, dialect, max_states=max_states)
    goal = goal_automaton(phi, dialect, D, max_states)
    M = goal if fairness == "none" else LazyUnion(unfair_drw(D), goal)
    G = product(D, M, max_vertices=max_states)
    cert = solve_rabin(G)
    stats = {"vertices": G.n, "pairs": len(G.pairs)}
    if not cert.agent_wins:
        return SolveResult(False, stats=stats)
    return SolveResult(True, extract_policy(G, cert, D, M), stats=stats)


# ---------------------------------------------------------------------------
# the product-domain reduction (kept as a diagnostic)


class _RunDRW:
    """Reads the automaton-state fluent of a product domain and applies the
    original Rabin condition to the sequence of automaton states."""

    def __init__(self, names, source):
        self.names = names  # fluent -> automaton state
        self.props = frozenset(names)
        self.source = source
        self.index = source.index
        self.initial = -1

    def step(self, q, letter):
        for p in letter:
            r = self.names.get(p)
            if r is not None:
                return r
        raise ValueError("letter carries no automaton-state fluent")

    def membership(self, q):
        if q < 0:
            return frozenset(), frozenset()
        return self.source.membership(q)


def _fresh(base, taken):
    name = base
    while name in taken:
        name = "_" + name
    return name


def naive_product_domain(D: Domain, A, max_states: int = DEFAULT_MAX_STATES):
    """``D x A`` as a domain with one fluent per automaton state.

    Returns the domain and a map fluent -> automaton state.
    """
    taken = set(D.props)
    fl = {}

    def fluent(q):
        if q not in fl:
            fl[q] = _fresh(f"q{q}", taken | set(fl.values()))
        return fl[q]

    start = (D.init, A.initial)
    seen = {start}
    order = [start]
    trans = []
    i = 0
    while i < len(order):
        d, q = order[i]
        i += 1
        for a in D.applicable(d):
            q2 = A.step(q, d | a)
            for t in D.succ(d, a):
                key = (t, q2)
                trans.append(((d, q), a, key))
                if key not in seen:
                    if len(seen) >= max_states:
                        from .automata import CapacityError
                        raise CapacityError(f"product domain exceeds {max_states} states")
                    seen.add(key)
                    order.append(key)

    def enc(x):
        d, q = x
        return d | {fluent(q)}

    states = [enc(x) for x in order]
    Dp = make_domain(list(D.fluents) + [fluent(q) for q in sorted({x[1] for x in order})],
                     D.action_vars, states, D.actions, enc(start),
                     [(enc(s), a, enc(t)) for s, a, t in trans])
    return Dp, {v: k for k, v in fl.items()}


def solve_naive_product(D: Domain, phi: Formula, dialect: str,
                        max_states: int = DEFAULT_MAX_STATES) -> SolveResult:
    """State-action fair solving of ``<D x A, Acc>``; unsound, diagnostic only."""
    A = goal_automaton(phi, dialect, D, max_states)
    Dp, names = naive_product_domain(D, A, max_states)
    acc = _RunDRW(names, A)
    M = LazyUnion(unfair_drw(Dp), acc)
    G = product(Dp, M, max_vertices=max_states)
    cert = solve_rabin(G)
    stats = {"vertices": G.n, "pairs": len(G.pairs), "product_states": len(Dp.states)}
    if not cert.agent_wins:
        return SolveResult(False, diagnostic=True, stats=stats)
    return SolveResult(True, extract_policy(G, cert, Dp, M), diagnostic=True, stats=stats)


# ---------------------------------------------------------------------------
# verification


def verify(D: Domain, pi: PolicyMachine, phi: Formula, dialect: str = "ltl",
           fairness: str = "state-action", bound: int = DEFAULT_BOUND,
           max_states: int = DEFAULT_MAX_STATES) -> VerifyResult:
    """Bounded-exhaustive audit of ``pi`` against ``phi``.

    Lasso modes check every policy lasso with ``|u|, |v| <= bound``; the
    stochastic mode is an exact bottom-SCC audit of the induced chain.
    """
    if fairness == "stochastic":
        from .stochastic import almost_sure_audit
        ok, witness = almost_sure_audit(D, pi, phi, dialect, max_states=max_states)
        return VerifyResult(ok, witness, bound=bound, method="bscc")
    if fairness not in FAIRNESS:
        raise ValueError(f"unknown fairness {fairness!r}")
    pi.validate(D)
    checked = 0
    seen = set()
    for w in enumerate_lassos(D, bound, bound, policy=pi):
        key = w.canonical()
        if key in seen:
            continue
        seen.add(key)
        if fairness == "state-action" and not is_state_action_fair(w, D):
            continue
        checked += 1
        if not logic.eval_ltl_lasso(w, phi, dialect):
            return VerifyResult(False, w, checked, bound)
    return VerifyResult(True, None, checked, bound)
