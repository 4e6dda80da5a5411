"""Rabin games: recursive attractor-based solver, brute-force oracle, audits."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .domain import AGENT, ENV, DomainError, PolicyMachine, RabinGame
from .graphs import is_nontrivial, scc_partition, scc_sinks_first

AGENT_WINS = "agent"
ENV_WINS = "environment"

BRUTE_FORCE_LIMIT = 12


class GuardError(ValueError):
    """Input exceeds a size guard."""


@dataclass(frozen=True)
class WinningCertificate:
    winner: str
    region: frozenset = frozenset()
    strategy: dict = field(default_factory=dict)

    @property
    def agent_wins(self) -> bool:
        return self.winner == AGENT_WINS


# ---------------------------------------------------------------------------
# solver


class _Solver:
    def __init__(self, G: RabinGame):
        self.G = G
        self.pred = G.predecessors()
        self.owner = G.owner
        self.succ = G.succ
        self.memo = {}

    def attractor(self, arena, target, player):
        """Vertices of ``arena`` from which ``player`` forces a visit to ``target``.

        Returns the set and an insertion rank (target vertices get rank 0).
        """
        owner, succ, pred = self.owner, self.succ, self.pred
        rank = {}
        queue = []
        for v in sorted(target):
            if v in arena:
                rank[v] = 0
                queue.append(v)
        count = {}
        k = 0
        while k < len(queue):
            w = queue[k]
            k += 1
            for v in pred[w]:
                if v in rank or v not in arena:
                    continue
                if owner[v] == player:
                    rank[v] = len(rank)
                    queue.append(v)
                else:
                    c = count.get(v)
                    if c is None:
                        c = sum(1 for x in succ[v] if x in arena)
                    c -= 1
                    count[v] = c
                    if c == 0:
                        rank[v] = len(rank)
                        queue.append(v)
        return rank

    def attractor_strategy(self, rank, arena, skip):
        """Lowest-index edge to an earlier-ranked vertex, for agent vertices."""
        strat = {}
        for v, r in rank.items():
            if r == 0 or v in skip or self.owner[v] != AGENT:
                continue
            strat[v] = min(w for w in self.succ[v] if w in rank and rank[w] < r)
        return strat

    def stay(self, v, arena):
        return min(w for w in self.succ[v] if w in arena)

    def prune(self, arena, pairs):
        """Simplify pairs on ``arena``; drops those that cannot be satisfied."""
        out, seen = [], set()
        for I, F in pairs:
            I = I & arena
            F = F & arena
            # a visit to I followed within two steps by F everywhere is useless
            I = frozenset(v for v in I if not self._doomed(v, F, arena))
            if not I:
                continue
            key = (I, F)
            if key in seen:
                continue
            seen.add(key)
            out.append(key)
        # pairs sharing F act as one pair with the union of their I sets
        merged = {}
        for I, F in out:
            merged[F] = merged.get(F, frozenset()) | I
        return [(I, F) for F, I in merged.items()]

    def _doomed(self, v, F, arena):
        if v in F:
            return True
        nxt = [w for w in self.succ[v] if w in arena]
        if all(w in F for w in nxt):
            return True
        for w in nxt:
            if w in F:
                continue
            if not all(x in F for x in self.succ[w] if x in arena):
                return False
        return True

    def solve(self, arena, pairs):
        """Agent winning region of the subgame and a memoryless strategy."""
        pairs = self.prune(arena, pairs)
        key = (frozenset(arena), frozenset(pairs))
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = self._solve(arena, pairs)
        return set(hit[0]), dict(hit[1])

    def _solve(self, arena, pairs):
        """Solve component by component, sinks first.

        Vertices that can be attracted to an already decided region are
        settled by attractors; the rest of each component is a subgame.
        """
        if not pairs:
            return set(), {}
        comps = scc_sinks_first(arena, lambda v: self.succ[v])
        if len(comps) == 1:
            return self._solve_core(arena, pairs)
        win, lose, strat = set(), set(), {}
        for comp in comps:
            C = set(comp)
            won = self.attract_into(C, arena, win, AGENT)
            lost = self.attract_into(C, arena, lose, ENV)
            for v, r in won.items():
                if self.owner[v] == AGENT:
                    strat[v] = min(w for w in self.succ[v]
                                   if w in win or (w in won and won[w] < r))
            rest = {v for v in C if v not in won and v not in lost}
            if rest:
                sub_win, sub_strat = self.solve(rest, pairs)
                strat.update(sub_strat)
                win |= sub_win
                lose |= rest - sub_win
            win.update(won)
            lose.update(lost)
        return win, {v: w for v, w in strat.items() if v in win}

    def attract_into(self, C, arena, target, player):
        """Vertices of ``C`` from which ``player`` forces entering ``target``
        (a set outside ``C``); ranks start at 1."""
        owner, succ, pred = self.owner, self.succ, self.pred
        rank, queue, count = {}, [], {}
        for v in sorted(C):
            outs = [w for w in succ[v] if w in arena]
            hit = sum(1 for w in outs if w in target)
            if (hit and owner[v] == player) or (owner[v] != player and hit == len(outs)):
                rank[v] = len(rank) + 1
                queue.append(v)
            else:
                count[v] = len(outs) - hit
        k = 0
        while k < len(queue):
            w = queue[k]
            k += 1
            for v in pred[w]:
                if v in rank or v not in count:
                    continue
                if owner[v] == player:
                    rank[v] = len(rank) + 1
                    queue.append(v)
                else:
                    count[v] -= 1
                    if count[v] == 0:
                        rank[v] = len(rank) + 1
                        queue.append(v)
        return rank

    def _solve_core(self, arena, pairs):
        win, strat = set(), {}
        changed = True
        H = arena
        while changed:
            changed = False
            for j, (I, F) in enumerate(pairs):
                if not H:
                    break
                envF = self.attractor(H, F & H, ENV)
                Y = H - envF.keys()
                if not Y:
                    continue
                Z, zstrat = self.good_set(Y, I, pairs[:j] + pairs[j + 1:])
                if not Z:
                    continue
                base = win | Z
                rank = self.attractor(arena, base, AGENT)
                strat.update(zstrat)
                strat.update(self.attractor_strategy(rank, arena, win))
                win = set(rank)
                H = arena - win
                changed = True
        return win, strat

    def good_set(self, Z, I, rest):
        """Largest part of ``Z`` where the agent wins via ``I`` or ``rest``."""
        Z = set(Z)
        while True:
            target = I & Z
            rank = self.attractor(Z, target, AGENT)
            S = Z - rank.keys()
            if S:
                sub_win, sub_strat = self.solve(S, rest)
                E = S - sub_win
            else:
                sub_win, sub_strat, E = set(), {}, set()
            if not E:
                break
            envE = self.attractor(Z, E, ENV)
            Z -= envE.keys()
            if not Z:
                return set(), {}
        strat = {}
        strat.update(sub_strat)
        strat.update(self.attractor_strategy(rank, Z, ()))
        for v in target:
            if self.owner[v] == AGENT:
                strat[v] = self.stay(v, Z)
        return Z, strat


def solve_rabin(G: RabinGame) -> WinningCertificate:
    """Decide the game from its initial vertex with a memoryless strategy."""
    solver = _Solver(G)
    pairs = [(frozenset(p.I), frozenset(p.F)) for p in G.pairs]
    win, strat = solver.solve(set(range(G.n)), pairs)
    if G.initial not in win:
        return WinningCertificate(ENV_WINS, frozenset(win), {})
    strategy = {v: strat[v] for v in sorted(win) if G.owner[v] == AGENT}
    return WinningCertificate(AGENT_WINS, frozenset(win), strategy)


# ---------------------------------------------------------------------------
# oracle and audits


def _has_bad_cycle(verts, succ, pairs):
    """Is there a cycle inside ``verts`` satisfying no pair (Emerson-Lei split)?"""
    stack = [set(verts)]
    while stack:
        part = stack.pop()
        for comp in scc_partition(part, succ):
            if not is_nontrivial(comp, succ):
                continue
            cs = set(comp)
            good = [I for I, F in pairs if cs & I and not cs & F]
            if not good:
                return True
            stack.append(cs - good[0])
    return False


def _reachable(start, succ):
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in succ(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def strategy_wins(G: RabinGame, strategy: dict, start=None) -> bool:
    """Every cycle reachable under ``strategy`` satisfies some pair."""
    start = G.initial if start is None else start

    def succ(v):
        if G.owner[v] == AGENT:
            return (strategy[v],)
        return G.succ[v]

    pairs = [(set(p.I), set(p.F)) for p in G.pairs]
    reach = _reachable(start, succ)
    return not _has_bad_cycle(reach, succ, pairs)


def brute_force_rabin(G: RabinGame, limit: int = BRUTE_FORCE_LIMIT) -> WinningCertificate:
    """Enumerate memoryless agent strategies (small games only)."""
    agents = G.agent_vertices()
    if len(agents) > limit:
        raise GuardError(f"brute force limited to {limit} agent vertices, got {len(agents)}")
    for choice in itertools.product(*(G.succ[v] for v in agents)):
        strategy = dict(zip(agents, choice))
        if strategy_wins(G, strategy):
            def succ(v):
                return (strategy[v],) if G.owner[v] == AGENT else G.succ[v]
            reach = _reachable(G.initial, succ)
            kept = {v: strategy[v] for v in sorted(reach) if G.owner[v] == AGENT}
            return WinningCertificate(AGENT_WINS, frozenset(reach), kept)
    return WinningCertificate(ENV_WINS)


def audit_certificate(G: RabinGame, cert: WinningCertificate) -> bool:
    """Strategy closed on its region and every reachable cycle is winning."""
    if not cert.agent_wins:
        return False
    region = cert.region
    for v in region:
        if G.owner[v] == AGENT:
            w = cert.strategy.get(v)
            if w is None or w not in G.succ[v] or w not in region:
                return False
        elif not all(w in region for w in G.succ[v]):
            return False
    return strategy_wins(G, cert.strategy)


# ---------------------------------------------------------------------------
# policy extraction


def extract_policy(G: RabinGame, cert: WinningCertificate, D, M) -> PolicyMachine:
    """Finite-state policy whose memory tracks the automaton state.

    Memory ids are automaton states renumbered in order of first use.
    """
    if not cert.agent_wins:
        raise DomainError("certificate is environment-winning")
    vid = {G.label[v]: v for v in range(G.n) if G.owner[v] == AGENT}
    d0, q0 = G.label[G.initial]
    mem = {q0: 0}
    out, upd = {}, {}
    stack = [G.initial]
    seen = {G.initial}
    while stack:
        v = stack.pop()
        d, q = G.label[v]
        e = cert.strategy[v]
        a = G.label[e][2]
        q2 = M.step(q, d | a)
        m = mem[q]
        m2 = mem.setdefault(q2, len(mem))
        out[(m, d)] = a
        upd[(m, d)] = m2
        for w in G.succ[e]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    # the play reaches w = vid[(d', q2)] exactly when memory is q2
    assert all(vid.get(G.label[w]) == w for w in seen)
    return PolicyMachine(len(mem), 0, out, upd, D)
