"""Almost-sure (probability one) planning on supports.

Environment vertices of the game product are read as random choices with
full support; no numeric probabilities are involved.
"""
from __future__ import annotations

from . import logic
from .automata import DEFAULT_MAX_STATES
from .domain import AGENT, ENV, Domain, DomainError, PolicyMachine, RabinGame, product
from .graphs import is_nontrivial, scc_partition
from .logic import Formula, Lasso


def _closed_part(G: RabinGame, part, keep=()):
    """Largest subset of ``part`` the agent can keep the play in.

    Random vertices with an edge leaving the set are removed, then agent
    vertices without an edge inside it, until nothing changes.  Vertices in
    ``keep`` are treated as absorbing and never removed.
    """
    part = set(part)
    pred = {}
    for v in part:
        for w in G.succ[v]:
            pred.setdefault(w, []).append(v)
    inside = {v: sum(1 for w in G.succ[v] if w in part) for v in part}
    queue = [v for v in part if v not in keep and (
        (G.owner[v] == ENV and inside[v] < len(G.succ[v])) or inside[v] == 0)]
    gone = set(queue)
    while queue:
        w = queue.pop()
        for v in pred.get(w, ()):
            if v in gone or v in keep:
                continue
            inside[v] -= 1
            if G.owner[v] == ENV or inside[v] == 0:
                gone.add(v)
                queue.append(v)
    return part - gone


def maximal_end_components(G: RabinGame, within=None) -> list:
    """MECs inside ``within`` (default all vertices), sorted by least vertex."""
    todo = [set(range(G.n)) if within is None else set(within)]
    done = []

    def succ(v):
        return G.succ[v]

    while todo:
        part = _closed_part(G, todo.pop())
        if not part:
            continue
        comps = scc_partition(part, succ)
        if len(comps) == 1:
            if is_nontrivial(comps[0], succ):
                done.append(comps[0])
            continue
        todo.extend(set(c) for c in comps)
    return sorted(done, key=lambda c: c[0])


def good_end_components(G: RabinGame, within=None) -> list:
    """End components in which some pair can be met: ``(pair, component)``.

    For pair ``(I, F)`` these are the MECs of a MEC with ``F`` removed that
    still contain an ``I`` vertex.
    """
    out = []
    for mec in maximal_end_components(G, within):
        ms = set(mec)
        for j, p in enumerate(G.pairs):
            if not ms & p.I:
                continue
            for sub in maximal_end_components(G, ms - p.F):
                if set(sub) & p.I:
                    out.append((j, sub))
    return out


def _distance_choice(G: RabinGame, region, target):
    """Backward BFS ranks towards ``target`` inside ``region``.

    Agent vertices get the lowest-index successor of least rank; random
    vertices are ranked by their best successor (positive probability).
    """
    pred = {}
    for v in region:
        for w in G.succ[v]:
            if w in region:
                pred.setdefault(w, []).append(v)
    rank = {v: 0 for v in target if v in region}
    frontier = sorted(rank)
    while frontier:
        nxt = []
        for w in frontier:
            for v in pred.get(w, ()):
                if v not in rank:
                    rank[v] = rank[w] + 1
                    nxt.append(v)
        frontier = sorted(nxt)
    choice = {}
    for v in region:
        if G.owner[v] != AGENT or v not in rank:
            continue
        cands = [w for w in G.succ[v] if w in region and w in rank]
        if rank[v] == 0:
            cands = [w for w in G.succ[v] if w in region]
            choice[v] = min(cands)
        else:
            best = min(rank[w] for w in cands)
            choice[v] = min(w for w in cands if rank[w] == best)
    return rank, choice


def almost_sure_reach(G: RabinGame, target) -> set:
    """Vertices from which the agent reaches ``target`` with probability one."""
    from .graphs import backward_reach

    region = set(range(G.n))
    target = set(target)
    pred = G.predecessors()
    while True:
        reach = backward_reach(target & region, lambda v: pred[v], within=region)
        new = _closed_part(G, reach, keep=target)
        if new == region:
            return region
        region = new


def solve_game_almost_sure(G: RabinGame):
    """Almost-sure winning region and a memoryless strategy.

    Strategy: inside a good component, move towards its ``I`` vertices
    without leaving it; elsewhere, move towards the union of good
    components inside the almost-sure region.
    """
    goods = good_end_components(G)
    target = set()
    strategy = {}
    for j, comp in goods:
        cs = set(comp)
        fresh = cs - target
        if not fresh:
            continue
        _, choice = _distance_choice(G, cs, cs & G.pairs[j].I)
        for v in fresh:
            if G.owner[v] == AGENT:
                strategy[v] = choice[v]
        target |= cs
    region = almost_sure_reach(G, target)
    _, choice = _distance_choice(G, region, target)
    for v in region:
        if G.owner[v] == AGENT and v not in target:
            strategy[v] = choice[v]
    return region, strategy, target


def almost_sure_solve(D: Domain, phi: Formula, dialect: str = "ltl",
                      max_states: int = DEFAULT_MAX_STATES):
    """Is there a policy under which ``phi`` holds with probability one?"""
    from .planning import SolveResult, goal_automaton

    M = goal_automaton(phi, dialect, D, max_states)
    G = product(D, M, max_vertices=max_states)
    region, strategy, target = solve_game_almost_sure(G)
    stats = {"vertices": G.n, "pairs": len(G.pairs), "good": len(target)}
    if G.initial not in region:
        return SolveResult(False, stats=stats)
    return SolveResult(True, phased_policy(G, strategy, target, D, M), stats=stats)


def phased_policy(G: RabinGame, strategy, target, D: Domain, M) -> PolicyMachine:
    """Policy with memory (automaton state, phase).

    The phase bit turns on once the play has visited ``target``; actions
    depend only on the game vertex, so the bit is bookkeeping for audits.
    """
    mem = {}

    def mid(key):
        return mem.setdefault(key, len(mem))

    out, upd = {}, {}
    start = (G.initial, 0)
    mid((G.label[G.initial][1], 0))
    stack, seen = [start], {start}
    while stack:
        v, phase = stack.pop()
        d, q = G.label[v]
        e = strategy[v]
        a = G.label[e][2]
        phase2 = phase or int(v in target)
        m, m2 = mid((q, phase)), mid((M.step(q, d | a), phase2))
        out[(m, d)] = a
        upd[(m, d)] = m2
        for w in G.succ[e]:
            if (w, phase2) not in seen:
                seen.add((w, phase2))
                stack.append((w, phase2))
    return PolicyMachine(len(mem), 0, out, upd, D)


# ---------------------------------------------------------------------------
# policy audit


def induced_chain(D: Domain, pi: PolicyMachine, M, max_states: int = DEFAULT_MAX_STATES):
    """Reachable states ``(d, m, q)`` of the chain induced by ``pi``."""
    start = (D.init, pi.init, M.initial)
    order, idx, succ = [start], {start: 0}, []
    i = 0
    while i < len(order):
        d, m, q = order[i]
        a = pi.action(m, d)
        if a not in D.applicable(d):
            raise DomainError(f"policy action {sorted(a)} not applicable in {sorted(d)}")
        m2, q2 = pi.update(m, d), M.step(q, d | a)
        row = []
        for t in D.succ(d, a):
            key = (t, m2, q2)
            if key not in idx:
                if len(order) >= max_states:
                    from .automata import CapacityError
                    raise CapacityError(f"induced chain exceeds {max_states} states")
                idx[key] = len(order)
                order.append(key)
            row.append(idx[key])
        succ.append(row)
        i += 1
    return order, succ


def almost_sure_audit(D: Domain, pi: PolicyMachine, phi: Formula, dialect: str = "ltl",
                      max_states: int = DEFAULT_MAX_STATES):
    """Exact check that ``pi`` enforces ``phi`` with probability one.

    Every bottom SCC of the induced chain must satisfy a Rabin pair on the
    automaton component.  On failure a lasso reaching and cycling through a
    bad bottom SCC is returned.
    """
    from .planning import goal_automaton

    M = goal_automaton(phi, dialect, D, max_states)
    order, succ = induced_chain(D, pi, M, max_states)

    def nxt(v):
        return succ[v]

    comps = scc_partition(range(len(order)), nxt)
    for comp in comps:
        cs = set(comp)
        if any(w not in cs for v in comp for w in succ[v]):
            continue  # not bottom
        good = False
        for j in range(M.index):
            inI = any(j in M.membership(order[v][2])[0] for v in comp)
            inF = any(j in M.membership(order[v][2])[1] for v in comp)
            if inI and not inF:
                good = True
                break
        if not good:
            return False, _witness(D, pi, order, succ, comp)
    return True, None


def _bfs_path(succ, src, dst, allowed):
    """Vertices after ``src`` on a shortest nonempty path to ``dst``."""
    from collections import deque

    prev = {}
    dq = deque([src])
    while dq:
        v = dq.popleft()
        for w in succ[v]:
            if w in allowed and w not in prev:
                prev[w] = v
                if w == dst:
                    seg = [w]
                    x = v
                    while x != src:
                        seg.append(x)
                        x = prev[x]
                    return seg[::-1]
                dq.append(w)
    raise AssertionError("no path inside component")


def _witness(D, pi, order, succ, comp):
    """Lasso: shortest path into ``comp``, then a cycle through all of it."""
    cs = set(comp)
    hit = min(cs)
    path = [0] if 0 in cs else [0] + _bfs_path(succ, 0, hit, set(range(len(order))))
    hit = path[-1]
    tour, cur = [], hit
    for goal in sorted(cs - {hit}) + [hit]:
        tour.extend(_bfs_path(succ, cur, goal, cs))
        cur = goal
    letters = []
    for v in path + tour[:-1]:
        d, m, _ = order[v]
        letters.append(d | pi.action(m, d))
    k = len(path) - 1
    return Lasso(tuple(letters[:k]), tuple(letters[k:]))


# ---------------------------------------------------------------------------
# strong cyclic reachability


_PROPOSITIONAL = {"true", "false", "atom", "not", "and", "or", "implies"}


def _state_predicate(D: Domain, target: Formula):
    ops = {f.op for f in logic.subformulas(target)}
    if ops - _PROPOSITIONAL:
        raise logic.FormulaError("target must be a Boolean combination of fluents")
    bad = logic.atoms(target) - set(D.fluents)
    if bad:
        raise logic.FormulaError(f"target mentions non-fluent propositions {sorted(bad)}")
    return lambda s: logic.eval_ltlf_finite([s], target)


def strong_cyclic_reachability(D: Domain, target: Formula):
    """Classic strong-cyclic fixpoint for reaching ``target`` states.

    Repeatedly keep the states that can reach the target using only
    actions whose outcomes all stay among the kept states.
    """
    from .planning import SolveResult

    holds = _state_predicate(D, target)
    goal = {s for s in D.states if holds(s)}
    cand = set(D.states)
    while True:
        ok = {(s, a) for s in cand for a in D.applicable(s)
              if all(t in cand for t in D.succ(s, a))}
        dist = {s: 0 for s in goal}
        k = 0
        while True:
            k += 1
            layer = [s for s in cand if s not in dist and any(
                (s, a) in ok and any(dist.get(t, k) < k for t in D.succ(s, a))
                for a in D.applicable(s))]
            if not layer:
                break
            for s in layer:
                dist[s] = k
        new = set(dist) & cand
        if new == cand:
            break
        cand = new
    if D.init not in cand:
        return SolveResult(False)
    out = {}
    for s in D.states:
        if s not in cand or s in goal:
            continue
        best = None
        for a in D.applicable(s):
            if (s, a) in ok and any(dist.get(t, dist[s]) < dist[s] for t in D.succ(s, a)):
                best = a
                break
        out[(0, s)] = best
    return SolveResult(True, PolicyMachine(1, 0, out, {}, D).validate(D))
