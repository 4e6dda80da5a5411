"""Small graph helpers on integer vertex sets (SCCs via scipy)."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


def scc_partition(vertices, succ):
    """Strongly connected components of the subgraph induced by ``vertices``.

    ``succ(v)`` yields successors; edges leaving ``vertices`` are ignored.
    Components come back as sorted lists, ordered by their smallest vertex.
    """
    verts = sorted(vertices)
    if not verts:
        return []
    pos = {v: i for i, v in enumerate(verts)}
    rows, cols = [], []
    for v in verts:
        for w in succ(v):
            j = pos.get(w)
            if j is not None:
                rows.append(pos[v])
                cols.append(j)
    n = len(verts)
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(mat, directed=True, connection="strong")
    comps = {}
    for i, lab in enumerate(labels):
        comps.setdefault(lab, []).append(verts[i])
    return sorted(comps.values(), key=lambda c: c[0])


def is_nontrivial(comp, succ):
    """A component carries a cycle: more than one vertex or a self-loop."""
    if len(comp) > 1:
        return True
    v = comp[0]
    return v in set(succ(v))


def backward_reach(targets, pred, within=None):
    """Vertices (inside ``within`` if given) that can reach ``targets``."""
    seen = set(targets)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for u in pred(v):
            if u not in seen and (within is None or u in within):
                seen.add(u)
                stack.append(u)
    return seen


def scc_sinks_first(vertices, succ):
    """SCCs ordered so that every component precedes those that reach it."""
    comps = scc_partition(vertices, succ)
    where = {}
    for i, c in enumerate(comps):
        for v in c:
            where[v] = i
    # out-degree in the condensation; emit components whose successors are done
    down = [set() for _ in comps]
    up = [set() for _ in comps]
    for i, c in enumerate(comps):
        for v in c:
            for w in succ(v):
                j = where.get(w)
                if j is not None and j != i:
                    down[i].add(j)
                    up[j].add(i)
    pending = [len(d) for d in down]
    ready = [i for i, k in enumerate(pending) if k == 0]
    order = []
    while ready:
        i = ready.pop()
        order.append(comps[i])
        for j in up[i]:
            pending[j] -= 1
            if pending[j] == 0:
                ready.append(j)
    return order
