"""LTL / LTLf formulas: syntax trees, parsing and exact semantics.

Formulas are hash-consed: structurally equal formulas are the same object,
so equality and hashing are O(1) and large generated goals share subterms.
Letters are sets of proposition names; traces are sequences of letters.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

DIALECTS = ("ltl", "ltlf")

Letter = frozenset


class FormulaError(ValueError):
    """Raised on malformed formula text."""

    def __init__(self, msg, pos=None):
        if pos is not None:
            msg = f"{msg} (at position {pos})"
        super().__init__(msg)
        self.pos = pos


class Formula:
    """Immutable, interned formula node.

    ``op`` is one of ``true false atom not and or implies next until
    eventually always``; ``args`` holds the sub-formulas and ``name`` the
    proposition of an atom.
    """

    __slots__ = ("op", "args", "name", "_size", "__weakref__")
    _table: dict = {}

    def __new__(cls, op, args=(), name=None):
        key = (op, name, tuple(id(a) for a in args))
        node = cls._table.get(key)
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "op", op)
            object.__setattr__(node, "args", tuple(args))
            object.__setattr__(node, "name", name)
            object.__setattr__(node, "_size", None)
            cls._table[key] = node
        return node

    def __setattr__(self, key, value):
        if key != "_size":
            raise AttributeError("Formula is immutable")
        object.__setattr__(self, key, value)

    def __reduce__(self):
        return (Formula, (self.op, self.args, self.name))

    def __repr__(self):
        return f"Formula({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    # convenience operators for building formulas in code
    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __rshift__(self, other):
        return Implies(self, other)


TRUE = Formula("true")
FALSE = Formula("false")

_ATOM_RE = re.compile(r"[A-Za-z0-9_]+\Z")


def Atom(name: str) -> Formula:
    if not isinstance(name, str) or not _ATOM_RE.match(name) or name in _KEYWORDS:
        raise FormulaError(f"bad atom identifier {name!r}")
    return Formula("atom", (), name)


def Not(a):
    return Formula("not", (a,))


def And(*args):
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    out = args[-1]
    for a in reversed(args[:-1]):
        out = Formula("and", (a, out))
    return out


def Or(*args):
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    out = args[-1]
    for a in reversed(args[:-1]):
        out = Formula("or", (a, out))
    return out


def Implies(a, b):
    return Formula("implies", (a, b))


def Iff(a, b):
    return And(Implies(a, b), Implies(b, a))


def Next(a, k=1):
    for _ in range(k):
        a = Formula("next", (a,))
    return a


def WeakNext(a, k=1):
    """``!X!a`` iterated; true at the last position of a finite trace."""
    for _ in range(k):
        a = Not(Formula("next", (Not(a),)))
    return a


def Until(a, b):
    return Formula("until", (a, b))


def Eventually(a):
    return Formula("eventually", (a,))


def Always(a):
    return Formula("always", (a,))


# ---------------------------------------------------------------------------
# traversal helpers


def subformulas(phi: Formula) -> list:
    """All distinct sub-formulas in post-order (children before parents)."""
    order, seen = [], set()
    stack = [(phi, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        for c in reversed(node.args):
            if c not in seen:
                stack.append((c, False))
    return order


def atoms(phi: Formula) -> frozenset:
    return frozenset(n.name for n in subformulas(phi) if n.op == "atom")


def dag_size(phi: Formula) -> int:
    """Number of distinct nodes (size of the shared representation)."""
    return len(subformulas(phi))


def tree_size(phi: Formula) -> int:
    if phi._size is None:
        sizes = {}
        for n in subformulas(phi):
            sizes[n] = 1 + sum(sizes[c] for c in n.args)
            if n._size is None:
                n._size = sizes[n]
    return phi._size


def normalize(phi: Formula) -> Formula:
    """Eliminate derived operators, leaving ``true atom not and next until``."""
    memo = {}
    for n in subformulas(phi):
        a = [memo[c] for c in n.args]
        op = n.op
        if op in ("true", "atom"):
            r = n
        elif op == "false":
            r = Not(TRUE)
        elif op == "not":
            r = Not(a[0])
        elif op == "and":
            r = Formula("and", a)
        elif op == "or":
            r = Not(Formula("and", (Not(a[0]), Not(a[1]))))
        elif op == "implies":
            r = Not(Formula("and", (a[0], Not(a[1]))))
        elif op == "next":
            r = Formula("next", a)
        elif op == "until":
            r = Formula("until", a)
        elif op == "eventually":
            r = Formula("until", (TRUE, a[0]))
        elif op == "always":
            r = Not(Formula("until", (TRUE, Not(a[0]))))
        else:  # pragma: no cover
            raise AssertionError(op)
        memo[n] = r
    return memo[phi]


# ---------------------------------------------------------------------------
# text form

_BINARY_TXT = {"and": "&", "or": "|", "implies": "->", "until": "U", "release": "R"}
_UNARY_TXT = {"not": "!", "next": "X", "eventually": "F", "always": "G"}


def to_text(phi: Formula) -> str:
    """Fully parenthesised text that `parse_formula` reads back identically."""
    memo = {}
    for n in subformulas(phi):
        if n.op in ("true", "false"):
            s = n.op
        elif n.op == "atom":
            s = n.name
        elif n.op in _UNARY_TXT:
            s = f"{_UNARY_TXT[n.op]} {memo[n.args[0]]}"
            if n.op == "not":
                s = f"!{memo[n.args[0]]}"
        else:
            s = f"({memo[n.args[0]]} {_BINARY_TXT[n.op]} {memo[n.args[1]]})"
        if n.op in _UNARY_TXT:
            s = f"({s})"
        memo[n] = s
    return memo[phi]


_TOKEN_RE = re.compile(r"\s*(?:(->)|([!&|()])|([A-Za-z0-9_]+))")
_KEYWORDS = {"X", "F", "G", "U", "true", "false"}


def _tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaError(f"unknown token {text[pos:].strip()[:10]!r}", pos)
        tok = m.group(1) or m.group(2) or m.group(3)
        out.append((tok, m.start(m.lastindex)))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, expect=None):
        tok, pos = self.toks[self.i]
        if expect is not None and tok != expect:
            raise FormulaError(f"expected {expect!r}, got {tok!r}", pos)
        self.i += 1
        return tok

    def parse(self):
        phi = self.implies()
        if self.peek() != "<eof>":
            tok, pos = self.toks[self.i]
            raise FormulaError(f"unexpected {tok!r}", pos)
        return phi

    def implies(self):
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disj(self):
        left = self.conj()
        while self.peek() == "|":
            self.take()
            left = Formula("or", (left, self.conj()))
        return left

    def conj(self):
        left = self.until()
        while self.peek() == "&":
            self.take()
            left = Formula("and", (left, self.until()))
        return left

    def until(self):
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self):
        tok, pos = self.toks[self.i]
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "X":
            self.take()
            return Next(self.unary())
        if tok == "F":
            self.take()
            return Eventually(self.unary())
        if tok == "G":
            self.take()
            return Always(self.unary())
        if tok == "(":
            self.take()
            phi = self.implies()
            self.take(")")
            return phi
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok in ("<eof>", ")", "&", "|", "->", "U"):
            raise FormulaError(f"unexpected {tok!r}", pos)
        self.take()
        return Atom(tok)


def parse_formula(text: str, dialect: str = "ltl") -> Formula:
    """Parse formula text.

    Precedence from tightest: ``!``, ``X`` (and ``F``/``G``), ``U``, ``&``,
    ``|``, ``->``. ``U`` and ``->`` associate to the right.
    """
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# semantics


@dataclass(frozen=True)
class Lasso:
    """The infinite word ``prefix . loop^omega``."""

    prefix: tuple
    loop: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(x) for x in self.prefix))
        object.__setattr__(self, "loop", tuple(frozenset(x) for x in self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def __len__(self):
        return len(self.prefix) + len(self.loop)

    def letter(self, i: int) -> frozenset:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def word(self, n: int) -> list:
        """First ``n`` letters of the infinite word."""
        return [self.letter(i) for i in range(n)]

    def canonical(self) -> "Lasso":
        """Shortest equivalent lasso (primitive loop, prefix rolled in)."""
        loop = list(self.loop)
        k = len(loop)
        for p in range(1, k + 1):
            if k % p == 0 and loop == loop[:p] * (k // p):
                loop = loop[:p]
                break
        prefix = list(self.prefix)
        while prefix and prefix[-1] == loop[-1]:
            prefix.pop()
            loop = [loop[-1]] + loop[:-1]
        return Lasso(tuple(prefix), tuple(loop))

    def same_word(self, other: "Lasso") -> bool:
        return self.canonical() == other.canonical()


def _index(phi):
    subs = subformulas(phi)
    return subs, {n: i for i, n in enumerate(subs)}


def _step_back(subs, idx, letter, succ):
    """Truth vector at a position given the vector of the successor.

    ``succ`` is None at the last position of a finite trace (strong next
    fails there).
    """
    val = [False] * len(subs)
    for i, n in enumerate(subs):
        op = n.op
        if op == "atom":
            v = n.name in letter
        elif op == "true":
            v = True
        elif op == "false":
            v = False
        elif op == "not":
            v = not val[idx[n.args[0]]]
        elif op == "and":
            v = val[idx[n.args[0]]] and val[idx[n.args[1]]]
        elif op == "or":
            v = val[idx[n.args[0]]] or val[idx[n.args[1]]]
        elif op == "implies":
            v = (not val[idx[n.args[0]]]) or val[idx[n.args[1]]]
        elif op == "next":
            v = succ is not None and succ[idx[n.args[0]]]
        elif op == "until":
            v = val[idx[n.args[1]]] or (
                val[idx[n.args[0]]] and succ is not None and succ[i])
        elif op == "eventually":
            v = val[idx[n.args[0]]] or (succ is not None and succ[i])
        elif op == "always":
            v = val[idx[n.args[0]]] and (succ is None or succ[i])
        else:  # pragma: no cover
            raise AssertionError(op)
        val[i] = v
    return tuple(val)


def eval_ltlf_finite(trace: Sequence, phi: Formula) -> bool:
    """``trace, 0 |= phi`` under finite-trace semantics (strong next)."""
    if len(trace) == 0:
        raise ValueError("finite traces have length >= 1")
    subs, idx = _index(phi)
    vec = None
    for letter in reversed(trace):
        vec = _step_back(subs, idx, frozenset(letter), vec)
    return vec[-1]


def _eval_ltl_lasso(w: Lasso, phi: Formula) -> bool:
    subs, idx = _index(phi)
    N = len(w)
    letters = [w.letter(i) for i in range(N)]
    nxt = [i + 1 for i in range(N)]
    nxt[-1] = len(w.prefix)
    val = {}
    for n in subs:
        op = n.op
        a = [val[c] for c in n.args]
        if op == "atom":
            v = [n.name in letters[i] for i in range(N)]
        elif op == "true":
            v = [True] * N
        elif op == "false":
            v = [False] * N
        elif op == "not":
            v = [not x for x in a[0]]
        elif op == "and":
            v = [x and y for x, y in zip(a[0], a[1])]
        elif op == "or":
            v = [x or y for x, y in zip(a[0], a[1])]
        elif op == "implies":
            v = [(not x) or y for x, y in zip(a[0], a[1])]
        elif op == "next":
            v = [a[0][nxt[i]] for i in range(N)]
        elif op in ("until", "eventually"):
            left = a[0] if op == "until" else [True] * N
            right = a[1] if op == "until" else a[0]
            v = _lfp_until(left, right, nxt)
        elif op == "always":
            # G p = !(true U !p)
            v = [not x for x in _lfp_until([True] * N, [not x for x in a[0]], nxt)]
        else:  # pragma: no cover
            raise AssertionError(op)
        val[n] = v
    return val[phi][0]


def _lfp_until(left, right, nxt):
    N = len(left)
    v = list(right)
    changed = True
    while changed:
        changed = False
        for i in range(N - 1, -1, -1):
            if not v[i] and left[i] and v[nxt[i]]:
                v[i] = True
                changed = True
    return v


def _eval_ltlf_lasso(w: Lasso, phi: Formula) -> bool:
    # Prefixes ending inside u are checked directly.  A prefix ending at
    # loop offset r after t extra loop turns is evaluated backward: the
    # vector at the loop entry is loopmap^t(tail_r); iterate t until the
    # entry vector repeats.
    subs, idx = _index(phi)
    u, v = w.prefix, w.loop
    root = len(subs) - 1

    def through_prefix(vec):
        for letter in reversed(u):
            vec = _step_back(subs, idx, letter, vec)
        return vec[root]

    for k in range(1, len(u) + 1):
        vec = None
        for letter in reversed(u[:k]):
            vec = _step_back(subs, idx, letter, vec)
        if vec[root]:
            return True

    def loopmap(vec):
        for letter in reversed(v):
            vec = _step_back(subs, idx, letter, vec)
        return vec

    for r in range(len(v)):
        vec = None
        for letter in reversed(v[: r + 1]):
            vec = _step_back(subs, idx, letter, vec)
        seen = set()
        while vec not in seen:
            seen.add(vec)
            if through_prefix(vec):
                return True
            vec = loopmap(vec)
    return False


def eval_ltl_lasso(w: Lasso, phi: Formula, dialect: str = "ltl") -> bool:
    """Exact satisfaction of the infinite word ``u.v^omega``.

    For ``ltlf`` the word satisfies ``phi`` iff some finite prefix does.
    """
    if dialect == "ltl":
        return _eval_ltl_lasso(w, phi)
    if dialect == "ltlf":
        return _eval_ltlf_lasso(w, phi)
    raise ValueError(f"unknown dialect {dialect!r}")


# ---------------------------------------------------------------------------
# fairness


def literal_conj(props: Iterable[str], true_set: Iterable[str]) -> Formula:
    """Complete conjunction fixing every proposition in ``props``."""
    true_set = set(true_set)
    lits = [Atom(p) if p in true_set else Not(Atom(p)) for p in sorted(props)]
    return And(*lits)


def emit_fairness_formula(D) -> Formula:
    """State-action fairness of ``D`` as an LTL formula.

    One conjunct ``G F (s & a) -> G F (s & a & X s')`` per transition.
    """
    conjuncts = []
    for s, a, t in D.transitions:
        sa = And(literal_conj(D.fluents, s), literal_conj(D.action_vars, a))
        step = And(sa, Next(literal_conj(D.fluents, t)))
        conjuncts.append(Implies(Always(Eventually(sa)), Always(Eventually(step))))
    return And(*conjuncts) if conjuncts else TRUE


# ---------------------------------------------------------------------------
# file formats

GOAL_FORMAT = "fairplan-goal/1"
LASSO_FORMAT = "fairplan-lasso/1"

_ARITY = {"true": 0, "false": 0, "not": 1, "next": 1, "eventually": 1, "always": 1,
          "and": 2, "or": 2, "implies": 2, "until": 2}


def dump_goal(phi: Formula, dialect: str) -> str:
    """Goal document with shared sub-formulas stored once (post-order nodes)."""
    subs = subformulas(phi)
    idx = {n: i for i, n in enumerate(subs)}
    nodes = []
    for n in subs:
        if n.op == "atom":
            nodes.append(["atom", n.name])
        else:
            nodes.append([n.op] + [idx[c] for c in n.args])
    doc = {"format": GOAL_FORMAT, "dialect": dialect, "nodes": nodes, "root": idx[phi]}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def load_goal(text: str, dialect: str | None = None):
    """Parse a goal document or plain formula text; returns ``(phi, dialect)``.

    ``dialect`` overrides the document's dialect; plain text defaults to ltl.
    """
    stripped = text.lstrip()
    if not stripped.startswith("{"):
        dialect = dialect or "ltl"
        return parse_formula(text.strip(), dialect), dialect
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormulaError(f"bad goal document: {e}") from None
    if doc.get("format") != GOAL_FORMAT:
        raise FormulaError(f"unsupported goal format {doc.get('format')!r}")
    built = []
    try:
        for node in doc["nodes"]:
            op, rest = node[0], node[1:]
            if op == "atom":
                built.append(Atom(rest[0]))
                continue
            if _ARITY.get(op) != len(rest):
                raise FormulaError(f"bad goal node {node!r}")
            if not all(isinstance(i, int) and 0 <= i < len(built) for i in rest):
                raise FormulaError("goal nodes must be in post-order")
            built.append(Formula(op, [built[i] for i in rest]))
        phi = built[doc["root"]]
        dialect = dialect or doc.get("dialect", "ltl")
    except (KeyError, IndexError, TypeError) as e:
        raise FormulaError(f"bad goal document: {e}") from None
    if dialect not in DIALECTS:
        raise FormulaError(f"unknown dialect {dialect!r}")
    return phi, dialect


def dump_lasso(w: Lasso) -> str:
    doc = {"format": LASSO_FORMAT, "prefix": [sorted(x) for x in w.prefix],
           "loop": [sorted(x) for x in w.loop]}
    return json.dumps(doc, sort_keys=True, indent=1)


def load_lasso(text: str) -> Lasso:
    doc = json.loads(text)
    if doc.get("format") != LASSO_FORMAT:
        raise ValueError(f"unsupported lasso format {doc.get('format')!r}")
    return Lasso(tuple(doc["prefix"]), tuple(doc["loop"]))
