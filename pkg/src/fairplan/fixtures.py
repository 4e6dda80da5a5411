"""The three-state counterexample domain and its two goal formulas."""
from .logic import Lasso, parse_formula

# l <-> m <-> r with a single action; m branches to l or r
D1_DOCUMENT = {
    "format": "fairplan-domain/1",
    "fluents": ["l", "m", "r"],
    "action_vars": ["a"],
    "init": ["l"],
    "states": [["l"], ["m"], ["r"]],
    "actions": [["a"]],
    "transitions": [
        {"from": ["l"], "act": ["a"], "to": [["m"]]},
        {"from": ["m"], "act": ["a"], "to": [["l"], ["r"]]},
        {"from": ["r"], "act": ["a"], "to": [["m"]]},
    ],
}

# l and two steps later l again
PSI1_TEXT = "F (l & X X l)"
# violated only by the trace l m r m l m r m ...
PSI2_TEXT = "!l | F (l & X X !r) | F (l & X X X X !l)"


def d1():
    from .domain import load_domain
    return load_domain(D1_DOCUMENT)


def psi1():
    return parse_formula(PSI1_TEXT, "ltlf")


def psi2():
    return parse_formula(PSI2_TEXT, "ltl")


def tau1():
    """The trace (l m r m) repeated, every step taking action a."""
    return Lasso((), (frozenset("la"), frozenset("ma"), frozenset("ra"), frozenset("ma")))
