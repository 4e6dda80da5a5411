"""Command-line interface: ``fairplan solve|verify|translate|gen-hard|gen-random``.

Exit codes: 0 SAT/PASS/success, 1 UNSAT/FAIL, 2 malformed input,
3 capacity exceeded, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import automata, hardgen, logic, randgen
from .automata import DEFAULT_MAX_STATES, AlphabetError, CapacityError
from .domain import DomainError, dump_domain, dump_policy, load_domain, load_policy
from .games import GuardError
from .planning import DEFAULT_BOUND, FAIRNESS, MODES, solve, verify

EXIT_OK, EXIT_NO, EXIT_PARSE, EXIT_CAPACITY, EXIT_INTERNAL = 0, 1, 2, 3, 4
DEFAULT_SEED = 0
DIAGNOSTIC = "DIAGNOSTIC: naive-product reduction (unsound; for comparison only)"


class InputError(Exception):
    pass


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    with open(path, "w") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


def _domain(args):
    return load_domain(_read(args.domain), auto_sink=args.auto_sink)


def _goal(args):
    text = _read(args.goal) if os.path.isfile(args.goal) else args.goal
    return logic.load_goal(text, args.dialect)


def cmd_solve(args):
    D = _domain(args)
    phi, dialect = _goal(args)
    res = solve(D, phi, dialect, args.fairness, args.mode, max_states=args.max_states)
    if res.diagnostic:
        print(DIAGNOSTIC)
    print("SAT" if res.sat else "UNSAT")
    for k in sorted(res.stats):
        print(f"{k}: {res.stats[k]}", file=sys.stderr)
    if res.sat and args.out:
        _write(args.out, dump_policy(res.policy))
    return EXIT_OK if res.sat else EXIT_NO


def cmd_verify(args):
    D = _domain(args)
    phi, dialect = _goal(args)
    pi = load_policy(_read(args.policy), D)
    res = verify(D, pi, phi, dialect, args.fairness, bound=args.bound,
                 max_states=args.max_states)
    if res.method == "bscc":
        scope = "method=bscc (exact)"
    else:
        scope = f"method=lasso bound={res.bound} checked={res.checked}"
    print(f"{'PASS' if res.passed else 'FAIL'} {scope}")
    if not res.passed:
        _write(args.out, logic.dump_lasso(res.witness))
    return EXIT_OK if res.passed else EXIT_NO


def cmd_translate(args):
    phi, dialect = _goal(args)
    alphabet = None
    if args.domain:
        alphabet = _domain(args).letters()
    props = logic.atoms(phi)
    target = args.target
    if dialect == "ltlf":
        if target == "nbw":
            raise InputError("ltlf goals translate to dfw or drw")
        aut = automata.ltlf_to_dfw(phi, props, alphabet=alphabet, max_states=args.max_states)
        if target == "drw":
            aut = automata.reduce_drw(automata.dfw_to_drw(aut))
    else:
        if target == "dfw":
            raise InputError("ltl goals translate to nbw or drw")
        if target == "nbw":
            aut = automata.ltl_to_nbw(phi, props, max_states=args.max_states, alphabet=alphabet)
        else:
            aut = automata.ltl_to_drw(phi, props, max_states=args.max_states, alphabet=alphabet)
    _write(args.out, automata.dump(aut))
    return EXIT_OK


def cmd_gen_hard(args):
    M = hardgen.load_atm(_read(args.tm))
    inst = hardgen.gen_instance(M, args.input, args.n)
    _write(args.out_domain, dump_domain(inst.domain))
    _write(args.out_goal, logic.dump_goal(inst.goal, inst.dialect))
    print(f"n={inst.n} m={inst.m} states={len(inst.domain.states)} "
          f"goal_nodes={logic.dag_size(inst.goal)}", file=sys.stderr)
    return EXIT_OK


def cmd_gen_random(args):
    rng = random.Random(args.seed)
    D = randgen.random_domain(rng)
    phi = randgen.random_formula(rng, sorted(D.fluents))
    _write(args.out_domain, dump_domain(D))
    _write(args.out_goal, logic.dump_goal(phi, args.dialect or "ltl"))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="fairplan", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, goal=True, domain=True):
        if domain:
            sp.add_argument("--domain", required=True, help="domain JSON file")
            sp.add_argument("--auto-sink", action="store_true",
                            help="route dead-end states to a fresh sink")
        if goal:
            sp.add_argument("--goal", required=True, help="formula text, or a goal file")
            sp.add_argument("--dialect", choices=logic.DIALECTS, default=None,
                            help="ltl or ltlf (default: the goal file's, else ltl)")
        sp.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    sp = sub.add_parser("solve", help="synthesize a policy")
    common(sp)
    sp.add_argument("--fairness", choices=FAIRNESS, default="state-action")
    sp.add_argument("--mode", choices=MODES, default="sound")
    sp.add_argument("--out", help="policy output file")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="audit a policy")
    common(sp)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--fairness", choices=FAIRNESS, default="state-action")
    sp.add_argument("--bound", type=int, default=DEFAULT_BOUND,
                    help="maximal prefix and loop length of checked lassos")
    sp.add_argument("--out", help="counterexample lasso file (default: stdout)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("translate", help="goal to automaton")
    common(sp, domain=False)
    sp.add_argument("--domain", help="restrict the alphabet to this domain's letters")
    sp.add_argument("--auto-sink", action="store_true", help=argparse.SUPPRESS)
    sp.add_argument("--target", choices=("dfw", "nbw", "drw"), default="drw")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("gen-hard", help="alternating TM + input to planning instance")
    sp.add_argument("--tm", required=True, help="machine JSON file")
    sp.add_argument("--input", default="", help="input word")
    sp.add_argument("--n", type=int, required=True, help="tape has 2**n cells")
    sp.add_argument("--out-domain", required=True)
    sp.add_argument("--out-goal", required=True)
    sp.set_defaults(func=cmd_gen_hard)

    sp = sub.add_parser("gen-random", help="seeded random domain and goal")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--dialect", choices=logic.DIALECTS, default="ltl")
    sp.add_argument("--out-domain", required=True)
    sp.add_argument("--out-goal", required=True)
    sp.set_defaults(func=cmd_gen_random)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, logic.FormulaError, DomainError, hardgen.GeneratorError,
            AlphabetError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (CapacityError, GuardError, RecursionError) as e:
        print(f"capacity: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (AssertionError, KeyError, IndexError, TypeError) as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
