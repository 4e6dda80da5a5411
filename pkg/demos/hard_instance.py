"""From an alternating Turing machine to a planning problem and back.

The generator turns a machine, an input and a tape exponent n into a
domain (independent of the machine) and a finite-trace goal.  The goal is
solvable exactly when the machine accepts, whichever fairness notion is
assumed.  Each solve takes 10-25 seconds.

    python3 demos/hard_instance.py [accept|reject|branch] [input]
"""
import sys
import time

from fairplan import hardgen, logic
from fairplan.planning import solve

MACHINES = {"accept": hardgen.machine_accept, "reject": hardgen.machine_reject,
            "branch": hardgen.machine_branch}


def main(name="branch", x="0"):
    M = MACHINES[name]()
    inst = hardgen.gen_instance(M, x, 1)
    print(f"machine {name!r} on input {x!r}: accepts = {hardgen.atm_accepts(M, x, 1)}")
    print(f"domain: {len(inst.domain.states)} states, {len(inst.domain.transitions)} transitions")
    print(f"goal: {logic.dag_size(inst.goal)} distinct subformulas, symbol width m = {inst.m}")
    for fairness in ("none", "state-action", "stochastic"):
        t = time.perf_counter()
        res = solve(inst.domain, inst.goal, inst.dialect, fairness)
        print(f"  {fairness:>12}: {'SAT' if res.sat else 'UNSAT'} "
              f"({res.stats['vertices']} game vertices, {time.perf_counter() - t:.1f}s)")


if __name__ == "__main__":
    main(*sys.argv[1:3])
