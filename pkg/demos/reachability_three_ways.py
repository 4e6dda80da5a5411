"""Reachability goals solved three independent ways.

For a goal "eventually reach a target state", the state-action fair game,
the almost-sure analysis and the classic strong-cyclic fixpoint must all
give the same answer.  This script checks that on seeded random domains
and prints the first few instances in detail.

    python3 demos/reachability_three_ways.py [count] [seed]
"""
import random
import sys

from fairplan import logic
from fairplan.planning import solve
from fairplan.randgen import random_domain, random_target
from fairplan.stochastic import almost_sure_solve, strong_cyclic_reachability


def main(count=100, seed=0):
    rng = random.Random(seed)
    tally = {True: 0, False: 0}
    for i in range(count):
        D = random_domain(rng)
        target = random_target(rng, D)
        goal = logic.Eventually(target)
        answers = (solve(D, goal, "ltlf", "state-action").sat,
                   almost_sure_solve(D, goal, "ltlf").sat,
                   strong_cyclic_reachability(D, target).sat)
        if len(set(answers)) != 1:
            print(f"disagreement on instance {i}: {answers}")
            return 1
        tally[answers[0]] += 1
        if i < 5:
            print(f"#{i}: {len(D.states)} states, {len(D.transitions)} transitions, "
                  f"target {logic.to_text(target)} -> {'SAT' if answers[0] else 'UNSAT'}")
    print(f"{count} instances, all three agree: {tally[True]} SAT, {tally[False]} UNSAT")
    return 0


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    sys.exit(main(*args))
