"""Three states, one action, and two goals that separate the fairness notions.

The domain is l <-> m <-> r: from m the single action a goes to l or r.
Run with ``python3 demos/fairness_counterexample.py``.
"""
from fairplan.domain import is_state_action_fair, memoryless_policy
from fairplan.fixtures import d1, psi1, psi2, tau1
from fairplan.logic import eval_ltl_lasso, to_text
from fairplan.planning import solve, verify


def show(w):
    def letter(x):
        return "".join(sorted(x - {"a"}))
    return " ".join(letter(x) for x in w.prefix) + " (" + " ".join(letter(x) for x in w.loop) + ")^w"


def main():
    D = d1()
    pi = memoryless_policy(D)
    print("There is exactly one policy: always do a.")

    tau = tau1()
    print(f"An environment going right, then left, then right ... at m yields {show(tau)}")
    print(f"  state-action fair: {is_state_action_fair(tau, D)}")

    g1 = psi1()
    print(f"\nGoal 1 (finite-trace): {to_text(g1)}")
    print(f"  satisfied by that trace: {eval_ltl_lasso(tau, g1, 'ltlf')}")
    for fairness in ("none", "state-action", "stochastic"):
        res = solve(D, g1, "ltlf", fairness)
        print(f"  solvable under {fairness:>12} fairness: {res.sat}")
    res = verify(D, pi, g1, "ltlf", "state-action")
    print(f"  audit of the policy finds the fair counterexample {show(res.witness)}")
    print("  The trace is fair but has probability zero, so only the stochastic answer is yes.")

    g2 = psi2()
    print(f"\nGoal 2 (infinite-trace): {to_text(g2)}")
    sound = solve(D, g2, "ltl", "state-action")
    naive = solve(D, g2, "ltl", "state-action", mode="naive-product")
    print(f"  sound reduction:              {'SAT' if sound.sat else 'UNSAT'}")
    print(f"  product-domain reduction:     {'SAT' if naive.sat else 'UNSAT'} (diagnostic)")
    print("  Folding the automaton into the domain splits m into several states, and")
    print("  fairness on the split states wrongly excludes the one bad trace.")


if __name__ == "__main__":
    main()
