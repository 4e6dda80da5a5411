"""A short tour of the automata layer on the three-state example.

Builds the goal automata, the automaton that accepts exactly the unfair
traces of the domain, and their union, then runs them on two lassos.
"""
from fairplan import automata as A
from fairplan.fixtures import d1, psi1, psi2, tau1
from fairplan.logic import Lasso

D = d1()
fair_loop = tau1()
lazy_loop = Lasso((), (frozenset("la"), frozenset("ma")))  # m always goes back to l

goal_f = A.dfw_to_drw(A.ltlf_to_dfw(psi1(), props=D.props, alphabet=D.letters()))
goal = A.ltl_to_drw(psi2(), props=D.props, alphabet=D.letters())
unfair = A.unfair_drw(D)
both = A.drw_union(unfair, goal)

rows = [("finite-trace goal", goal_f), ("infinite-trace goal", goal),
        ("unfair traces", unfair), ("unfair or goal", both)]
print(f"{'automaton':<22}{'states':>7}{'pairs':>6}   (l m r m)^w   (l m)^w")
for name, M in rows:
    print(f"{name:<22}{M.size:>7}{M.index:>6}   {str(A.drw_run_lasso(M, fair_loop)):<13} "
          f"{A.drw_run_lasso(M, lazy_loop)}")
print("\nThe union rejects the fair loop, so no policy wins the game built from it.")
