"""
How confident is the plan?
==========================

The bridge compares what the agent has seen with what the planner said it
would see, one timestep at a time, and turns the agreement into a number in
[0, 1].  This walk-through builds two tiny histories by hand and prints every
intermediate.
"""

from slowfast_nav import GraphHistory, ImaginedGraph, append_history, build_perceived_graph
from slowfast_nav.bridge import ambiguity_bound, compute_pq, confidence, confidence_or_zero, psi

# %%
# Two timesteps.  The agent sees a chair, then a chair and a door; the plan
# expected a chair, then only a door.

h = GraphHistory()
h = append_history(h, build_perceived_graph([("chair", (1.0, 0.0, 0.0))], 1))
h = append_history(h, build_perceived_graph([("chair", (1.5, 0.2, 0.0)), ("door", (3.0, -1.0, 0.5))], 2))
h = append_history(h, ImaginedGraph.from_labels(0, ["chair"]).at(1))
h = append_history(h, ImaginedGraph.from_labels(1, ["door"]).at(2))

# %%
# Q counts every (timestep, object) pair by (seen?, expected?); P counts every
# pair of timesteps by whether they share an object on each side.

mats = compute_pq(h)
print("Q counts [seen][expected]:\n", mats.raw_counts_Q)
print("P counts [seen][expected]:\n", mats.raw_counts_P)

# %%
# psi measures how strongly the two indicators agree; the bound turns it into
# the chance that a wrong alignment would look just as good.

print("psi(Q) =", psi(mats.Q))
print("bound, raw and clamped:", ambiguity_bound(2, 2, psi(mats.Q), mats.p11))
stats = confidence(h)
print(f"confidence = {stats.confidence:.5f}")

# %%
# The runner never sees an exception: a history without enough evidence (here,
# one timestep, so there are no timestep pairs) simply has confidence 0, which
# sends the agent back to the planner.

first = GraphHistory(h.perceived[:1], h.imagined[:1])
print("one timestep:", confidence_or_zero(first).confidence, "-", confidence_or_zero(first).degenerate)

# %%
# The two bound forms read the same statistics in opposite directions.  The
# literal one grows with shared structure, the negated one shrinks with it.

for form in ("literal", "negated_structure"):
    print(f"{form:>18}: {confidence(h, bound_form=form).confidence:.4f}")
