"""
One episode, step by step
=========================

A seven-viewpoint apartment: go through the door, down the hallway, stop at
the sofa.  The oracle planner reads the annotated route, the fast navigator
picks one neighbour per step, and the bridge decides when to ask the planner
again.
"""

import math

from slowfast_nav import Episode, RouteStep, RunConfig, Scene, Skill, run_episode
from slowfast_nav.runner import oracle_factory

# %%
# The scene is a corridor a-b-c-d-e with a side loop through f and g.

viewpoints = {
    "a": (0.0, 0.0, 0.0), "b": (4.0, 0.0, 0.0), "c": (8.0, 0.0, 0.0), "d": (12.0, 0.0, 0.0),
    "e": (16.0, 0.0, 0.0), "f": (4.0, 4.0, 0.0), "g": (8.0, 4.0, 0.0),
}
edges = frozenset({("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("b", "f"), ("f", "g"), ("c", "g")})
objects = (
    ("lamp", (0.5, 0.8, 1.2)), ("door", (4.5, -0.5, 1.0)), ("hallway", (8.5, 0.5, 1.0)),
    ("kitchen table", (8.0, 4.5, 0.5)), ("chair", (12.5, -0.8, 0.4)), ("sofa", (16.3, 0.4, 0.4)),
)
route = (
    RouteStep("door", Skill.THROUGH, ("lamp",)),
    RouteStep("hallway", Skill.APPROACH, ("door", "kitchen table")),
    RouteStep("sofa", Skill.APPROACH, ("chair",)),
)
scene = Scene("apartment", viewpoints, edges, objects, {"demo": route})
episode = Episode("demo", "apartment", "Go through the door, down the hallway and stop at the sofa.",
                  "a", "sofa", (16.3, 0.4, 0.4), ("a", "b", "c", "d", "e"))

# %%
# Run it with a synthetic price per planner call so the ledger has something
# to count.

config = RunConfig(tau=0.85, bound_form="negated_structure", oracle_prompt_tokens=500,
                   oracle_completion_tokens=100, v_tok_per_step=50)
result = run_episode(scene, episode, config, oracle_factory(config)(scene, episode))

for s in result.steps:
    target = s.active_subgoal["target"] if s.active_subgoal else "-"
    seen = ", ".join(o["label"] for o in s.perceived["objects"]) or "nothing"
    mark = "replan" if s.triggered else "      "
    print(f"t={s.t} at {s.viewpoint}  C={s.stats.confidence:.3f} {mark}  subgoal={target:<8} "
          f"-> {s.action.to_dict().get('target', 'Stop'):<4}  sees {seen}")

# %%
# The metrics for this one episode.

print(f"\nsuccess={result.success} NE={result.ne:.2f} m TL={result.tl:.1f} m SPL={result.spl_term:.2f}")
print(f"plan calls={result.ledger.call_count} L-Tok={result.ledger.l_tok} V-Tok={result.ledger.v_tok} "
      f"U-Tok={result.u_tok:g}")
assert math.isclose(result.u_tok, result.ledger.l_tok + 4 * result.ledger.v_tok)
