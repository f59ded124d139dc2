"""
Trading plan calls for confidence
=================================

Lowering the confidence threshold lets the agent keep its current plan more
often.  On a seeded synthetic suite this sweep shows how the number of
planner calls and language tokens fall while success stays put.
"""

from slowfast_nav import RunConfig, sweep_tau
from slowfast_nav.scenegen import generate_suite

# %%
# Ten generated scenes with five episodes each.

pairs = [(scene, ep) for scene, eps in generate_suite(seed=7, count=10) for ep in eps]
print(len(pairs), "episodes")

# %%
# Every planner call costs 500 prompt and 100 completion tokens; the same
# suite is replayed at each threshold.

config = RunConfig(bound_form="negated_structure", oracle_prompt_tokens=500, oracle_completion_tokens=100,
                   oracle_seconds=0.5, v_tok_per_step=50)
rows = sweep_tau(pairs, config, [1.0, 0.95, 0.85, 0.6, 0.4])

print(f"{'tau':>5} {'SR':>5} {'SPL':>5} {'calls':>6} {'L-Tok':>8} {'U-Tok':>8} {'T-Time':>7}")
for r in rows:
    a = r.report.aggregate
    print(f"{r.tau:5.2f} {a['SR']:5.2f} {a['SPL']:5.2f} {a['calls']:6.2f} {a['L-Tok']:8.0f} "
          f"{a['U-Tok']:8.0f} {a['T-Time']:7.2f}")
