"""
Planning from recorded chat completions
=======================================

The chat-model backend renders prompts, sends them to a client and parses the
answer.  A replay client serves recorded answers by request hash, so an
episode can be rerun offline with exactly the recorded token usage.
"""

import sys
from pathlib import Path

from slowfast_nav import RunConfig, run_batch
from slowfast_nav.llm import LLMBackend, ReplayClient, load_fixtures

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))
from helpers import apartment_scene  # noqa: E402

# %%
# Two episodes in the same apartment.  The second one's recording has a policy
# answer with an unknown skill ("sprint") on every attempt.

scene, (good, bad) = apartment_scene()
records = {
    good.id: load_fixtures(ROOT / "tests" / "fixtures" / "apartment_replay.jsonl"),
    bad.id: load_fixtures(ROOT / "tests" / "fixtures" / "corrupted_skill.jsonl"),
}
clients = {k: ReplayClient(v) for k, v in records.items()}
config = RunConfig(bound_form="negated_structure")
results = run_batch([(scene, good), (scene, bad)], config,
                    lambda s, e: LLMBackend(clients[e.id], "fixture-model"))

# %%
# The good episode books exactly the recorded usage; the bad one is marked
# failed after the format retries run out, and the batch carries on.

for res in results:
    recorded = sum(r.prompt_tokens + r.completion_tokens for r in records[res.episode_id])
    print(f"{res.episode_id}: success={res.success} L-Tok={res.ledger.l_tok} (recorded {recorded}) "
          f"requests={clients[res.episode_id].calls} error={res.error or '-'}")
