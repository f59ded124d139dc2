"""Regenerate the replay fixtures under tests/fixtures/.

The requests go through the real HTTP client and recorder; the far end is a
canned responder mounted on ``httpx.MockTransport`` that answers like a
well-behaved chat model reading the apartment route.  Rerun this script
whenever a prompt template changes (the request hashes change with it):

    python3 tests/fixtures/make_fixtures.py
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import httpx

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from helpers import apartment_scene  # noqa: E402

from slowfast_nav.graphs import PerceivedGraph  # noqa: E402
from slowfast_nav.llm import HttpChatClient, LLMBackend, RecordingClient, make_body  # noqa: E402
from slowfast_nav.planner import OracleBackend, PlanContext, SlowPlanner  # noqa: E402
from slowfast_nav.runner import RunConfig, run_episode  # noqa: E402

MODEL = "fixture-model"
USAGE = {"goal": (64, 9), "policy": (812, 143), "chain": (430, 88)}
GOAL_INSTRUCTION = "go past the kitchen table and stop at the sofa"


def make_handler(route, goal_label, corrupt_instruction=None):
    oracle = OracleBackend(route, goal_label)

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        prompt = body["messages"][0]["content"]
        if prompt.startswith("You are the goal identifier"):
            stage = "goal"
            text = "The instruction ends at the sofa.\n```json\n" + json.dumps({"goal": "sofa"}) + "\n```"
        elif prompt.startswith("You are the policy analyzer"):
            stage = "policy"
            instruction = re.search(r"^Instruction: (.*)$", prompt, re.M).group(1)
            reached = re.search(r"^Subgoal objects already reached, in order: (.*)$", prompt, re.M).group(1)
            history = () if reached == "(none)" else tuple(reached.split(", "))
            answer = oracle.policy(PlanContext(instruction, history, PerceivedGraph(0))).text
            if instruction == corrupt_instruction:
                answer = answer.rsplit("\n", 1)[0] + "\n" + json.dumps({"object": "door", "skill": "sprint"})
            text = answer
        else:
            stage = "chain"
            reasoning = prompt.split("Reasoning from the policy analyzer:\n", 1)[1].split("\nTranslate it", 1)[0]
            horizon = int(re.search(r"at most (\d+) subgoals", prompt).group(1))
            text = oracle.chain(reasoning, horizon).text
        pt, ct = USAGE[stage]
        return httpx.Response(200, text=make_body(text, pt, ct, MODEL))

    return handler


def record(path: Path, handler, run):
    if path.exists():
        path.unlink()
    live = HttpChatClient("https://fixture.invalid/v1", api_key="unused",
                          transport=httpx.MockTransport(handler))
    recorder = RecordingClient(live, path)
    return recorder, run(LLMBackend(recorder, MODEL))


def freeze_durations(path: Path, seconds: float = 0.25) -> None:
    """Durations measured against the in-process transport are noise; pin them."""
    lines = []
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        rec["duration"] = seconds
        lines.append(json.dumps(rec, sort_keys=True))
    path.write_text("\n".join(lines) + "\n")


def main() -> None:
    scene, (good, corrupted) = apartment_scene()
    route = scene.routes[good.id]
    config = RunConfig(tau=0.85, bound_form="negated_structure")

    path = HERE / "apartment_replay.jsonl"
    _, result = record(path, make_handler(route, "sofa"),
                       lambda backend: run_episode(scene, good, config, backend))
    freeze_durations(path)
    assert result.error is None and result.success, result.error

    path = HERE / "corrupted_skill.jsonl"
    _, result = record(path, make_handler(route, "sofa", corrupt_instruction=corrupted.instruction),
                       lambda backend: run_episode(scene, corrupted, config, backend))
    freeze_durations(path)
    assert result.error and result.error.startswith("policy_parse_failure"), result.error

    path = HERE / "goal_example.jsonl"
    record(path, make_handler(route, "sofa"),
           lambda backend: SlowPlanner(backend).extract_goal(GOAL_INSTRUCTION))
    freeze_durations(path)
    print("fixtures written to", HERE)


if __name__ == "__main__":
    main()
