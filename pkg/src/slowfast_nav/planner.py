"""Slow planner: goal extraction, policy analysis and subgoal-chain generation.

The planner talks to a text backend in three stages (goal identifier,
policy analyzer, chain generator).  Every backend answers with free text
followed by one JSON object; the planner owns parsing, the parse-retry
policy and the cost ledger, so the oracle, live and replay backends all go
through the same code path.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

from .errors import ChainParseFailure, EmptyLabel, GoalParseFailure, PlannerError, PolicyParseFailure
from .graphs import ImaginedGraph, ObjectNode, PerceivedGraph, normalize_label


class Skill(enum.Enum):
    APPROACH = "approach"
    THROUGH = "through"
    GO_UP = "go_up"
    GO_DOWN = "go_down"

    @classmethod
    def parse(cls, raw) -> "Skill":
        key = re.sub(r"[\s\-]+", "_", str(raw).strip().lower())
        aliases = {"goup": "go_up", "godown": "go_down"}
        key = aliases.get(key, key)
        for skill in cls:
            if skill.value == key:
                return skill
        raise ValueError(f"unknown skill {raw!r}")


@dataclass(frozen=True)
class Subgoal:
    target: str
    skill: Skill
    imagined: ImaginedGraph

    def __post_init__(self):
        target = normalize_label(self.target)
        object.__setattr__(self, "target", target)
        if target not in self.imagined.labels:
            grown = self.imagined.expected_objects + (ObjectNode(target),)
            object.__setattr__(self, "imagined", ImaginedGraph(self.imagined.subgoal_index, grown, self.imagined.timestep))

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "skill": self.skill.value,
            "imagined_objects": sorted(self.imagined.labels),
        }


@dataclass(frozen=True)
class SubgoalChain:
    subgoals: Tuple[Subgoal, ...]
    created_at: int

    def __post_init__(self):
        if not self.subgoals:
            raise ChainParseFailure("subgoal chain is empty")

    def __len__(self):
        return len(self.subgoals)


@dataclass(frozen=True)
class PlanContext:
    instruction: str
    history: Tuple[str, ...]
    current_graph: PerceivedGraph

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(normalize_label(h) for h in self.history))


@dataclass
class CostLedger:
    l_tok: int = 0
    v_tok: int = 0
    l_time: float = 0.0
    v_time: float = 0.0
    call_count: int = 0

    def charge_language(self, tokens: int, seconds: float) -> None:
        if tokens < 0 or seconds < 0:
            raise ValueError("ledger charges must be non-negative")
        self.l_tok += int(tokens)
        self.l_time += float(seconds)

    def charge_vision(self, tokens: int, seconds: float) -> None:
        if tokens < 0 or seconds < 0:
            raise ValueError("ledger charges must be non-negative")
        self.v_tok += int(tokens)
        self.v_time += float(seconds)

    def snapshot(self) -> "CostLedger":
        return CostLedger(self.l_tok, self.v_tok, self.l_time, self.v_time, self.call_count)

    def to_dict(self) -> dict:
        return {
            "l_tok": self.l_tok,
            "v_tok": self.v_tok,
            "l_time": self.l_time,
            "v_time": self.v_time,
            "call_count": self.call_count,
        }


@dataclass(frozen=True)
class Completion:
    """One backend answer plus the usage it reported."""

    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    duration: float = 0.0

    @property
    def tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class PlannerBackend(Protocol):
    def goal(self, instruction: str, reminder: Optional[str] = None) -> Completion: ...

    def policy(self, ctx: PlanContext, reminder: Optional[str] = None) -> Completion: ...

    def chain(self, reasoning: str, horizon: int, reminder: Optional[str] = None) -> Completion: ...


FORMAT_REMINDER = (
    "Your previous answer could not be parsed. End your answer with exactly one JSON object "
    "in the requested format and use only the skills approach, through, go_up, go_down."
)

_decoder = json.JSONDecoder()


def last_json_object(text: str) -> dict:
    """Return the last top-level JSON object embedded in ``text``."""
    found = None
    pos = text.find("{")
    while pos >= 0:
        try:
            obj, end = _decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            pos = text.find("{", pos + 1)
            continue
        if isinstance(obj, dict):
            found = obj
        pos = text.find("{", end)
    if found is None:
        raise ValueError("no JSON object in backend response")
    return found


def reasoning_text(text: str) -> str:
    """Free-text part of a policy answer (everything before the JSON block)."""
    cut = text.rfind("```json")
    if cut < 0:
        cut = text.rfind("{")
    return text[:cut].strip() if cut > 0 else text.strip()


def parse_goal(text: str) -> str:
    obj = last_json_object(text)
    return normalize_label(obj["goal"])


def parse_policy(text: str) -> Tuple[str, Skill]:
    obj = last_json_object(text)
    return normalize_label(obj["object"]), Skill.parse(obj["skill"])


def parse_chain(text: str, horizon: int) -> List[Tuple[str, Skill, List[str]]]:
    obj = last_json_object(text)
    items = obj["chain"]
    if not isinstance(items, list) or not items:
        raise ValueError("chain is empty")
    out = []
    for item in items[:horizon]:
        imagined = item.get("imagined_objects", [])
        if not isinstance(imagined, list):
            raise ValueError("imagined_objects must be a list")
        out.append((normalize_label(item["object"]), Skill.parse(item["skill"]), [str(x) for x in imagined]))
    return out


class SlowPlanner:
    """Runs the three planning stages against ``backend`` and books their cost.

    ``max_retries`` is the number of extra attempts (each with a format
    reminder appended) allowed after an unparsable answer.
    """

    def __init__(self, backend: PlannerBackend, ledger: Optional[CostLedger] = None, max_retries: int = 2):
        self.backend = backend
        self.ledger = ledger if ledger is not None else CostLedger()
        self.max_retries = max_retries
        self.attempts = 0

    def _ask(self, call, parse, failure):
        last_err = None
        for attempt in range(self.max_retries + 1):
            reminder = FORMAT_REMINDER if attempt else None
            completion = call(reminder)
            self.attempts += 1
            self.ledger.charge_language(completion.tokens, completion.duration)
            try:
                return completion, parse(completion.text)
            except (ValueError, KeyError, TypeError, EmptyLabel) as exc:
                last_err = exc
        raise failure(f"unparsable backend output after {self.max_retries + 1} attempts: {last_err}")

    def extract_goal(self, instruction: str) -> str:
        if not instruction or not instruction.strip():
            raise GoalParseFailure("instruction is empty")
        _, goal = self._ask(lambda r: self.backend.goal(instruction, r), parse_goal, GoalParseFailure)
        return goal

    def analyze_policy(self, ctx: PlanContext) -> Tuple[str, Tuple[str, Skill]]:
        completion, immediate = self._ask(lambda r: self.backend.policy(ctx, r), parse_policy, PolicyParseFailure)
        return reasoning_text(completion.text), immediate

    def generate_chain(self, reasoning: str, horizon: int = 3, created_at: int = 0,
                       immediate: Optional[Tuple[str, Skill]] = None) -> SubgoalChain:
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        _, items = self._ask(lambda r: self.backend.chain(reasoning, horizon, r),
                             lambda text: parse_chain(text, horizon), ChainParseFailure)
        if immediate is not None and items[0][:2] != immediate:
            # the analyzer's immediate subgoal leads the chain
            items = [(immediate[0], immediate[1], [])] + [it for it in items if it[0] != immediate[0]]
            items = items[:horizon]
        subgoals = tuple(
            Subgoal(target, skill, ImaginedGraph.from_labels(k, [target, *imagined]))
            for k, (target, skill, imagined) in enumerate(items)
        )
        return SubgoalChain(subgoals, created_at)

    def plan(self, ctx: PlanContext, horizon: int = 3) -> SubgoalChain:
        self.ledger.call_count += 1
        reasoning, immediate = self.analyze_policy(ctx)
        return self.generate_chain(reasoning, horizon, ctx.current_graph.timestep, immediate)


# --- prompts -----------------------------------------------------------------

def serialize_graph(graph: PerceivedGraph) -> str:
    if not graph.objects:
        return "(nothing detected)"
    return "\n".join(
        f"- {node.label}: {edge.distance:.2f} m, bearing {edge.bearing:+.2f} rad"
        for node, edge in graph.objects
    )


GOAL_PROMPT = (
    "You are the goal identifier of an indoor navigation agent.\n"
    "Instruction: {instruction}\n"
    "Name the single object at which the navigation ends. "
    'Answer with one JSON object: {{"goal": "<object>"}}'
)

POLICY_PROMPT = (
    "You are the policy analyzer of an indoor navigation agent.\n"
    "Instruction: {instruction}\n"
    "Subgoal objects already reached, in order: {history}\n"
    "Objects currently detected (distance, bearing from the agent):\n{graph}\n"
    "Think step by step about the remaining route, then give the immediate target object and the "
    "skill needed to reach it (approach, through, go_up or go_down). "
    'End with one JSON object: {{"object": "<object>", "skill": "<skill>"}}'
)

CHAIN_PROMPT = (
    "You are the subgoal chain generator of an indoor navigation agent.\n"
    "Reasoning from the policy analyzer:\n{reasoning}\n"
    "Translate it into at most {horizon} subgoals, the immediate one first. For each subgoal list "
    "the objects you expect to see around it. "
    'Answer with one JSON object: {{"chain": [{{"object": "<object>", "skill": "<skill>", '
    '"imagined_objects": ["<object>", ...]}}]}}'
)


def goal_messages(instruction: str, reminder: Optional[str] = None) -> List[dict]:
    msgs = [{"role": "user", "content": GOAL_PROMPT.format(instruction=instruction)}]
    if reminder:
        msgs.append({"role": "user", "content": reminder})
    return msgs


def policy_messages(ctx: PlanContext, reminder: Optional[str] = None) -> List[dict]:
    history = ", ".join(ctx.history) if ctx.history else "(none)"
    content = POLICY_PROMPT.format(instruction=ctx.instruction, history=history, graph=serialize_graph(ctx.current_graph))
    msgs = [{"role": "user", "content": content}]
    if reminder:
        msgs.append({"role": "user", "content": reminder})
    return msgs


def chain_messages(reasoning: str, horizon: int, reminder: Optional[str] = None) -> List[dict]:
    msgs = [{"role": "user", "content": CHAIN_PROMPT.format(reasoning=reasoning, horizon=horizon)}]
    if reminder:
        msgs.append({"role": "user", "content": reminder})
    return msgs


# --- oracle backend ----------------------------------------------------------

def remaining_route(route: Sequence, history: Sequence[str]) -> list:
    """Suffix of ``route`` after the last reached history entry.

    History entries are matched left to right against the route, so labels
    reached off-route are skipped rather than resetting progress.
    """
    pos = 0
    labels = [step.object for step in route]
    for h in history:
        try:
            pos = labels.index(h, pos) + 1
        except ValueError:
            continue
    rest = list(route[pos:])
    return rest if rest else list(route[-1:])


@dataclass
class OracleBackend:
    """Scripted planner that reads the annotated route of the episode.

    ``route`` is a sequence of steps with ``object``, ``skill`` and
    ``neighborhood`` attributes; the last step is the goal.  Token and time
    charges per call are synthetic constants.
    """

    route: Sequence
    goal_label: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    seconds_per_call: float = 0.0

    def _done(self, text: str) -> Completion:
        return Completion(text, self.prompt_tokens, self.completion_tokens, self.seconds_per_call)

    def goal(self, instruction: str, reminder: Optional[str] = None) -> Completion:
        return self._done(f"The navigation ends at the {self.goal_label}.\n" + json.dumps({"goal": self.goal_label}))

    def policy(self, ctx: PlanContext, reminder: Optional[str] = None) -> Completion:
        rest = remaining_route(self.route, ctx.history)
        lines = [f"Reached so far: {', '.join(ctx.history) or 'nothing'}.", "Remaining route:"]
        for k, step in enumerate(rest, 1):
            around = ", ".join(step.neighborhood) or "nothing in particular"
            lines.append(f"{k}. {step.skill.value} {step.object} (expect {around})")
        head = rest[0]
        return self._done("\n".join(lines) + "\n" + json.dumps({"object": head.object, "skill": head.skill.value}))

    def chain(self, reasoning: str, horizon: int, reminder: Optional[str] = None) -> Completion:
        chain = []
        for line in reasoning.splitlines():
            m = re.match(r"\d+\. (\w+) (.+?) \(expect (.*)\)$", line)
            if not m:
                continue
            around = [] if m.group(3) == "nothing in particular" else m.group(3).split(", ")
            chain.append({"object": m.group(2), "skill": m.group(1), "imagined_objects": around})
        return self._done("Chain:\n" + json.dumps({"chain": chain[:horizon]}))


class ScriptedBackend:
    """Backend returning canned texts in order; handy for tests and demos."""

    def __init__(self, goal_texts=(), policy_texts=(), chain_texts=(), tokens_per_call=(0, 0)):
        self._goal = list(goal_texts)
        self._policy = list(policy_texts)
        self._chain = list(chain_texts)
        self.tokens = tokens_per_call

    def _pop(self, queue, stage):
        if not queue:
            raise PlannerError(f"scripted backend ran out of {stage} answers")
        text = queue.pop(0) if len(queue) > 1 else queue[0]
        return Completion(text, *self.tokens)

    def goal(self, instruction, reminder=None):
        return self._pop(self._goal, "goal")

    def policy(self, ctx, reminder=None):
        return self._pop(self._policy, "policy")

    def chain(self, reasoning, horizon, reminder=None):
        return self._pop(self._chain, "chain")
