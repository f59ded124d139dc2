"""Fast reactive navigator: one rule-based action per perceived graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from .errors import DeadEnd
from .graphs import PerceivedGraph, Vec3
from .planner import Skill, Subgoal


@dataclass(frozen=True)
class Action:
    """``MoveTo(target)`` when ``target`` is set, ``Stop`` otherwise."""

    target: Optional[str] = None

    @property
    def is_stop(self) -> bool:
        return self.target is None

    def to_dict(self) -> dict:
        return {"type": "stop"} if self.is_stop else {"type": "move_to", "target": self.target}

    def __str__(self):
        return "Stop" if self.is_stop else f"MoveTo({self.target})"


STOP = Action()


def move_to(target: str) -> Action:
    return Action(target)


@dataclass
class NavState:
    current_viewpoint: str
    active_subgoal: Optional[Subgoal] = None
    # viewpoint id -> last step at which the agent stood there
    last_visit: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.last_visit.setdefault(self.current_viewpoint, 0)

    @property
    def visited(self) -> frozenset:
        return frozenset(self.last_visit)

    def arrive(self, viewpoint: str, t: int) -> None:
        self.current_viewpoint = viewpoint
        self.last_visit[viewpoint] = t


Neighbor = Tuple[str, Vec3]


def _argmin(neighbors: Sequence[Neighbor], key):
    return min(neighbors, key=lambda nb: (key(nb), nb[0]))[0]


def select_action(graph: PerceivedGraph, state: NavState, neighbors: Sequence[Neighbor]) -> Action:
    """Reactive policy for the active subgoal.

    ``neighbors`` lists (viewpoint id, position relative to the agent) for
    every viewpoint adjacent to the current one.  Ties go to the lowest id.
    """
    if not neighbors:
        raise DeadEnd(f"viewpoint {state.current_viewpoint} has no neighbors")
    sub = state.active_subgoal
    edge_node = graph.node(sub.target) if sub is not None else None

    if edge_node is None:
        unvisited = [nb for nb in neighbors if nb[0] not in state.last_visit]
        if unvisited:
            return move_to(_argmin(unvisited, lambda nb: math.dist((0.0, 0.0, 0.0), nb[1])))
        return move_to(_argmin(neighbors, lambda nb: state.last_visit[nb[0]]))

    target = edge_node.position
    if sub.skill is Skill.APPROACH:
        return move_to(_argmin(neighbors, lambda nb: math.dist(nb[1], target)))
    if sub.skill is Skill.THROUGH:
        norm = math.hypot(*target)
        if norm == 0.0:
            return move_to(_argmin(neighbors, lambda nb: -math.hypot(*nb[1])))
        unit = tuple(c / norm for c in target)
        return move_to(_argmin(neighbors, lambda nb: -sum(a * b for a, b in zip(nb[1], unit))))
    sign = 1.0 if sub.skill is Skill.GO_UP else -1.0
    return move_to(_argmin(neighbors, lambda nb: (-sign * nb[1][2], math.dist(nb[1], target))))


def subgoal_reached(graph: PerceivedGraph, subgoal: Subgoal, d_sub: float = 1.5) -> bool:
    edge = graph.edge(subgoal.target)
    return edge is not None and edge.distance <= d_sub
