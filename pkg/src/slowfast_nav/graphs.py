"""Attributed object graphs shared by perception, the planner and the bridge.

A perceived graph is a star: one agent node at the centre and one edge per
observed object, carrying the distance and bearing to it.  Imagined graphs
come from the planner and are bags of expected object labels with optional
positions.  Object identity across graphs is the normalized label.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Tuple, Union

from .errors import EmptyLabel, OutOfOrder

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]


def normalize_label(raw: str) -> str:
    """Lowercase, trim and collapse internal whitespace.

    >>> normalize_label("  Coffee   Table ")
    'coffee table'
    """
    label = " ".join(str(raw).split()).lower()
    if not label:
        raise EmptyLabel(f"label {raw!r} is empty after normalization")
    return label


def bearing_of(position: Sequence[float]) -> float:
    """Bearing in the agent's horizontal plane (x forward, y left), in [-pi, pi)."""
    b = math.atan2(position[1], position[0])
    if b >= math.pi:
        b -= 2 * math.pi
    return b


@dataclass(frozen=True)
class ObjectNode:
    label: str
    position: Optional[Vec3] = None
    last_seen: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "label", normalize_label(self.label))
        if self.position is not None:
            object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        if self.last_seen is not None and self.last_seen < 0:
            raise ValueError("last_seen must be non-negative")


@dataclass(frozen=True)
class StarEdge:
    distance: float
    bearing: float

    @classmethod
    def from_position(cls, position: Sequence[float]) -> "StarEdge":
        return cls(math.dist((0.0, 0.0, 0.0), position), bearing_of(position))


@dataclass(frozen=True)
class PerceivedGraph:
    """Star graph observed at one timestep.

    ``objects`` holds (node, edge) pairs sorted by (distance, label); the agent
    node is implicit and is the only node every edge touches.
    """

    timestep: int
    objects: Tuple[Tuple[ObjectNode, StarEdge], ...] = ()
    dropped_duplicates: Tuple[str, ...] = ()

    @property
    def agent_node(self) -> str:
        return f"agent@{self.timestep}"

    @property
    def labels(self) -> frozenset:
        return frozenset(node.label for node, _ in self.objects)

    def edge(self, label: str) -> Optional[StarEdge]:
        for node, edge in self.objects:
            if node.label == label:
                return edge
        return None

    def node(self, label: str) -> Optional[ObjectNode]:
        for node, _ in self.objects:
            if node.label == label:
                return node
        return None

    def summary(self) -> dict:
        return {
            "timestep": self.timestep,
            "objects": [
                {"label": n.label, "distance": e.distance, "bearing": e.bearing}
                for n, e in self.objects
            ],
            "dropped_duplicates": list(self.dropped_duplicates),
        }


@dataclass(frozen=True)
class ImaginedGraph:
    """Planner prior for the scene around one subgoal.

    ``timestep`` stays ``None`` until the subgoal becomes active and the graph
    is filed into a :class:`GraphHistory`.
    """

    subgoal_index: int
    expected_objects: Tuple[ObjectNode, ...]
    timestep: Optional[int] = None

    @property
    def labels(self) -> frozenset:
        return frozenset(o.label for o in self.expected_objects)

    def at(self, timestep: int) -> "ImaginedGraph":
        return replace(self, timestep=timestep)

    @classmethod
    def from_labels(cls, subgoal_index: int, labels: Iterable[str]) -> "ImaginedGraph":
        seen = {}
        for raw in labels:
            label = normalize_label(raw)
            seen.setdefault(label, ObjectNode(label))
        return cls(subgoal_index, tuple(seen.values()))


def build_perceived_graph(observation: Iterable[Tuple[str, Sequence[float]]], t: int) -> PerceivedGraph:
    """Turn a detector-style observation into a star graph at timestep ``t``.

    Duplicate labels within one observation are collapsed to the nearest
    instance; the dropped labels are kept on the graph so the trace shows them.
    """
    best = {}
    dropped = []
    for raw, pos in observation:
        pos = tuple(float(c) for c in pos)
        if len(pos) != 3 or not all(math.isfinite(c) for c in pos):
            raise ValueError(f"position for {raw!r} must be three finite numbers, got {pos}")
        node = ObjectNode(raw, pos, t)
        edge = StarEdge.from_position(pos)
        prev = best.get(node.label)
        if prev is None:
            best[node.label] = (node, edge)
            continue
        dropped.append(node.label)
        if (edge.distance, pos) < (prev[1].distance, prev[0].position):
            best[node.label] = (node, edge)
    if dropped:
        logger.debug("t=%d: collapsed duplicate detections %s", t, sorted(dropped))
    objects = tuple(sorted(best.values(), key=lambda ne: (ne[1].distance, ne[0].label)))
    return PerceivedGraph(t, objects, tuple(sorted(dropped)))


@dataclass(frozen=True)
class GraphHistory:
    perceived: Tuple[PerceivedGraph, ...] = ()
    imagined: Tuple[ImaginedGraph, ...] = ()

    @property
    def last_perceived_t(self) -> Optional[int]:
        return self.perceived[-1].timestep if self.perceived else None

    @property
    def last_imagined_t(self) -> Optional[int]:
        return self.imagined[-1].timestep if self.imagined else None

    def discard_imagined_from(self, t: int) -> "GraphHistory":
        """Drop imagined graphs filed at timestep ``t`` or later."""
        return replace(self, imagined=tuple(g for g in self.imagined if g.timestep < t))

    def window(self, length: Optional[int]) -> "GraphHistory":
        """Keep only the last ``length`` timesteps, counted from the newest entry."""
        if length is None:
            return self
        stamps = [g.timestep for g in self.perceived] + [g.timestep for g in self.imagined]
        if not stamps:
            return self
        lo = max(stamps) - length + 1
        return GraphHistory(
            tuple(g for g in self.perceived if g.timestep >= lo),
            tuple(g for g in self.imagined if g.timestep >= lo),
        )

    def last_seen(self, label: str) -> Optional[int]:
        label = normalize_label(label)
        for g in reversed(self.perceived):
            if label in g.labels:
                return g.timestep
        return None


def append_history(history: GraphHistory, graph: Union[PerceivedGraph, ImaginedGraph]) -> GraphHistory:
    """Return ``history`` extended by ``graph``; timesteps must strictly increase."""
    if isinstance(graph, PerceivedGraph):
        last = history.last_perceived_t
        if last is not None and graph.timestep <= last:
            raise OutOfOrder(f"perceived graph t={graph.timestep} does not follow t={last}")
        return replace(history, perceived=history.perceived + (graph,))
    if isinstance(graph, ImaginedGraph):
        if graph.timestep is None:
            raise OutOfOrder("imagined graph has no activation timestep")
        last = history.last_imagined_t
        if last is not None and graph.timestep <= last:
            raise OutOfOrder(f"imagined graph t={graph.timestep} does not follow t={last}")
        return replace(history, imagined=history.imagined + (graph,))
    raise TypeError(f"cannot file {type(graph).__name__} into a GraphHistory")
