"""Deterministic topological scene simulator and its JSON file formats."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, List, Mapping, Sequence, Tuple

import networkx as nx

from .errors import IllegalAction, SceneError, SchemaError
from .graphs import Vec3, normalize_label
from .navigator import Action
from .planner import Skill

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RouteStep:
    """One annotated stop on an oracle route: target object, skill and the labels around it."""

    object: str
    skill: Skill
    neighborhood: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"object": self.object, "skill": self.skill.value, "neighborhood": list(self.neighborhood)}


@dataclass(frozen=True, eq=False)
class Scene:
    id: str
    viewpoints: Mapping[str, Vec3]
    edges: FrozenSet[Tuple[str, str]]
    objects: Tuple[Tuple[str, Vec3], ...] = ()
    routes: Mapping[str, Tuple[RouteStep, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for a, b in self.edges:
            if a not in self.viewpoints or b not in self.viewpoints:
                raise SchemaError(f"scene {self.id}: edge ({a}, {b}) names an unknown viewpoint")
            if a == b:
                raise SchemaError(f"scene {self.id}: self-loop at {a}")
        if not self.viewpoints:
            raise SchemaError(f"scene {self.id}: no viewpoints")
        if not nx.is_connected(self.graph):
            raise SchemaError(f"scene {self.id}: viewpoint graph is not connected")

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.viewpoints))
        for a, b in sorted(self.edges):
            g.add_edge(a, b, weight=math.dist(self.viewpoints[a], self.viewpoints[b]))
        return g

    def neighbors(self, viewpoint: str) -> List[str]:
        self._require(viewpoint)
        return sorted(self.graph.neighbors(viewpoint))

    def relative_neighbors(self, viewpoint: str):
        here = self.viewpoints[viewpoint]
        return [(v, _sub(self.viewpoints[v], here)) for v in self.neighbors(viewpoint)]

    def weight(self, a: str, b: str) -> float:
        return self.graph.edges[a, b]["weight"]

    def _require(self, viewpoint: str) -> None:
        if viewpoint not in self.viewpoints:
            raise SceneError(f"scene {self.id}: unknown viewpoint {viewpoint!r}")


def _sub(a: Sequence[float], b: Sequence[float]) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


@dataclass(frozen=True)
class Episode:
    id: str
    scene_id: str
    instruction: str
    start_viewpoint: str
    goal_object: str
    goal_position: Vec3
    gold_path: Tuple[str, ...]

    def validate(self, scene: Scene) -> None:
        if not self.gold_path or self.gold_path[0] != self.start_viewpoint:
            raise SchemaError(f"episode {self.id}: gold_path must start at start_viewpoint")
        for a, b in zip(self.gold_path, self.gold_path[1:]):
            if not scene.graph.has_edge(a, b):
                raise SchemaError(f"episode {self.id}: gold_path step {a}->{b} is not an edge")


def observe(scene: Scene, viewpoint: str, r_sense: float = 5.0) -> List[Tuple[str, Vec3]]:
    """Objects within ``r_sense`` of ``viewpoint``, relative to it, ordered by (distance, label)."""
    scene._require(viewpoint)
    here = scene.viewpoints[viewpoint]
    seen = []
    for label, pos in scene.objects:
        rel = _sub(pos, here)
        d = math.dist((0.0, 0.0, 0.0), rel)
        if d <= r_sense:
            seen.append((d, label, rel))
    seen.sort(key=lambda x: (x[0], x[1], x[2]))
    return [(label, rel) for _, label, rel in seen]


def step(scene: Scene, current: str, action: Action) -> str:
    scene._require(current)
    if action.is_stop:
        return current
    if not scene.graph.has_edge(current, action.target):
        raise IllegalAction(f"{action.target!r} is not adjacent to {current!r}")
    return action.target


def goal_viewpoints(scene: Scene, to_position: Sequence[float], d_stop: float) -> List[str]:
    return [v for v, p in sorted(scene.viewpoints.items()) if math.dist(p, to_position) <= d_stop]


def shortest_path_length(scene: Scene, start: str, to_position: Sequence[float], d_stop: float = 3.0) -> float:
    """Graph distance from ``start`` to the nearest viewpoint within ``d_stop`` of the goal.

    The length is summed forward along the optimal path, in the same order a
    trajectory length is, so an agent that walks that path gets TL == length
    bit for bit.
    """
    scene._require(start)
    targets = goal_viewpoints(scene, to_position, d_stop)
    if not targets:
        raise SceneError(f"scene {scene.id}: no viewpoint within {d_stop} m of {tuple(to_position)}")
    _, path = nx.multi_source_dijkstra(scene.graph, set(targets), target=start)
    return float(path_length(scene, path[::-1]))


def path_length(scene: Scene, path: Sequence[str]) -> float:
    return sum(scene.weight(a, b) for a, b in zip(path, path[1:]))


# --- file formats ------------------------------------------------------------

def _fields(d, required, optional, where):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise SchemaError(f"{where}: missing field(s) {missing}")


def _vec(v, where) -> Vec3:
    if not (isinstance(v, list) and len(v) == 3 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        raise SchemaError(f"{where}: expected [x, y, z] numbers, got {v!r}")
    out = tuple(float(c) for c in v)
    if not all(math.isfinite(c) for c in out):
        raise SchemaError(f"{where}: non-finite coordinate")
    return out


def _version(d, where):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{where}: schema_version {d.get('schema_version')!r} != {SCHEMA_VERSION}")


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError(f"{path}: file not found") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def scene_from_dict(d: dict, where: str = "scene") -> Scene:
    _fields(d, ["schema_version", "id", "viewpoints", "edges"], ["objects", "routes"], where)
    _version(d, where)
    if not isinstance(d["viewpoints"], dict):
        raise SchemaError(f"{where}.viewpoints: expected an object")
    vps = {str(k): _vec(v, f"{where}.viewpoints.{k}") for k, v in d["viewpoints"].items()}
    edges = set()
    for k, e in enumerate(d["edges"]):
        if not (isinstance(e, list) and len(e) == 2):
            raise SchemaError(f"{where}.edges[{k}]: expected [a, b]")
        a, b = sorted(map(str, e))
        edges.add((a, b))
    objects = []
    for k, o in enumerate(d.get("objects", [])):
        _fields(o, ["label", "position"], [], f"{where}.objects[{k}]")
        objects.append((normalize_label(o["label"]), _vec(o["position"], f"{where}.objects[{k}].position")))
    routes = {}
    for ep_id, steps in d.get("routes", {}).items():
        parsed = []
        for k, s in enumerate(steps):
            w = f"{where}.routes.{ep_id}[{k}]"
            _fields(s, ["object", "skill"], ["neighborhood"], w)
            try:
                skill = Skill.parse(s["skill"])
            except ValueError as exc:
                raise SchemaError(f"{w}.skill: {exc}") from None
            parsed.append(RouteStep(normalize_label(s["object"]), skill,
                                    tuple(normalize_label(x) for x in s.get("neighborhood", []))))
        routes[str(ep_id)] = tuple(parsed)
    return Scene(str(d["id"]), vps, frozenset(edges), tuple(objects), routes)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": scene.id,
        "viewpoints": {k: list(v) for k, v in sorted(scene.viewpoints.items())},
        "edges": [list(e) for e in sorted(scene.edges)],
        "objects": [{"label": l, "position": list(p)} for l, p in scene.objects],
        "routes": {k: [s.to_dict() for s in v] for k, v in sorted(scene.routes.items())},
    }


def episode_from_dict(d: dict, where: str = "episode") -> Episode:
    _fields(d, ["id", "scene_id", "instruction", "start_viewpoint", "goal_object", "goal_position", "gold_path"], [], where)
    return Episode(
        str(d["id"]), str(d["scene_id"]), str(d["instruction"]), str(d["start_viewpoint"]),
        normalize_label(d["goal_object"]), _vec(d["goal_position"], f"{where}.goal_position"),
        tuple(str(v) for v in d["gold_path"]),
    )


def episode_to_dict(ep: Episode) -> dict:
    return {
        "id": ep.id,
        "scene_id": ep.scene_id,
        "instruction": ep.instruction,
        "start_viewpoint": ep.start_viewpoint,
        "goal_object": ep.goal_object,
        "goal_position": list(ep.goal_position),
        "gold_path": list(ep.gold_path),
    }


def load_scene(path) -> Scene:
    return scene_from_dict(_read_json(path), str(path))


def load_episodes(path) -> List[Episode]:
    d = _read_json(path)
    _fields(d, ["schema_version", "episodes"], [], str(path))
    _version(d, str(path))
    return [episode_from_dict(e, f"{path}.episodes[{k}]") for k, e in enumerate(d["episodes"])]


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def save_scene(scene: Scene, path) -> None:
    dump_json(scene_to_dict(scene), path)


def save_episodes(episodes: Sequence[Episode], path) -> None:
    dump_json({"schema_version": SCHEMA_VERSION, "episodes": [episode_to_dict(e) for e in episodes]}, path)


def validate_suite(scenes: Mapping[str, Scene], episodes: Sequence[Episode]) -> None:
    for ep in episodes:
        if ep.scene_id not in scenes:
            raise SchemaError(f"episode {ep.id}: unknown scene {ep.scene_id!r}")
        ep.validate(scenes[ep.scene_id])
