"""Seeded procedural scenes: jittered grids with deleted edges and labeled objects.

Landmarks (colour + noun, unique within a scene) mark viewpoints along the
routes; clutter labels may repeat.  Each episode's oracle route walks the
landmarks on its gold path, and each route step carries a slightly noisy
neighborhood so the imagined graphs never match perception exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import networkx as nx
import numpy as np

from .errors import SceneError
from .planner import Skill
from .sim import Episode, RouteStep, Scene

COLOURS = ("red", "blue", "green", "white", "black", "wooden", "grey", "yellow", "striped", "glass")
NOUNS = ("sofa", "door", "fridge", "piano", "bathtub", "fireplace", "bookshelf", "armchair",
         "doorway", "wardrobe", "painting", "cabinet", "bed", "desk", "mirror", "archway")
CLUTTER = ("chair", "lamp", "plant", "table", "rug", "vase", "stool", "bin", "clock", "towel", "pillow", "box")
PASSAGES = ("door", "doorway", "archway")


@dataclass(frozen=True)
class GenParams:
    rows: int = 4
    cols: int = 5
    spacing: float = 3.0
    jitter: float = 0.3
    deletion_prob: float = 0.2
    landmark_prob: float = 0.7
    clutter_per_viewpoint: float = 1.0
    neighborhood_radius: float = 5.0
    neighborhood_drop: float = 0.3
    neighborhood_extra: float = 0.3
    min_hops: int = 4
    episodes_per_scene: int = 5
    max_attempts: int = 50

    def validate(self):
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise ValueError("grid needs at least two viewpoints")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if not 0.0 <= self.deletion_prob < 1.0:
            raise ValueError("deletion_prob must be in [0, 1)")
        if self.rows * self.cols > len(COLOURS) * len(NOUNS):
            raise ValueError("grid too large for the landmark vocabulary")
        if self.episodes_per_scene < 1:
            raise ValueError("episodes_per_scene must be positive")


def _r(x: float) -> float:
    return round(float(x), 3)


def _grid(rng, p: GenParams):
    vps = {}
    for r in range(p.rows):
        for c in range(p.cols):
            jx, jy = rng.uniform(-p.jitter, p.jitter, size=2)
            vps[f"v{r:02d}{c:02d}"] = (_r(c * p.spacing + jx), _r(r * p.spacing + jy), 0.0)
    full = []
    for r in range(p.rows):
        for c in range(p.cols):
            if c + 1 < p.cols:
                full.append((f"v{r:02d}{c:02d}", f"v{r:02d}{c + 1:02d}"))
            if r + 1 < p.rows:
                full.append((f"v{r:02d}{c:02d}", f"v{r + 1:02d}{c:02d}"))
    for _ in range(p.max_attempts):
        keep = [e for e in full if rng.random() >= p.deletion_prob]
        g = nx.Graph(keep)
        g.add_nodes_from(vps)
        if nx.is_connected(g):
            return vps, frozenset(tuple(sorted(e)) for e in keep)
    raise SceneError(f"no connected layout after {p.max_attempts} attempts (deletion_prob={p.deletion_prob})")


def _offset(rng, radius: float, z: float):
    ang = rng.uniform(-math.pi, math.pi)
    rad = rng.uniform(0.2, radius)
    return rad * math.cos(ang), rad * math.sin(ang), z


def generate_scene(rng, scene_id: str, p: GenParams) -> Tuple[Scene, List[Episode]]:
    vps, edges = _grid(rng, p)
    ids = sorted(vps)
    names = [f"{c} {n}" for c in COLOURS for n in NOUNS]
    order = rng.permutation(len(names))
    landmarks = {}
    objects = []
    k = 0
    for v in ids:
        x, y, z = vps[v]
        if rng.random() < p.landmark_prob:
            label = names[order[k]]
            k += 1
            dx, dy, dz = _offset(rng, 0.8, 0.5)
            landmarks[v] = label
            objects.append((label, (_r(x + dx), _r(y + dy), _r(z + dz))))
        for _ in range(rng.poisson(p.clutter_per_viewpoint)):
            label = CLUTTER[rng.integers(len(CLUTTER))]
            dx, dy, dz = _offset(rng, 1.2, 0.4)
            objects.append((label, (_r(x + dx), _r(y + dy), _r(z + dz))))

    graph = nx.Graph()
    for a, b in sorted(edges):
        graph.add_edge(a, b, weight=math.dist(vps[a], vps[b]))
    hops = dict(nx.all_pairs_shortest_path_length(graph))
    positions = dict(objects)
    all_labels = sorted({l for l, _ in objects})

    episodes, routes = [], {}
    goal_candidates = sorted(landmarks)
    for e in range(p.episodes_per_scene):
        ep_id = f"{scene_id}_e{e}"
        for _ in range(p.max_attempts):
            goal_vp = goal_candidates[rng.integers(len(goal_candidates))]
            start = ids[rng.integers(len(ids))]
            if hops[start][goal_vp] >= p.min_hops:
                break
        else:
            raise SceneError(f"{scene_id}: no start/goal pair at least {p.min_hops} hops apart")
        gold = nx.shortest_path(graph, start, goal_vp, weight="weight")
        goal_label = landmarks[goal_vp]
        steps = []
        for v in gold[1:]:
            if v not in landmarks:
                continue
            label = landmarks[v]
            noun = label.split()[-1]
            skill = Skill.THROUGH if noun in PASSAGES and v != goal_vp else Skill.APPROACH
            steps.append(RouteStep(label, skill, _neighborhood(rng, label, objects, positions, all_labels, p)))
        routes[ep_id] = tuple(steps)
        waypoints = [s.object for s in steps[:-1]]
        instruction = _instruction(waypoints, steps, goal_label)
        episodes.append(Episode(ep_id, scene_id, instruction, start, goal_label, positions[goal_label], tuple(gold)))
    scene = Scene(scene_id, vps, edges, tuple(objects), routes)
    return scene, episodes


def _neighborhood(rng, label, objects, positions, all_labels, p: GenParams):
    here = positions[label]
    near = sorted({l for l, pos in objects if l != label and math.dist(pos, here) <= p.neighborhood_radius})
    kept = [l for l in near if rng.random() >= p.neighborhood_drop]
    if rng.random() < p.neighborhood_extra:
        extra = [l for l in all_labels if l not in near and l != label]
        if extra:
            kept.append(extra[rng.integers(len(extra))])
    return tuple(sorted(kept))


def _instruction(waypoints, steps, goal_label) -> str:
    parts = []
    for s in steps[:-1]:
        verb = "go through" if s.skill is Skill.THROUGH else "walk past"
        parts.append(f"{verb} the {s.object}")
    tail = f"stop at the {goal_label}"
    if not parts:
        return tail.capitalize() + "."
    return (", then ".join(parts) + f" and {tail}.").capitalize()


def generate_suite(seed: int, count: int, params: GenParams = GenParams()):
    """``count`` scenes with their episodes; identical seeds give identical suites."""
    params.validate()
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    return [generate_scene(rng, f"s{seed}_{k:03d}", params) for k in range(count)]
