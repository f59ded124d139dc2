"""Hand-built scenes and small builders shared by the test modules."""

from __future__ import annotations

import itertools
import math

from slowfast_nav.graphs import GraphHistory, ImaginedGraph, append_history, build_perceived_graph
from slowfast_nav.planner import Skill
from slowfast_nav.sim import Episode, RouteStep, Scene


def line_scene():
    """A - B - C, 4 m apart, sofa at C; the route is the gold path."""
    vps = {"A": (0.0, 0.0, 0.0), "B": (4.0, 0.0, 0.0), "C": (8.0, 0.0, 0.0)}
    edges = frozenset({("A", "B"), ("B", "C")})
    objects = (("sofa", (8.0, 0.0, 0.0)),)
    routes = {"line_e0": (RouteStep("sofa", Skill.APPROACH, ()),)}
    scene = Scene("line", vps, edges, objects, routes)
    ep = Episode("line_e0", "line", "Stop at the sofa.", "A", "sofa", (8.0, 0.0, 0.0), ("A", "B", "C"))
    return scene, ep


APARTMENT_INSTRUCTION = "Go through the door, walk down the hallway past the kitchen table and stop at the sofa."


def apartment_scene():
    vps = {
        "a": (0.0, 0.0, 0.0), "b": (4.0, 0.0, 0.0), "c": (8.0, 0.0, 0.0), "d": (12.0, 0.0, 0.0),
        "e": (16.0, 0.0, 0.0), "f": (4.0, 4.0, 0.0), "g": (8.0, 4.0, 0.0),
    }
    edges = frozenset({("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("b", "f"), ("f", "g"), ("c", "g")})
    objects = (
        ("lamp", (0.5, 0.8, 1.2)),
        ("door", (4.5, -0.5, 1.0)),
        ("hallway", (8.5, 0.5, 1.0)),
        ("kitchen table", (8.0, 4.5, 0.5)),
        ("chair", (12.5, -0.8, 0.4)),
        ("sofa", (16.3, 0.4, 0.4)),
        ("plant", (16.0, -1.0, 0.3)),
    )
    route = (
        RouteStep("door", Skill.THROUGH, ("lamp",)),
        RouteStep("hallway", Skill.APPROACH, ("door", "kitchen table")),
        RouteStep("sofa", Skill.APPROACH, ("chair", "plant")),
    )
    routes = {"apt_e0": route, "apt_e1": route}
    scene = Scene("apartment", vps, edges, objects, routes)
    eps = [
        Episode("apt_e0", "apartment", APARTMENT_INSTRUCTION, "a", "sofa", (16.3, 0.4, 0.4), ("a", "b", "c", "d", "e")),
        Episode("apt_e1", "apartment", "Head through the door and find the sofa.", "a", "sofa",
                (16.3, 0.4, 0.4), ("a", "b", "c", "d", "e")),
    ]
    return scene, eps


def history_from_sets(perceived: dict, imagined: dict) -> GraphHistory:
    """History with label sets per timestep; positions are irrelevant to the bridge."""
    h = GraphHistory()
    for t in sorted(perceived):
        obs = [(label, (1.0 + k, 0.0, 0.0)) for k, label in enumerate(sorted(perceived[t]))]
        h = append_history(h, build_perceived_graph(obs, t))
    for t in sorted(imagined):
        h = append_history(h, ImaginedGraph.from_labels(0, sorted(imagined[t])).at(t))
    return h


def naive_counts(perceived: dict, imagined: dict):
    """Independent recount of the joint-presence tables with plain lists.

    Returns ``(p_counts, q_counts)`` as nested lists indexed [perceived][imagined].
    """
    times = []
    for t in list(perceived) + list(imagined):
        if t not in times:
            times.append(t)
    times.sort()
    objects = []
    for sets in (perceived, imagined):
        for labels in sets.values():
            for o in labels:
                if o not in objects:
                    objects.append(o)
    q = [[0, 0], [0, 0]]
    for t in times:
        for o in objects:
            i = 1 if (t in perceived and o in list(perceived[t])) else 0
            j = 1 if (t in imagined and o in list(imagined[t])) else 0
            q[i][j] += 1
    p = [[0, 0], [0, 0]]
    for a in range(len(times)):
        for b in range(a + 1, len(times)):
            ta, tb = times[a], times[b]
            i = 1 if any(o in perceived.get(ta, ()) and o in perceived.get(tb, ()) for o in objects) else 0
            j = 1 if any(o in imagined.get(ta, ()) and o in imagined.get(tb, ()) for o in objects) else 0
            p[i][j] += 1
    return p, q


def random_sets(rng, max_t=6, max_labels=8):
    labels = [f"obj{k}" for k in range(rng.integers(1, max_labels + 1))]

    def side():
        ts = [t for t in range(1, max_t + 1) if rng.random() < 0.6]
        return {t: {o for o in labels if rng.random() < 0.4} for t in ts}

    return side(), side()


def brute_force_shortest(scene: Scene, start: str, goal, d_stop: float) -> float:
    """Minimum over every simple path from ``start`` of the length to a goal viewpoint."""
    targets = {v for v, p in scene.viewpoints.items() if math.dist(p, goal) <= d_stop}
    best = math.inf
    nbrs = {v: [] for v in scene.viewpoints}
    for a, b in scene.edges:
        nbrs[a].append(b)
        nbrs[b].append(a)

    def dfs(v, seen, length):
        nonlocal best
        if v in targets:
            best = min(best, length)
        for w in nbrs[v]:
            if w not in seen:
                dfs(w, seen | {w}, length + math.dist(scene.viewpoints[v], scene.viewpoints[w]))

    dfs(start, {start}, 0.0)
    return best


def random_small_scene(rng, max_vps=8):
    n = int(rng.integers(2, max_vps + 1))
    ids = [f"p{k}" for k in range(n)]
    vps = {v: (float(rng.uniform(0, 20)), float(rng.uniform(0, 20)), 0.0) for v in ids}
    edges = set()
    for k in range(1, n):
        j = int(rng.integers(0, k))
        edges.add(tuple(sorted((ids[j], ids[k]))))
    for a, b in itertools.combinations(ids, 2):
        if rng.random() < 0.25:
            edges.add((a, b))
    return Scene(f"rand{n}", vps, frozenset(edges))
