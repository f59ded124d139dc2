"""Episode loop with confidence-gated replanning, and the benchmark metrics.

Per step: perceive, file the active subgoal's imagined graph, score the
alignment, replan if the confidence is at or below ``tau``, then let the
fast navigator act.  The first plan is made before the loop, unconditionally.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import bridge
from .errors import ConfigError, EmptyBatch, NavError
from .graphs import GraphHistory, ImaginedGraph, PerceivedGraph, append_history, build_perceived_graph
from .navigator import STOP, Action, NavState, select_action, subgoal_reached
from .planner import CostLedger, OracleBackend, PlanContext, PlannerBackend, Skill, SlowPlanner, Subgoal
from .sim import Episode, Scene, observe, shortest_path_length, step

logger = logging.getLogger(__name__)

DEFAULT_TAUS = (1.0, 0.95, 0.85, 0.6, 0.4)


@dataclass(frozen=True)
class RunConfig:
    tau: float = 0.85
    d_stop: float = 3.0
    d_sub: float = 1.5
    horizon: int = 3
    t_max: int = 30
    r_sense: float = 5.0
    lam: float = 4.0
    bound_form: str = "literal"
    n_m_mode: str = "objects"
    window: Optional[int] = None
    seed: int = 0
    max_retries: int = 2
    # synthetic perception cost per step
    v_tok_per_step: int = 0
    v_time_per_step: float = 0.1
    # synthetic oracle planner cost per backend call
    oracle_prompt_tokens: int = 0
    oracle_completion_tokens: int = 0
    oracle_seconds: float = 0.0

    def __post_init__(self):
        problems = []
        if not (isinstance(self.tau, (int, float)) and 0.0 <= self.tau <= 1.0):
            problems.append(f"tau must be in [0, 1], got {self.tau}")
        for name in ("d_stop", "d_sub", "r_sense", "lam"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("horizon", "t_max"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.window is not None and self.window < 1:
            problems.append("window must be >= 1 or unset")
        if self.bound_form not in bridge.BOUND_FORMS:
            problems.append(f"bound_form must be one of {bridge.BOUND_FORMS}")
        if self.n_m_mode not in bridge.NM_MODES:
            problems.append(f"n_m_mode must be one of {bridge.NM_MODES}")
        if self.max_retries < 0:
            problems.append("max_retries must be >= 0")
        for name in ("v_tok_per_step", "v_time_per_step", "oracle_prompt_tokens",
                     "oracle_completion_tokens", "oracle_seconds"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if problems:
            raise ConfigError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StepRecord:
    t: int
    viewpoint: str
    perceived: dict
    active_subgoal: Optional[dict]
    stats: bridge.AlignmentStats
    triggered: bool
    action: Action
    position: Tuple[float, float, float]
    d_l_tok: int
    d_v_tok: int
    d_l_time: float
    d_v_time: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "viewpoint": self.viewpoint,
            "perceived": self.perceived,
            "active_subgoal": self.active_subgoal,
            "stats": self.stats.to_dict(),
            "triggered": self.triggered,
            "action": self.action.to_dict(),
            "position": list(self.position),
            "delta": {"l_tok": self.d_l_tok, "v_tok": self.d_v_tok,
                      "l_time": self.d_l_time, "v_time": self.d_v_time},
        }


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    scene_id: str
    success: bool
    oracle_success: bool
    ne: float
    tl: float
    spl_term: float
    shortest_path: Optional[float]
    ledger: CostLedger
    u_tok: float
    t_time: float
    steps: Tuple[StepRecord, ...]
    trajectory: Tuple[str, ...]
    goal: Optional[str] = None
    error: Optional[str] = None

    @property
    def trigger_count(self) -> int:
        return sum(s.triggered for s in self.steps)

    def row(self) -> dict:
        """Flat per-episode report row."""
        return {
            "episode_id": self.episode_id,
            "scene_id": self.scene_id,
            "success": self.success,
            "oracle_success": self.oracle_success,
            "NE": self.ne,
            "TL": self.tl,
            "SPL": self.spl_term,
            "L-Tok": self.ledger.l_tok,
            "V-Tok": self.ledger.v_tok,
            "U-Tok": self.u_tok,
            "L-Time": self.ledger.l_time,
            "V-Time": self.ledger.v_time,
            "T-Time": self.t_time,
            "calls": self.ledger.call_count,
            "triggers": self.trigger_count,
            "steps": len(self.steps),
            "error": self.error or "",
        }


def oracle_factory(config: RunConfig) -> Callable[[Scene, Episode], PlannerBackend]:
    def make(scene: Scene, episode: Episode) -> PlannerBackend:
        route = scene.routes.get(episode.id)
        if not route:
            raise NavError(f"scene {scene.id} has no oracle route for episode {episode.id}")
        return OracleBackend(route, episode.goal_object, config.oracle_prompt_tokens,
                             config.oracle_completion_tokens, config.oracle_seconds)
    return make


Gate = Callable[[float], bool]


class _Episode:
    """Mutable state of one running episode."""

    def __init__(self, scene: Scene, episode: Episode, config: RunConfig, backend: PlannerBackend, gate: Gate):
        self.scene, self.episode, self.cfg, self.gate = scene, episode, config, gate
        self.ledger = CostLedger()
        self.planner = SlowPlanner(backend, self.ledger, config.max_retries)
        self.state = NavState(episode.start_viewpoint)
        self.trajectory = [episode.start_viewpoint]
        self.records: List[StepRecord] = []
        self.history = GraphHistory()
        self.H: List[str] = []
        self.reached: List[str] = []
        self.queue: List[Subgoal] = []
        self.plan_serial = 0
        self.filed = None
        self.goal: Optional[str] = None

    def replan(self, graph: PerceivedGraph) -> None:
        self.H.extend(self.reached)
        self.reached.clear()
        chain = self.planner.plan(PlanContext(self.episode.instruction, tuple(self.H), graph), self.cfg.horizon)
        self.queue = list(chain.subgoals)
        self.plan_serial += 1

    def active(self) -> Tuple[object, Subgoal]:
        if self.queue:
            head = self.queue[0]
            return (self.plan_serial, head.imagined.subgoal_index), head
        return ("fallback",), Subgoal(self.goal, Skill.APPROACH, ImaginedGraph.from_labels(-1, [self.goal]))

    def file_active(self, t: int) -> None:
        key, sub = self.active()
        if key == self.filed:
            return
        self.history = append_history(self.history.discard_imagined_from(t), sub.imagined.at(t))
        self.filed = key

    def run(self) -> None:
        cfg, scene = self.cfg, self.scene
        self.goal = self.planner.extract_goal(self.episode.instruction)
        self.replan(PerceivedGraph(0))
        for t in range(1, cfg.t_max + 1):
            before = self.ledger.snapshot()
            here = self.state.current_viewpoint
            graph = build_perceived_graph(observe(scene, here, cfg.r_sense), t)
            self.ledger.charge_vision(cfg.v_tok_per_step, cfg.v_time_per_step)
            self.history = append_history(self.history, graph)
            self.file_active(t)

            stats = bridge.confidence_or_zero(self.history, n_m_mode=cfg.n_m_mode,
                                              bound_form=cfg.bound_form, window=cfg.window)
            triggered = bool(self.gate(stats.confidence))
            if triggered:
                self.replan(graph)
                self.file_active(t)

            goal_edge = graph.edge(self.goal)
            if goal_edge is not None and goal_edge.distance <= cfg.d_stop:
                action, sub = STOP, None
            else:
                while self.queue and subgoal_reached(graph, self.queue[0], cfg.d_sub):
                    self.reached.append(self.queue.pop(0).target)
                _, sub = self.active()
                self.state.active_subgoal = sub
                action = select_action(graph, self.state, scene.relative_neighbors(here))
            nxt = step(scene, here, action)
            self.records.append(StepRecord(
                t, here, graph.summary(), None if sub is None else sub.to_dict(), stats, triggered, action,
                tuple(scene.viewpoints[here]),
                self.ledger.l_tok - before.l_tok, self.ledger.v_tok - before.v_tok,
                self.ledger.l_time - before.l_time, self.ledger.v_time - before.v_time,
            ))
            if action.is_stop:
                return
            self.state.arrive(nxt, t)
            self.trajectory.append(nxt)


def run_episode(scene: Scene, episode: Episode, config: RunConfig, backend: PlannerBackend,
                gate: Optional[Gate] = None) -> EpisodeResult:
    """Run one episode; engine errors mark it failed instead of propagating."""
    if gate is None:
        gate = lambda c: bridge.should_trigger(c, config.tau)  # noqa: E731
    ep = _Episode(scene, episode, config, backend, gate)
    error = None
    ell = None
    try:
        ell = shortest_path_length(scene, episode.start_viewpoint, episode.goal_position, config.d_stop)
        ep.run()
    except NavError as exc:
        error = f"{exc.tag}: {exc}"
        logger.info("episode %s failed: %s", episode.id, error)
    return _result(ep, ell, error)


def _result(ep: _Episode, ell: Optional[float], error: Optional[str]) -> EpisodeResult:
    scene, episode, cfg = ep.scene, ep.episode, ep.cfg
    goal = episode.goal_position
    final = scene.viewpoints[ep.trajectory[-1]]
    ne = math.dist(final, goal)
    tl = sum(scene.weight(a, b) for a, b in zip(ep.trajectory, ep.trajectory[1:]))
    success = error is None and ne <= cfg.d_stop
    oracle_success = any(math.dist(scene.viewpoints[v], goal) <= cfg.d_stop for v in ep.trajectory)
    if not success or ell is None:
        spl = 0.0
    elif ell == 0.0:
        spl = 1.0
    else:
        spl = ell / max(tl, ell)
    ledger = ep.ledger.snapshot()
    return EpisodeResult(
        episode.id, scene.id, success, oracle_success, ne, tl, spl, ell, ledger,
        ledger.l_tok + cfg.lam * ledger.v_tok, ledger.l_time + ledger.v_time,
        tuple(ep.records), tuple(ep.trajectory), ep.goal, error,
    )


def always_replan(_confidence: float) -> bool:
    """Gate of the every-step-replanning ablation."""
    return True


def run_batch(pairs: Sequence[Tuple[Scene, Episode]], config: RunConfig,
              backend_factory: Optional[Callable[[Scene, Episode], PlannerBackend]] = None,
              jobs: int = 1, gate: Optional[Gate] = None) -> List[EpisodeResult]:
    """Run every (scene, episode) pair; results come back in input order."""
    factory = backend_factory or oracle_factory(config)

    def one(pair):
        scene, episode = pair
        try:
            backend = factory(scene, episode)
        except NavError as exc:
            ep = _Episode(scene, episode, config, None, gate or (lambda c: True))
            return _result(ep, None, f"{exc.tag}: {exc}")
        return run_episode(scene, episode, config, backend, gate)

    if jobs <= 1:
        return [one(p) for p in pairs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, pairs))


AGG_COLUMNS = ("SR", "OSR", "SPL", "NE", "TL", "L-Tok", "V-Tok", "U-Tok", "L-Time", "V-Time", "T-Time")
_ROW_SOURCE = {"SR": "success", "OSR": "oracle_success"}


def aggregate_rows(rows: Sequence[dict]) -> Dict[str, float]:
    """Mean of every metric column over per-episode rows."""
    if not rows:
        raise EmptyBatch("no episodes to aggregate")
    out = {}
    for col in AGG_COLUMNS + ("calls", "triggers", "steps"):
        src = _ROW_SOURCE.get(col, col)
        out[col] = sum(float(r[src]) for r in rows) / len(rows)
    return out


@dataclass(frozen=True)
class AggregateReport:
    rows: Tuple[dict, ...]
    aggregate: Dict[str, float]

    def __getitem__(self, key):
        return self.aggregate[key]


def compute_metrics(results: Sequence[EpisodeResult], gold: Optional[Sequence[Episode]] = None) -> AggregateReport:
    if not results:
        raise EmptyBatch("empty result list")
    if gold is not None and sorted(e.id for e in gold) != sorted(r.episode_id for r in results):
        raise ValueError("results and gold episodes do not correspond one to one")
    rows = tuple(r.row() for r in results)
    return AggregateReport(rows, aggregate_rows(rows))


@dataclass(frozen=True)
class SweepRow:
    tau: float
    report: AggregateReport
    results: Tuple[EpisodeResult, ...]


def dedupe_taus(taus: Sequence[float]) -> List[float]:
    out = []
    for tau in taus:
        if tau in out:
            logger.warning("duplicate tau %s ignored", tau)
            continue
        out.append(tau)
    return out


def sweep_tau(pairs, config: RunConfig, tau_list: Sequence[float] = DEFAULT_TAUS,
              backend_factory=None, jobs: int = 1) -> List[SweepRow]:
    """Run the batch once per threshold."""
    taus = dedupe_taus(tau_list)
    if not taus:
        raise EmptyBatch("empty tau list")
    rows = []
    for tau in taus:
        cfg = replace(config, tau=float(tau))
        results = run_batch(pairs, cfg, backend_factory, jobs)
        rows.append(SweepRow(float(tau), compute_metrics(results), tuple(results)))
    return rows
