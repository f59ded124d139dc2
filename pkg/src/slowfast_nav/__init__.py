"""Slow-fast collaborative navigation with confidence-gated replanning."""

from .bridge import (AlignmentStats, EdgeProbMatrices, ambiguity_bound, compute_pq, confidence,
                     confidence_or_zero, psi, should_trigger)
from .graphs import (GraphHistory, ImaginedGraph, ObjectNode, PerceivedGraph, StarEdge, append_history,
                     build_perceived_graph, normalize_label)
from .navigator import STOP, Action, NavState, move_to, select_action, subgoal_reached
from .planner import CostLedger, OracleBackend, PlanContext, Skill, SlowPlanner, Subgoal, SubgoalChain
from .runner import (DEFAULT_TAUS, EpisodeResult, RunConfig, StepRecord, always_replan, compute_metrics,
                     run_batch, run_episode, sweep_tau)
from .sim import Episode, RouteStep, Scene, observe, shortest_path_length, step

__version__ = "0.1.0"
