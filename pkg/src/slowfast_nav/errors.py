"""Exception types raised across the navigation engine."""

from __future__ import annotations


class NavError(Exception):
    """Base class for all engine errors."""

    #: short machine-readable tag used in reports for failed episodes
    tag = "error"


class EmptyLabel(NavError, ValueError):
    tag = "empty_label"


class OutOfOrder(NavError, ValueError):
    tag = "out_of_order"


class DegenerateInput(NavError, ValueError):
    """Raised when the alignment statistics have no evidence to work with.

    ``matrices`` carries the convention matrices (all mass on the shared
    non-edge cell) when the failure happened inside the P/Q estimation.
    """

    tag = "degenerate_input"

    def __init__(self, message: str, matrices=None):
        super().__init__(message)
        self.matrices = matrices


class PlannerError(NavError):
    tag = "planner_error"


class GoalParseFailure(PlannerError):
    tag = "goal_parse_failure"


class PolicyParseFailure(PlannerError):
    tag = "policy_parse_failure"


class ChainParseFailure(PlannerError):
    tag = "chain_parse_failure"


class BackendError(PlannerError):
    """Transport or authentication failure talking to a remote planner."""

    tag = "backend_error"


class FixtureMiss(BackendError):
    """A replayed request has no matching recorded response."""

    tag = "fixture_miss"


class ConfigError(NavError, ValueError):
    tag = "config_error"


class SceneError(NavError):
    tag = "scene_error"


class SchemaError(SceneError, ValueError):
    """Malformed scene, episode, fixture, report or trace document."""

    tag = "schema_error"


class IllegalAction(NavError):
    tag = "illegal_action"


class DeadEnd(NavError):
    tag = "dead_end"


class EmptyBatch(NavError, ValueError):
    tag = "empty_batch"
