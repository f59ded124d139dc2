"""Slow-fast bridge: graph-alignment confidence between perception and plan.

The perceived and imagined histories are read as two attributed graphs over
the same vertex sets: timesteps play the role of users, object labels the
role of attributes.  Two 2x2 joint-presence tables are estimated from them:

* ``Q`` over (timestep, object) membership pairs,
* ``P`` over (timestep, timestep) pairs, "connected" when both timesteps
  share at least one object.

Matrices are indexed ``[i, j]`` with ``i`` the perceived indicator and ``j``
the imagined indicator, so ``M[1, 0]`` is perceived-only mass.  The
correlation strength ``psi`` of ``Q`` and ``n * p11`` feed an exponential
upper bound on the probability that a wrong alignment scores as well as the
identity, and the confidence is one minus the clamped bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateInput
from .graphs import GraphHistory

BOUND_FORMS = ("literal", "negated_structure")
NM_MODES = ("objects", "timesteps")


def _convention() -> np.ndarray:
    m = np.zeros((2, 2))
    m[0, 0] = 1.0
    return m


def _normalize(counts: np.ndarray) -> Optional[np.ndarray]:
    total = int(counts.sum())
    if total == 0:
        return None
    return counts / total


@dataclass(frozen=True)
class EdgeProbMatrices:
    P: np.ndarray
    Q: np.ndarray
    raw_counts_P: np.ndarray
    raw_counts_Q: np.ndarray

    @property
    def p11(self) -> float:
        return float(self.P[1, 1])

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "Q": self.Q.tolist(),
            "raw_counts_P": self.raw_counts_P.tolist(),
            "raw_counts_Q": self.raw_counts_Q.tolist(),
        }


def _label_sets(graphs) -> dict:
    return {g.timestep: g.labels for g in graphs}


def compute_pq(history: GraphHistory) -> EdgeProbMatrices:
    """Estimate the edge-probability matrices from a perceived/imagined history.

    Raises :class:`DegenerateInput` (carrying the matrices, with the
    all-on-``[0, 0]`` convention for any empty table) when either history is
    empty or a table received no counts.
    """
    seen = _label_sets(history.perceived)
    imag = _label_sets(history.imagined)
    times = sorted(set(seen) | set(imag))
    objects = sorted(set().union(*seen.values(), *imag.values()))
    empty = frozenset()

    q = np.zeros((2, 2), dtype=np.int64)
    for t in times:
        s, g = seen.get(t, empty), imag.get(t, empty)
        for o in objects:
            q[int(o in s), int(o in g)] += 1

    p = np.zeros((2, 2), dtype=np.int64)
    for tm, tn in combinations(times, 2):
        i = not seen.get(tm, empty).isdisjoint(seen.get(tn, empty))
        j = not imag.get(tm, empty).isdisjoint(imag.get(tn, empty))
        p[int(i), int(j)] += 1

    P, Q = _normalize(p), _normalize(q)
    problems = []
    if not history.perceived:
        problems.append("no perceived graphs")
    if not history.imagined:
        problems.append("no imagined graphs")
    if not objects:
        problems.append("no objects")
    if P is None:
        problems.append("no timestep pairs")
    mats = EdgeProbMatrices(
        _convention() if P is None else P,
        _convention() if Q is None else Q,
        p,
        q,
    )
    if problems:
        raise DegenerateInput("; ".join(problems), matrices=mats)
    return mats


def psi(matrix) -> float:
    """Squared difference of the geometric means of the diagonal and anti-diagonal."""
    m = np.asarray(matrix, dtype=float)
    diag = float(m[1, 1] * m[0, 0])
    anti = float(m[1, 0] * m[0, 1])
    # expanded square: exact when one side vanishes
    return max(0.0, diag + anti - 2.0 * math.sqrt(diag * anti))


def ambiguity_bound(n: int, m: int, psi_a: float, p11: float, bound_form: str = "literal") -> Tuple[float, float]:
    """Upper bound on the ambiguous-alignment probability, raw and clamped to 1.

    ``literal`` is ``exp(-2 ln n + 2 m psi_a + 2 n p11)``;
    ``negated_structure`` flips the sign of the structure terms and rescales
    by ``n**2``, i.e. ``exp(-2 m psi_a - 2 n p11)``.
    """
    if n < 1 or m < 1:
        raise DegenerateInput(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if bound_form == "literal":
        try:
            raw = math.exp(2.0 * m * psi_a + 2.0 * n * p11) / (n * n)
        except OverflowError:
            raw = math.inf
    elif bound_form == "negated_structure":
        raw = math.exp(-2.0 * m * psi_a - 2.0 * n * p11)
    else:
        raise ValueError(f"unknown bound_form {bound_form!r}; expected one of {BOUND_FORMS}")
    return raw, min(1.0, raw)


@dataclass(frozen=True)
class AlignmentStats:
    psi_u: float
    psi_a: float
    n: int
    m: int
    p11: float
    ambiguity_bound_raw: Optional[float]
    ambiguity_prob: float
    confidence: float
    matrices: Optional[EdgeProbMatrices] = None
    degenerate: Optional[str] = None

    @classmethod
    def no_evidence(cls, reason: str, n: int = 0, m: int = 0, matrices: Optional[EdgeProbMatrices] = None):
        """Stats for a history the bound cannot be evaluated on; confidence is 0."""
        pu = psi(matrices.P) if matrices is not None else 0.0
        pa = psi(matrices.Q) if matrices is not None else 0.0
        p11 = matrices.p11 if matrices is not None else 0.0
        return cls(pu, pa, n, m, p11, None, 1.0, 0.0, matrices, reason)

    def to_dict(self) -> dict:
        return {
            "psi_u": self.psi_u,
            "psi_a": self.psi_a,
            "n": self.n,
            "m": self.m,
            "p11": self.p11,
            "ambiguity_bound_raw": self.ambiguity_bound_raw,
            "ambiguity_prob": self.ambiguity_prob,
            "confidence": self.confidence,
            "matrices": None if self.matrices is None else self.matrices.to_dict(),
            "degenerate": self.degenerate,
        }


def alignment_sizes(history: GraphHistory, n_m_mode: str = "objects") -> Tuple[int, int]:
    if n_m_mode == "objects":
        n = len(set().union(*(g.labels for g in history.perceived)))
        m = len(set().union(*(g.labels for g in history.imagined)))
    elif n_m_mode == "timesteps":
        n, m = len(history.perceived), len(history.imagined)
    else:
        raise ValueError(f"unknown n_m_mode {n_m_mode!r}; expected one of {NM_MODES}")
    return n, m


def confidence(
    history: GraphHistory,
    n_m_mode: str = "objects",
    bound_form: str = "literal",
    window: Optional[int] = None,
) -> AlignmentStats:
    """Alignment confidence of ``history`` with every intermediate exposed.

    Propagates :class:`DegenerateInput`; callers that need a number should use
    :func:`confidence_or_zero`.
    """
    h = history.window(window)
    mats = compute_pq(h)
    n, m = alignment_sizes(h, n_m_mode)
    pu, pa = psi(mats.P), psi(mats.Q)
    try:
        raw, prob = ambiguity_bound(n, m, pa, mats.p11, bound_form)
    except DegenerateInput as exc:
        exc.matrices = mats
        raise
    return AlignmentStats(pu, pa, n, m, mats.p11, raw, prob, 1.0 - prob, mats)


def confidence_or_zero(history: GraphHistory, **kwargs) -> AlignmentStats:
    """Like :func:`confidence` but maps missing evidence to confidence 0."""
    try:
        return confidence(history, **kwargs)
    except DegenerateInput as exc:
        h = history.window(kwargs.get("window"))
        n, m = alignment_sizes(h, kwargs.get("n_m_mode", "objects"))
        return AlignmentStats.no_evidence(str(exc), n, m, exc.matrices)


def should_trigger(c: float, tau: float) -> bool:
    """True when the slow planner must be consulted (ties trigger)."""
    return c <= tau
