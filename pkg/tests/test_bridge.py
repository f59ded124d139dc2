import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import history_from_sets, naive_counts
from slowfast_nav.bridge import (
    alignment_sizes,
    ambiguity_bound,
    compute_pq,
    confidence,
    confidence_or_zero,
    psi,
    should_trigger,
)
from slowfast_nav.errors import DegenerateInput
from slowfast_nav.graphs import GraphHistory

WORKED_PERCEIVED = {1: {"chair"}, 2: {"chair", "door"}}
WORKED_IMAGINED = {1: {"chair"}, 2: {"door"}}


def worked_history():
    return history_from_sets(WORKED_PERCEIVED, WORKED_IMAGINED)


def mp_bound(n, m, psi_a, p11):
    mpmath.mp.dps = 50
    return mpmath.exp(-2 * mpmath.log(n) + 2 * m * mpmath.mpf(psi_a) + 2 * n * mpmath.mpf(p11))


# --- joint-presence tables ---------------------------------------------------

def test_worked_example_counts_and_matrices():
    mats = compute_pq(worked_history())
    assert mats.raw_counts_Q.tolist() == [[1, 0], [1, 2]]
    assert mats.Q[0, 0] == 0.25 and mats.Q[0, 1] == 0.0
    assert mats.Q[1, 0] == 0.25 and mats.Q[1, 1] == 0.5
    assert mats.raw_counts_P.tolist() == [[0, 0], [1, 0]]
    assert mats.P[1, 0] == 1.0
    assert mats.P.sum() == 1.0


def test_identical_histories_have_no_off_diagonal_mass():
    sets = {1: {"chair"}, 2: {"chair", "door"}, 3: {"door", "sofa"}}
    mats = compute_pq(history_from_sets(sets, sets))
    assert mats.Q[1, 0] == mats.Q[0, 1] == 0.0
    assert mats.P[1, 0] == mats.P[0, 1] == 0.0


def test_zero_objects_is_degenerate_with_convention():
    with pytest.raises(DegenerateInput) as info:
        compute_pq(history_from_sets({1: set()}, {1: set()}))
    mats = info.value.matrices
    assert mats.Q[0, 0] == 1.0 and mats.Q.sum() == 1.0
    assert mats.P[0, 0] == 1.0


def test_empty_side_is_degenerate():
    with pytest.raises(DegenerateInput):
        compute_pq(history_from_sets({1: {"chair"}, 2: {"chair"}}, {}))
    with pytest.raises(DegenerateInput):
        compute_pq(GraphHistory())


def test_single_timestep_has_no_time_pairs():
    with pytest.raises(DegenerateInput) as info:
        compute_pq(history_from_sets({1: {"chair"}}, {1: {"chair"}}))
    assert info.value.matrices.Q[1, 1] == 1.0
    assert info.value.matrices.P[0, 0] == 1.0


label_sets = st.dictionaries(
    st.integers(1, 6),
    st.frozensets(st.sampled_from([f"obj{k}" for k in range(8)]), max_size=8),
    max_size=6,
)


@settings(max_examples=300, deadline=None)
@given(label_sets, label_sets)
def test_counts_match_naive_recount(perceived, imagined):
    p_naive, q_naive = naive_counts(perceived, imagined)
    h = history_from_sets(perceived, imagined)
    try:
        mats = compute_pq(h)
    except DegenerateInput as exc:
        mats = exc.matrices
    assert mats.raw_counts_Q.tolist() == q_naive
    assert mats.raw_counts_P.tolist() == p_naive


@settings(max_examples=300, deadline=None)
@given(label_sets, label_sets)
def test_swap_transposes_counts(perceived, imagined):
    def mats_of(a, b):
        try:
            return compute_pq(history_from_sets(a, b))
        except DegenerateInput as exc:
            return exc.matrices

    m1, m2 = mats_of(perceived, imagined), mats_of(imagined, perceived)
    assert (m1.raw_counts_Q.T == m2.raw_counts_Q).all()
    assert (m1.raw_counts_P.T == m2.raw_counts_P).all()
    assert psi(m1.Q) == pytest.approx(psi(m2.Q), abs=1e-15)
    assert psi(m1.P) == pytest.approx(psi(m2.P), abs=1e-15)


# --- psi ----------------------------------------------------------------------

@pytest.mark.parametrize("matrix, expected", [
    ([[0.5, 0.0], [0.0, 0.5]], 0.25),
    ([[0.25, 0.25], [0.25, 0.25]], 0.0),
    ([[0.25, 0.0], [0.25, 0.5]], 0.125),
])
def test_psi_examples(matrix, expected):
    assert psi(np.array(matrix)) == expected


def test_psi_of_worked_q_is_exact():
    assert psi(compute_pq(worked_history()).Q) == 0.125


matrices = st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-6).map(
    lambda v: np.array(v).reshape(2, 2) / sum(v))


@given(matrices)
def test_psi_in_unit_interval(m):
    assert 0.0 <= psi(m) <= 1.0


@given(matrices)
def test_psi_transpose_invariant(m):
    assert psi(m) == pytest.approx(psi(m.T), abs=1e-15)


# --- bound --------------------------------------------------------------------

def test_bound_four_three():
    raw, clamped = ambiguity_bound(4, 3, 0.0, 0.0)
    assert raw == pytest.approx(1 / 16, rel=1e-12)
    assert clamped == raw


def test_bound_against_high_precision():
    raw, clamped = ambiguity_bound(10, 2, 0.125, 0.0)
    expected = float(mp_bound(10, 2, 0.125, 0.0))
    assert raw == pytest.approx(expected, rel=1e-12)
    assert raw == pytest.approx(0.016487, abs=1e-6)
    assert clamped == raw


@given(st.integers(1, 1), st.integers(1, 50), st.floats(0, 1), st.floats(0, 1))
def test_bound_n_one_clamps_to_one(n, m, psi_a, p11):
    raw, clamped = ambiguity_bound(n, m, psi_a, p11)
    assert raw >= 1.0 and clamped == 1.0


@pytest.mark.parametrize("n, m", [(0, 3), (3, 0)])
def test_bound_degenerate_sizes(n, m):
    with pytest.raises(DegenerateInput):
        ambiguity_bound(n, m, 0.0, 0.0)


def test_bound_overflow_clamps():
    raw, clamped = ambiguity_bound(10_000, 10_000, 1.0, 1.0)
    assert math.isinf(raw) and clamped == 1.0


def test_negated_structure_form():
    raw, _ = ambiguity_bound(10, 2, 0.125, 0.1, "negated_structure")
    assert raw == pytest.approx(math.exp(-0.5 - 2.0), rel=1e-12)
    with pytest.raises(ValueError):
        ambiguity_bound(2, 2, 0.0, 0.0, "bogus")


@settings(max_examples=200)
@given(st.integers(2, 30), st.integers(1, 30), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5))
def test_literal_bound_is_nondecreasing_in_structure(n, m, psi_a, p11, bump):
    lo, _ = ambiguity_bound(n, m, psi_a, p11)
    hi, _ = ambiguity_bound(n, m, psi_a + bump, p11 + bump)
    assert hi >= lo


@settings(max_examples=200)
@given(st.integers(2, 30), st.integers(1, 30), st.floats(0, 0.5), st.floats(0, 0.5))
def test_literal_bound_strictly_increasing_under_finite_perturbation(n, m, psi_a, p11):
    base, _ = ambiguity_bound(n, m, psi_a, p11)
    assert ambiguity_bound(n, m, psi_a + 0.05, p11)[0] > base
    assert ambiguity_bound(n, m, psi_a, p11 + 0.05)[0] > base


@given(st.integers(1, 200), st.integers(1, 30))
def test_literal_bound_decreasing_in_n_without_structure(n, m):
    assert ambiguity_bound(n + 1, m, 0.0, 0.0)[0] < ambiguity_bound(n, m, 0.0, 0.0)[0]


# --- confidence ---------------------------------------------------------------

def test_confidence_worked_example():
    stats = confidence(worked_history())
    assert (stats.n, stats.m) == (2, 2)
    assert stats.psi_a == 0.125 and stats.p11 == 0.0
    assert stats.ambiguity_bound_raw == pytest.approx(math.exp(-2 * math.log(2) + 0.5), rel=1e-12)
    assert stats.confidence == pytest.approx(0.58782, abs=1e-5)
    assert stats.matrices is not None


def test_single_shared_object_gives_zero_confidence():
    h = history_from_sets({1: {"chair"}}, {1: {"chair"}})
    stats = confidence_or_zero(h)
    assert (stats.n, stats.m) == (1, 1)
    assert stats.confidence == 0.0
    # with a second matching timestep the evidence is complete and n=1 clamps the bound
    h2 = history_from_sets({1: {"chair"}, 2: {"chair"}}, {1: {"chair"}, 2: {"chair"}})
    assert confidence(h2).confidence == 0.0


def test_degenerate_maps_to_zero_at_runner_level():
    h = history_from_sets({1: set()}, {1: set()})
    with pytest.raises(DegenerateInput):
        confidence(h)
    stats = confidence_or_zero(h)
    assert stats.confidence == 0.0
    assert stats.degenerate
    assert stats.matrices.Q[0, 0] == 1.0


def test_alignment_sizes_modes():
    h = worked_history()
    assert alignment_sizes(h, "objects") == (2, 2)
    assert alignment_sizes(h, "timesteps") == (2, 2)
    h3 = history_from_sets({1: {"a", "b", "c"}, 2: {"a"}}, {1: {"a"}})
    assert alignment_sizes(h3, "objects") == (3, 1)
    assert alignment_sizes(h3, "timesteps") == (2, 1)
    with pytest.raises(ValueError):
        alignment_sizes(h3, "bogus")


def test_window_changes_the_evidence():
    perceived = {1: {"a"}, 2: {"a"}, 3: {"b"}, 4: {"b"}}
    imagined = {1: {"a"}, 2: {"a"}, 3: {"b"}, 4: {"b"}}
    h = history_from_sets(perceived, imagined)
    full, short = confidence(h), confidence(h, window=2)
    assert full.matrices.raw_counts_P.sum() == 6
    assert short.matrices.raw_counts_P.sum() == 1


@settings(max_examples=300, deadline=None)
@given(label_sets, label_sets, st.sampled_from(["literal", "negated_structure"]),
       st.sampled_from(["objects", "timesteps"]))
def test_confidence_in_unit_interval(perceived, imagined, form, mode):
    stats = confidence_or_zero(history_from_sets(perceived, imagined), bound_form=form, n_m_mode=mode)
    assert 0.0 <= stats.confidence <= 1.0
    if stats.matrices is not None:
        assert abs(stats.matrices.P.sum() - 1.0) <= 1e-9
        assert abs(stats.matrices.Q.sum() - 1.0) <= 1e-9


# --- trigger ------------------------------------------------------------------

@pytest.mark.parametrize("c, tau, expected", [(0.9, 0.85, False), (0.85, 0.85, True), (0.0, 0.0, True)])
def test_should_trigger_examples(c, tau, expected):
    assert should_trigger(c, tau) is expected


@given(st.floats(0, 1))
def test_tau_one_always_triggers(c):
    assert should_trigger(c, 1.0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_trigger_is_monotone_in_tau(c, t1, t2):
    lo, hi = sorted((t1, t2))
    assert should_trigger(c, lo) <= should_trigger(c, hi)
