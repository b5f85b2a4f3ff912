import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from oracles import brute_frontier, grid_area

from fairpfc.errors import InputError
from fairpfc.tradeoff import (AucMode, Frontier, TradeoffPoint, UtopiaMode, UtopiaPoint, auc_pfc,
                              dto, max_dto, min_fairness, min_performance, pareto_frontier,
                              partial_auc_pfc, polar_dto_area, utopia_from_candidates,
                              utopia_shift_check)

TWO = pareto_frontier([(0.8, 0.5), (0.6, 0.9)])
coord = st.floats(0.0, 1.0, allow_nan=False)
point_sets = st.lists(st.tuples(coord, coord), min_size=1, max_size=40)


def as_tuples(frontier):
    return [(p.performance, p.fairness) for p in frontier]


# -- frontier --------------------------------------------------------------------

def test_single_point_frontier():
    assert as_tuples(pareto_frontier([(0.3, 0.4)])) == [(0.3, 0.4)]


def test_frontier_example():
    f = pareto_frontier([(0.8, 0.6), (0.7, 0.7), (0.75, 0.65), (0.6, 0.5)])
    assert as_tuples(f) == [(0.8, 0.6), (0.75, 0.65), (0.7, 0.7)]


def test_duplicates_collapse():
    assert len(pareto_frontier([(0.5, 0.5)] * 5)) == 1


def test_weakly_dominated_removed():
    f = pareto_frontier([(0.8, 0.5), (0.8, 0.4), (0.6, 0.5)])
    assert as_tuples(f) == [(0.8, 0.5)]


def test_empty_frontier_rejected():
    with pytest.raises(InputError):
        pareto_frontier([])


def test_frontier_order_enforced():
    with pytest.raises(InputError):
        Frontier((TradeoffPoint(0.5, 0.5), TradeoffPoint(0.6, 0.6)))


@given(point_sets)
def test_frontier_equals_brute_force(pts):
    got = pareto_frontier(pts)
    assert set(as_tuples(got)) == brute_frontier(pts)
    perf = [p for p, _ in as_tuples(got)]
    assert perf == sorted(perf, reverse=True)


# -- DTO ---------------------------------------------------------------------------

@pytest.mark.parametrize("point,expected", [
    ((0.813544, 0.624426), 0.419311),
    ((1.0, 1.0), 0.0),
    ((0.6, 0.8), 0.4472136),
])
def test_dto_examples(point, expected):
    assert dto(TradeoffPoint(*point)) == pytest.approx(expected, abs=5e-7)


def test_dto_weights():
    u = UtopiaPoint(1.0, 1.0, (4.0, 1.0))
    assert dto(TradeoffPoint(0.5, 1.0), u) == pytest.approx(1.0)


def test_dto_requires_dominating_utopia():
    with pytest.raises(InputError):
        dto(TradeoffPoint(0.9, 0.9), UtopiaPoint(0.8, 1.0))


@given(coord, coord, coord, coord, st.floats(0.1, 10), st.floats(0.1, 10))
def test_dto_pareto_consistent(p1, f1, p2, f2, wp, wf):
    a = TradeoffPoint(max(p1, p2), max(f1, f2))
    b = TradeoffPoint(min(p1, p2), min(f1, f2))
    u = UtopiaPoint(1.0, 1.0, (wp, wf))
    assert dto(a, u) <= dto(b, u)


def test_utopia_modes():
    pts = [(0.82, 0.58), (0.5, 0.9)]
    u = utopia_from_candidates(pts, UtopiaMode.BEST_OBSERVED)
    assert (u.performance, u.fairness) == (0.82, 0.9)
    assert utopia_from_candidates(pts) == UtopiaPoint()
    u = utopia_from_candidates([(0.3, 0.2)], UtopiaMode.BEST_OBSERVED)
    assert (u.performance, u.fairness) == (0.3, 0.2)
    with pytest.raises(InputError):
        utopia_from_candidates([])


# -- areas --------------------------------------------------------------------------

def test_auc_examples():
    assert auc_pfc(pareto_frontier([(0.8, 0.5)])) == pytest.approx(0.40)
    assert auc_pfc(TWO, AucMode.STEP) == pytest.approx(0.64)
    assert auc_pfc(TWO, AucMode.LINEAR) == pytest.approx(0.68)


@pytest.mark.parametrize("mode", list(AucMode))
def test_auc_two_points_against_grid(mode):
    assert auc_pfc(TWO, mode) == pytest.approx(grid_area(as_tuples(TWO), mode.value), abs=1e-3)


def test_polar_examples():
    assert polar_dto_area(TWO, n_angles=10_000) == pytest.approx(0.36, abs=1e-3)
    assert polar_dto_area(pareto_frontier([(1.0, 1.0)])) == pytest.approx(0.0, abs=1e-12)
    assert polar_dto_area(pareto_frontier([(0.0, 0.0)])) == pytest.approx(1.0, abs=1e-3)


def test_polar_rejects_other_utopia():
    with pytest.raises(InputError):
        polar_dto_area(TWO, UtopiaPoint(0.9, 1.0))
    with pytest.raises(InputError):
        polar_dto_area(TWO, n_angles=8)


@given(point_sets, st.tuples(coord, coord))
def test_adding_point_never_shrinks_step_area(pts, extra):
    before = auc_pfc(pareto_frontier(pts), AucMode.STEP)
    after = auc_pfc(pareto_frontier(pts + [extra]), AucMode.STEP)
    assert after >= before - 1e-15


def test_linear_area_can_shrink_when_point_lies_under_chord():
    # (0.5, 0.75) is non-dominated but sits below the chord from (1, 0.625)
    # to (0, 1), so it bends the linear boundary inwards.
    pts = [(0.0, 1.0), (1.0, 0.625)]
    before = auc_pfc(pareto_frontier(pts), AucMode.LINEAR)
    after = auc_pfc(pareto_frontier(pts + [(0.5, 0.75)]), AucMode.LINEAR)
    assert before == pytest.approx(0.8125) and after == pytest.approx(0.78125)
    assert auc_pfc(pareto_frontier(pts + [(0.5, 0.75)]), AucMode.STEP) > \
        auc_pfc(pareto_frontier(pts), AucMode.STEP)


@given(point_sets)
def test_step_below_linear(pts):
    f = pareto_frontier(pts)
    assert auc_pfc(f, AucMode.STEP) <= auc_pfc(f, AucMode.LINEAR) + 1e-15 <= 1 + 1e-15


@given(st.floats(0.0, 0.99), st.floats(0.0, 0.99))
def test_magnitude_convention(p, f):
    before = auc_pfc(pareto_frontier([(p, f)]))
    after = auc_pfc(pareto_frontier([(p + 0.01, f + 0.01)]))
    assert after - before == pytest.approx(0.01 * p + 0.01 * f + 0.0001, abs=1e-12)


def test_magnitude_corner_cross_term():
    before = auc_pfc(pareto_frontier([(0.0, 0.0)]))
    after = auc_pfc(pareto_frontier([(0.01, 0.01)]))
    assert after - before == pytest.approx(0.0001, abs=1e-15)


# -- partial areas -----------------------------------------------------------------

def test_partial_examples():
    assert partial_auc_pfc(TWO, min_performance(0.7)) == pytest.approx(0.05)
    assert partial_auc_pfc(TWO, min_fairness(0.95)) == 0.0
    ball = lambda X, Y: np.hypot(1 - X, 1 - Y) <= 0.5
    ref = grid_area(as_tuples(TWO), "step", extra=ball)
    assert partial_auc_pfc(TWO, max_dto(0.5)) == pytest.approx(ref, abs=1e-3)


@pytest.mark.parametrize("mode", list(AucMode))
def test_unconstrained_partial_is_full(mode):
    full = auc_pfc(TWO, mode)
    assert partial_auc_pfc(TWO, min_performance(0.0), mode) == pytest.approx(full, abs=1e-15)
    assert partial_auc_pfc(TWO, min_fairness(0.0), mode) == pytest.approx(full, abs=1e-15)
    assert partial_auc_pfc(TWO, max_dto(2.0), mode) == pytest.approx(full, abs=1e-12)


@given(point_sets, coord, coord)
def test_partial_nesting(pts, t1, t2):
    f = pareto_frontier(pts)
    lo, hi = sorted((t1, t2))
    for mode in AucMode:
        assert partial_auc_pfc(f, min_performance(lo), mode) >= \
            partial_auc_pfc(f, min_performance(hi), mode) - 1e-15
        assert partial_auc_pfc(f, min_fairness(lo), mode) >= \
            partial_auc_pfc(f, min_fairness(hi), mode) - 1e-15
        assert partial_auc_pfc(f, max_dto(hi * 1.5), mode) >= \
            partial_auc_pfc(f, max_dto(lo * 1.5), mode) - 1e-12


# -- utopia shift ----------------------------------------------------------------

def test_shift_coincident():
    before, after = utopia_shift_check(TradeoffPoint(0.9, 0.9), UtopiaPoint(0.9, 0.9), 0.3)
    assert before == 0.0 and after == pytest.approx(0.3)


def test_shift_example():
    before, after = utopia_shift_check(TradeoffPoint(0.6, 0.8), UtopiaPoint(0.8, 1.0), 0.2)
    assert before == pytest.approx(0.2828427, abs=5e-8)
    assert after == pytest.approx(0.4472136, abs=5e-8)
    assert after ** 2 - before ** 2 == pytest.approx(0.04 + 2 * 0.2 * 0.2)


@given(coord, coord, coord, coord, st.floats(1e-3, 1.0))
def test_shift_identity(qp, qf, up, uf, b):
    q = TradeoffPoint(min(qp, up), min(qf, uf))
    u = UtopiaPoint(max(qp, up), max(qf, uf))
    before, after = utopia_shift_check(q, u, b)
    expected = b * b + 2 * b * (u.performance - q.performance)
    assert after ** 2 - before ** 2 == pytest.approx(expected, abs=1e-12)


@given(st.floats(0.05, 0.5), st.floats(0.01, math.pi / 2 - 0.01), st.floats(0.01, math.pi / 2 - 0.01),
       st.floats(0.01, 0.5))
def test_shift_penalises_lower_performance(r, a1, a2, b):
    assume(abs(a1 - a2) > 1e-3)
    u = UtopiaPoint(1.0, 1.0)
    q1 = TradeoffPoint(1 - r * math.cos(a1), 1 - r * math.sin(a1))
    q2 = TradeoffPoint(1 - r * math.cos(a2), 1 - r * math.sin(a2))
    lower, higher = sorted((q1, q2), key=lambda q: q.performance)
    assert utopia_shift_check(lower, u, b)[1] > utopia_shift_check(higher, u, b)[1]
