import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lunar_gnss.moea.archive import (
    ACCEPTED,
    REJECTED,
    REPLACED,
    Archive,
    Solution,
    epsilon_box,
    operator_credits,
    pareto_compare,
)
from lunar_gnss.problem import EPSILONS


def _sol(*f, op=-1):
    return Solution(np.zeros(2), np.array(f, dtype=float), operator=op)


def _eps_dominated(a, b, eps):
    """True when box(a) dominates box(b) (brute-force oracle)."""
    ba, bb = np.floor(np.array(a) / eps), np.floor(np.array(b) / eps)
    return bool(np.all(ba <= bb) and np.any(ba < bb))


def test_epsilon_box_examples():
    assert epsilon_box([5.005], [0.01])[0] == 500
    assert epsilon_box([189.47], [10.0])[0] == 18
    assert epsilon_box([5.005, -97.06, 189.47, 0.07], EPSILONS) == epsilon_box([5.009, -97.01, 181.0, 0.075], EPSILONS)


def test_pareto_compare():
    assert pareto_compare((1, 2), (2, 2)) == -1
    assert pareto_compare((2, 2), (1, 2)) == 1
    assert pareto_compare((1, 3), (2, 2)) == 0
    assert pareto_compare((1, 1), (1, 1)) == 0


def test_insert_into_empty_and_duplicate():
    a = Archive([0.1, 0.1])
    r = a.insert(_sol(0.55, 0.55))
    assert (r.status, r.progress) == (ACCEPTED, True)
    r = a.insert(_sol(0.55, 0.55))
    assert (r.status, r.progress) == (REJECTED, False)
    assert len(a) == 1


def test_dominating_candidate_evicts_two_boxes():
    a = Archive([0.1, 0.1])
    a.insert(_sol(0.35, 0.75))
    a.insert(_sol(0.75, 0.35))
    assert len(a) == 2
    r = a.insert(_sol(0.25, 0.25))
    assert r.status == ACCEPTED and r.progress
    assert len(a) == 1
    assert _eps_dominated((0.25, 0.25), (0.35, 0.75), 0.1) and _eps_dominated((0.25, 0.25), (0.75, 0.35), 0.1)


def test_same_box_resolution():
    a = Archive([1.0, 1.0])
    a.insert(_sol(0.5, 0.5))
    # dominates the incumbent inside the box
    r = a.insert(_sol(0.4, 0.4))
    assert (r.status, r.progress) == (REPLACED, False)
    # mutually non-dominated: closer to the box corner (0, 0) wins
    r = a.insert(_sol(0.1, 0.5))
    assert r.status == REPLACED
    assert np.allclose(a.entries[0].f, [0.1, 0.5])
    r = a.insert(_sol(0.7, 0.05))
    assert r.status == REJECTED


def test_operator_credits_and_validation():
    a = Archive([0.1, 0.1])
    a.insert(_sol(0.15, 0.85, op=0))
    a.insert(_sol(0.85, 0.15, op=2))
    a.insert(_sol(0.5, 0.5, op=2))
    assert operator_credits(a, 6).tolist() == [1, 0, 2, 0, 0, 0]
    with pytest.raises(ValueError):
        Archive([0.1, 0.0])


def test_round_trip_solution():
    s = Solution(np.array([0.1, 0.2]), np.array([1.0, -2.0]), 3, True, {"k": 1})
    t = Solution.from_dict(s.to_dict())
    assert np.array_equal(t.x, s.x) and np.array_equal(t.f, s.f)
    assert (t.operator, t.penalized, t.info) == (3, True, {"k": 1})


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=60))
def test_archive_invariants_after_every_insert(points):
    eps = np.array([0.05, 0.1, 0.2])
    a = Archive(eps)
    for p in points:
        a.insert(_sol(*p))
        a.check_invariants()
    # every inserted point is epsilon-dominated by, or shares a box with, some archive member
    for p in points:
        bp = epsilon_box(p, eps)
        assert any(b == bp or _eps_dominated(s.f, p, eps) for s, b in zip(a.entries, a.boxes))
