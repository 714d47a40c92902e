import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lunar_gnss.pareto import (
    dominates,
    hypervolume,
    hypervolume_mc,
    lunar_hypervolume,
    nondominated,
    normalize_objectives,
    pareto_rank,
)


def _brute_ranks(P):
    n = len(P)
    ranks = [0] * n
    left = set(range(n))
    r = 1
    while left:
        front = [i for i in left
                 if not any(np.all(P[j] <= P[i]) and np.any(P[j] < P[i]) for j in left if j != i)]
        for i in front:
            ranks[i] = r
        left -= set(front)
        r += 1
    return np.array(ranks)


def _hv_inclusion_exclusion(P, ref):
    """Union of boxes [p, ref] by inclusion-exclusion; exponential but exact for small sets."""
    total = 0.0
    for k in range(1, len(P) + 1):
        for combo in itertools.combinations(P, k):
            corner = np.max(combo, axis=0)
            total += (-1) ** (k + 1) * np.prod(np.clip(ref - corner, 0, None))
    return total


def test_rank_hand_example():
    assert pareto_rank([(1, 1), (1, 2), (2, 1), (2, 2)]).tolist() == [1, 2, 2, 3]
    assert pareto_rank([(3, 3)] * 5).tolist() == [1] * 5
    assert pareto_rank([]).size == 0


def test_rank_matches_brute_force():
    rng = np.random.default_rng(1)
    P = rng.random((100, 4))
    assert np.array_equal(pareto_rank(P), _brute_ranks(P))
    # integer grid forces many ties
    Q = rng.integers(0, 4, size=(100, 4)).astype(float)
    assert np.array_equal(pareto_rank(Q), _brute_ranks(Q))


def test_dominates():
    assert dominates((1, 2), (1, 3))
    assert not dominates((1, 3), (1, 3))
    assert not dominates((0, 4), (1, 3))


def test_hypervolume_2d_hand_values():
    assert hypervolume([(0.5, 0.5)], reference=(1, 1)) == pytest.approx(0.25)
    assert hypervolume([(0.2, 0.6), (0.6, 0.2)], reference=(1, 1)) == pytest.approx(0.48)


def test_hypervolume_matches_inclusion_exclusion():
    rng = np.random.default_rng(4)
    for d in (2, 3, 4, 5):
        P = rng.random((8, d))
        ref = np.ones(d)
        assert hypervolume(P, reference=ref) == pytest.approx(_hv_inclusion_exclusion(P, ref), rel=1e-12)


def test_hypervolume_4d_monte_carlo():
    rng = np.random.default_rng(7)
    P = rng.random((50, 4)) * 0.9
    ref = np.ones(4)
    exact = hypervolume(P, reference=ref)
    n = 1_000_000
    X = rng.random((n, 4))
    front = nondominated(P)
    dom = np.zeros(n, dtype=bool)
    for p in front:
        dom |= np.all(X >= p, axis=1)
    frac = dom.mean()
    sigma = np.sqrt(frac * (1 - frac) / n)
    assert abs(exact - frac) <= 3 * sigma
    est, se = hypervolume_mc(P, reference=ref, n_samples=200_000)
    assert abs(est - exact) <= 4 * se


def test_points_outside_reference_discarded():
    with pytest.warns(RuntimeWarning):
        v = hypervolume([(0.5, 0.5), (1.5, 0.1)], reference=(1, 1))
    assert v == pytest.approx(0.25)
    assert hypervolume(np.zeros((0, 3))) == 0.0


def test_normalization_and_lunar_hypervolume():
    N = normalize_objectives([(1.0, 100.0, 0.0, 0.0), (20.0, 0.0, 1000.0, 5.0)])
    assert np.allclose(N, [[0, 0, 0, 0], [1, 1, 1, 1]])
    assert lunar_hypervolume([(1.0, 100.0, 0.0, 0.0)]) == pytest.approx(1.01**4)
    assert lunar_hypervolume([]) == 0.0


points4 = st.lists(st.tuples(*[st.floats(0.0, 0.99)] * 4), min_size=1, max_size=12)


@settings(max_examples=100, deadline=None)
@given(points4, st.tuples(*[st.floats(0.0, 0.99)] * 4))
def test_hypervolume_monotone(P, extra):
    base = hypervolume(P, reference=np.ones(4))
    more = hypervolume(P + [extra], reference=np.ones(4))
    assert more >= base - 1e-12
    worse = tuple(min(x + 0.005, 0.995) for x in P[0])
    assert hypervolume(P + [worse], reference=np.ones(4)) == pytest.approx(base, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(points4)
def test_rank_invariant_under_monotone_transform(P):
    A = np.array(P)
    # dense per-column ranks pushed through x**3 + 5 are strictly increasing with no float collapse
    dense = np.column_stack([np.unique(A[:, k], return_inverse=True)[1] for k in range(4)]).astype(float)
    B = dense**3 + 5.0
    assert np.array_equal(pareto_rank(A), pareto_rank(B))
    assert np.array_equal(pareto_rank(A), _brute_ranks(A))
