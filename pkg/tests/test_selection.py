import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krodtwin.errors import ConfigError, NumericalError
from krodtwin.krod import KoopmanTriplet
from krodtwin.selection import CandidateScore, pareto_front, score_candidate, select, select_twin, similarity


def cs(k, e, c):
    return CandidateScore(k, e, c)


def brute_force_front(scores):
    def dom(a, b):
        return a.error <= b.error and a.similarity >= b.similarity and (a.error < b.error or a.similarity > b.similarity)

    return [s for s in scores if not any(dom(o, s) for o in scores if o is not s)]


def triplet_for(field):
    """Triplet whose reconstruction is ``field`` (identity modes)."""
    n = field.shape[0]
    return KoopmanTriplet(np.eye(n), field.copy(), n, np.ones(n), 0)


def test_perfect_model():
    u = np.arange(1.0, 13.0).reshape(3, 4)
    s = score_candidate(u, triplet_for(u))
    assert s.error == 0.0 and s.similarity == 1.0


def test_scaled_reconstruction():
    u = np.random.default_rng(0).standard_normal((3, 5))
    s = score_candidate(u, triplet_for(2 * u))
    assert s.error == pytest.approx(np.linalg.norm(u), rel=1e-14)
    assert s.similarity == pytest.approx(1.0, abs=1e-15)


def test_orthogonal_fields():
    u = np.array([[1.0, 0.0], [0.0, 0.0]])
    v = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert similarity(u, v) == 0.0


def test_similarity_matches_squared_cosine():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u, v = rng.standard_normal(50), rng.standard_normal(50)
        cos2 = (u @ v) ** 2 / ((u @ u) * (v @ v))
        assert similarity(u, v) == pytest.approx(cos2, abs=1e-14)


def test_similarity_resolves_near_parallel_fields():
    rng = np.random.default_rng(2)
    u = rng.standard_normal(1000)
    d = rng.standard_normal(1000)
    d -= (d @ u) / (u @ u) * u
    for eps in (1e-6, 1e-9):
        v = u + eps * d
        expected = eps**2 * (d @ d) / (u @ u)
        assert 1.0 - similarity(u, v) == pytest.approx(expected, rel=1e-6)


@given(st.floats(1e-3, 1e3))
def test_similarity_scale_invariant(alpha):
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(40), rng.standard_normal(40)
    assert similarity(u, alpha * v) == pytest.approx(similarity(u, v), abs=1e-12)


def test_zero_field_similarity_undefined():
    with pytest.raises(NumericalError):
        similarity(np.zeros(3), np.ones(3))


def test_shape_mismatch():
    with pytest.raises(ConfigError):
        score_candidate(np.ones((2, 2)), triplet_for(np.ones((2, 3))))


def test_front_example():
    scores = [cs(1, 0.10, 0.90), cs(2, 0.20, 0.95), cs(3, 0.15, 0.85)]
    front = pareto_front(scores)
    assert [(s.error, s.similarity) for s in front] == [(0.10, 0.90), (0.20, 0.95)]
    assert scores[0].dominates(scores[2])


def test_single_and_identical_candidates():
    one = cs(10, 0.1, 0.9)
    assert pareto_front([one]) == [one]
    a, b = cs(5, 0.1, 0.9), cs(6, 0.1, 0.9)
    assert pareto_front([b, a]) == [a, b]


def test_empty_inputs_rejected():
    with pytest.raises(ConfigError):
        pareto_front([])
    with pytest.raises(ConfigError):
        select_twin([])


points = st.lists(st.tuples(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)), min_size=1, max_size=25)


@settings(max_examples=200)
@given(points)
def test_front_matches_brute_force(pts):
    scores = [cs(i + 1, e, c) for i, (e, c) in enumerate(pts)]
    front = pareto_front(scores)
    assert {s.k for s in front} == {s.k for s in brute_force_front(scores)}
    excluded = [s for s in scores if s not in front]
    for s in excluded:
        assert any(o.dominates(s) for o in scores)
    for f, g in itertools.product(front, scores):
        assert not g.dominates(f)
    assert [s.k for s in front] == sorted(s.k for s in front)


@settings(max_examples=100)
@given(points)
def test_chosen_member_of_front_and_deterministic(pts):
    scores = [cs(i + 1, e, c) for i, (e, c) in enumerate(pts)]
    r1, r2 = select(scores), select(list(reversed(scores)))
    assert r1.chosen in r1.front
    assert r1.chosen.k == r2.chosen.k


def test_knee_prefers_ideal_point_and_smaller_rank():
    assert select_twin([cs(10, 0.0, 1.0), cs(40, 0.5, 1.0)]).k == 10
    # equal distances: the smaller rank wins
    assert select_twin([cs(7, 0.0, 0.0), cs(3, 1.0, 1.0)]).k == 3
    assert select_twin([cs(4, 0.3, 0.7)]).k == 4


def test_knee_point_of_convex_front():
    # a genuine trade-off: lower error comes with lower similarity
    front = [cs(5, 0.0, 0.0), cs(10, 0.1, 0.8), cs(20, 1.0, 1.0)]
    assert pareto_front(front) == front
    assert select_twin(front).k == 10
