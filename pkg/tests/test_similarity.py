import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tonerec.corpus import RatingEvent
from tonerec.matrices import build_user_item
from tonerec.similarity import (
    NeighborList,
    SimilarityScore,
    neighbors_for,
    pcc,
    similarity_row,
    top_n_neighbors,
)

from oracles import pearson_oracle, random_rating_rows


def matrix(rows):
    return build_user_item([RatingEvent(u, m, r) for u, row in rows.items() for m, r in row.items()])


def test_self_correlation_is_one():
    a = {1: 4.0, 2: 2.0, 3: 5.0}
    assert pcc(a, dict(a), "co-rated") == 1.0


def test_hand_example_against_statistics_oracle():
    a = {1: 5.0, 2: 3.0, 3: 4.0}
    b = {1: 2.0, 2: 5.0, 3: 1.0}
    # statistics.correlation([5, 3, 4], [2, 5, 1]) = -0.720576692122892
    assert pcc(a, b, "co-rated") == pytest.approx(-0.720576692122892, abs=1e-12)
    assert round(pcc(a, b, "co-rated"), 4) == -0.7206


def test_zero_variance_undefined():
    assert pcc({1: 4.0, 2: 4.0}, {1: 3.0, 2: 5.0}, "co-rated") is None


def test_no_overlap_undefined():
    assert pcc({1: 4.0}, {2: 4.0}) is None


def test_all_rated_means_use_every_rating():
    a = {1: 5.0, 2: 3.0, 9: 1.0}  # mean 3.0 over all three
    b = {1: 4.0, 2: 2.0}  # mean 3.0
    # deviations on {1, 2}: a (2, 0), b (1, -1) -> 2 / (2 * sqrt 2)
    assert pcc(a, b, "all-rated") == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    # co-rated means: a (1, -1), b (1, -1) -> 1
    assert pcc(a, b, "co-rated") == pytest.approx(1.0)


def test_rejects_empty_and_bad_scope():
    with pytest.raises(ValueError):
        pcc({}, {1: 2.0})
    with pytest.raises(Exception, match="means_scope"):
        pcc({1: 1.0}, {1: 2.0}, "both")


def test_similarity_row_cardinality():
    rows = {1: {1: 5, 2: 3, 3: 4}, 2: {1: 4, 2: 2, 3: 5}, 3: {1: 1, 2: 4}, 4: {3: 2}}
    scores = similarity_row(matrix(rows), 1, min_overlap=2, means_scope="co-rated")
    assert [s.user_b for s in scores] == [2, 3]
    assert all(s.user_a == 1 and s.overlap >= 2 for s in scores)


def test_similarity_row_vacuous_filter():
    rows = {1: {1: 5, 2: 3}, 2: {1: 4, 2: 2}}
    assert similarity_row(matrix(rows), 1, min_overlap=3) == []


def test_similarity_row_unknown_target():
    with pytest.raises(KeyError):
        similarity_row(matrix({1: {1: 3.0}}), 42)


@pytest.mark.parametrize("backend", ["numba", "numpy"])
@pytest.mark.parametrize("scope", ["co-rated", "all-rated"])
def test_similarity_row_matches_bruteforce(backend, scope):
    rng = random.Random(2024)
    for _ in range(60):
        rows = random_rating_rows(rng, max_users=20, max_items=15)
        m = matrix(rows)
        for target in rows:
            got = {s.user_b: s.value for s in similarity_row(m, target, 1, scope, backend)}
            want = {}
            for other in rows:
                if other == target:
                    continue
                v = pearson_oracle(rows[target], rows[other], scope == "co-rated")
                if v is not None:
                    want[other] = v
            assert got.keys() == want.keys()
            for u in want:
                assert abs(got[u] - want[u]) <= 1e-9


def test_backends_agree_on_fixture(fixture_corpus):
    m = build_user_item(fixture_corpus)
    for target in m.user_ids[:10]:
        a = {s.user_b: s.value for s in similarity_row(m, target, 2, "all-rated", "numba")}
        b = {s.user_b: s.value for s in similarity_row(m, target, 2, "all-rated", "numpy")}
        assert a.keys() == b.keys()
        assert all(abs(a[u] - b[u]) < 1e-12 for u in a)


ratings = st.sampled_from([1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0])
rows_st = st.dictionaries(st.integers(1, 12), ratings, min_size=1, max_size=12)


@settings(max_examples=300)
@given(rows_st, rows_st, st.sampled_from(["co-rated", "all-rated"]))
def test_symmetry_and_bounds(a, b, scope):
    ab, ba = pcc(a, b, scope), pcc(b, a, scope)
    assert ab == ba
    if ab is not None:
        assert -1.0 <= ab <= 1.0


@settings(max_examples=300)
@given(rows_st, rows_st, st.floats(0.1, 10), st.floats(-10, 10))
def test_affine_invariance_co_rated(a, b, alpha, beta):
    common = a.keys() & b.keys()
    before = pcc(a, b, "co-rated")
    a2 = {k: alpha * v + beta for k, v in a.items() if k in common}
    b2 = {k: alpha * v + beta for k, v in b.items() if k in common}
    if not common:
        assert before is None
        return
    after = pcc(a2, b2, "co-rated")
    if before is None or after is None:
        assert before is None and after is None
    else:
        assert abs(before - after) <= 1e-9


def _scores(pairs):
    return [SimilarityScore(1, u, v, 3) for u, v in pairs]


def test_top_n_tie_break():
    nl = top_n_neighbors(_scores([(2, 0.9), (3, 0.4), (4, 0.9)]), 2)
    assert nl.neighbors == ((2, 0.9), (4, 0.9))


def test_top_n_saturation_and_negative_exclusion():
    assert top_n_neighbors(_scores([(3, 0.1), (2, 0.5)]), 10).user_ids == [2, 3]
    assert len(top_n_neighbors(_scores([(2, -0.5)]), 3)) == 0
    assert top_n_neighbors(_scores([(2, -0.5)]), 3, allow_negative=True).user_ids == [2]
    assert top_n_neighbors([], 3) == NeighborList(-1, ())
    with pytest.raises(ValueError):
        top_n_neighbors([], 0)


@pytest.mark.parametrize("allow_negative", [False, True])
def test_fast_neighbors_equal_reference_path(fixture_corpus, allow_negative):
    m = build_user_item(fixture_corpus)
    for target in m.user_ids:
        slow = top_n_neighbors(similarity_row(m, target, 2), 7, allow_negative)
        fast = neighbors_for(m, target, 7, 2, allow_negative=allow_negative)
        assert fast.neighbors == slow.neighbors


def test_neighbor_ordering_deterministic(fixture_corpus):
    m = build_user_item(fixture_corpus)
    first = [neighbors_for(m, u, 5).neighbors for u in m.user_ids]
    second = [neighbors_for(m, u, 5).neighbors for u in m.user_ids]
    assert first == second
    for nl in first:
        keys = [(-v, u) for u, v in nl]
        assert keys == sorted(keys)


def test_clamped_output_range():
    rng = np.random.default_rng(0)
    rows = {u: {i: float(x) for i, x in enumerate(rng.integers(1, 6, 15), 1)} for u in range(1, 21)}
    m = matrix(rows)
    for u in rows:
        for s in similarity_row(m, u, 1, "all-rated"):
            assert -1.0 <= s.value <= 1.0
