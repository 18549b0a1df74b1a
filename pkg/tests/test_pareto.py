"""Front sorting and ranking tests against independent pairwise oracles."""

import numpy as np
import pytest

from greenbasket.domain import Recommendation
from greenbasket.pareto import (
    FrontAssignment,
    InsufficientSampleError,
    acceptability_filter,
    box_volume_rank,
    dominates,
    non_dominated_sort,
    pooled_dominance_ratio,
    zscore_normalize,
)


def dominates_oracle(a, b):
    """Straight loop over objectives, no numpy."""
    not_worse = all(x <= y for x, y in zip(a, b))
    better = any(x < y for x, y in zip(a, b))
    return not_worse and better


def peeling_oracle(losses):
    """O(n^2 M) pairwise peeling: repeatedly extract the non-dominated set."""
    remaining = list(range(len(losses)))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            if not any(
                dominates_oracle(losses[j], losses[i]) for j in remaining if j != i
            ):
                front.append(i)
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def volume_oracle(normalized):
    """Product-loop box volumes against componentwise max + 1."""
    n, m = normalized.shape
    ref = [max(normalized[i][j] for i in range(n)) + 1.0 for j in range(m)]
    vols = []
    for i in range(n):
        v = 1.0
        for j in range(m):
            v *= ref[j] - normalized[i][j]
        vols.append(v)
    return vols


class TestDominates:
    def test_strict_improvement(self):
        assert dominates((1.0, 1.0), (2.0, 2.0))

    def test_incomparable_pair(self):
        assert not dominates((1.0, 2.0), (2.0, 1.0))
        assert not dominates((2.0, 1.0), (1.0, 2.0))

    def test_irreflexive(self):
        z = (1.5, 2.5, 0.0)
        assert not dominates(z, z)

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            a = rng.integers(0, 4, size=5).astype(float)
            b = rng.integers(0, 4, size=5).astype(float)
            assert dominates(a, b) == dominates_oracle(a, b)


class TestNonDominatedSort:
    def test_single_solution(self):
        fa = non_dominated_sort([[1.0, 2.0]])
        assert fa.fronts == [[0]]
        assert fa.front_of.tolist() == [1]

    def test_chain(self):
        fa = non_dominated_sort([[1, 1], [2, 2], [3, 3]])
        assert fa.fronts == [[0], [1], [2]]

    def test_empty_input(self):
        fa = non_dominated_sort(np.zeros((0, 11)))
        assert fa.fronts == []
        assert fa.front_of.size == 0

    def test_matches_peeling_oracle(self):
        rng = np.random.default_rng(42)
        points = rng.normal(size=(100, 11))
        fa = non_dominated_sort(points)
        assert fa.fronts == peeling_oracle(points.tolist())

    def test_permutation_invariance(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(40, 4))
        perm = rng.permutation(40)
        fa = non_dominated_sort(points)
        fb = non_dominated_sort(points[perm])
        sets_a = [frozenset(f) for f in fa.fronts]
        sets_b = [frozenset(perm[list(f)]) for f in fb.fronts]
        assert sets_a == sets_b

    def test_first_front_is_the_non_dominated_set(self):
        rng = np.random.default_rng(17)
        points = rng.normal(size=(200, 6))
        fa = non_dominated_sort(points)
        expected = {
            i
            for i in range(200)
            if not any(dominates_oracle(points[j], points[i]) for j in range(200) if j != i)
        }
        assert set(fa.fronts[0]) == expected


class TestZscore:
    def test_two_point_column(self):
        out = zscore_normalize([[0.0], [2.0]])
        np.testing.assert_allclose(out[:, 0], [-1.0, 1.0])

    def test_constant_column(self):
        out = zscore_normalize([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        np.testing.assert_allclose(out[:, 0], 0.0)

    def test_moments_on_random_matrix(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(20, 11)) * rng.uniform(0.5, 4, size=11)
        out = zscore_normalize(z)
        assert np.all(np.abs(out.mean(axis=0)) < 1e-12)
        stds = out.std(axis=0)
        assert np.all((np.abs(stds - 1) < 1e-12) | (np.abs(stds) < 1e-12))

    def test_single_row_rejected(self):
        with pytest.raises(InsufficientSampleError):
            zscore_normalize([[1.0, 2.0]])


class TestBoxVolumeRank:
    def test_dominant_point_ranks_first(self):
        beta = box_volume_rank([[0.0, 0.0], [1.0, 1.0]])
        assert beta.tolist() == [1, 2]

    def test_ties_break_by_input_index(self):
        beta = box_volume_rank([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
        assert beta.tolist() == [1, 2, 3]

    def test_matches_product_loop_oracle(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(10, 3))
        beta = box_volume_rank(pts)
        vols = volume_oracle(pts)
        order = sorted(range(10), key=lambda i: (-vols[i], i))
        expected = [0] * 10
        for rank, i in enumerate(order, start=1):
            expected[i] = rank
        assert beta.tolist() == expected

    def test_shift_invariance_through_zscore(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(15, 5))
        shifted = pts.copy()
        shifted[:, 2] += 100.0
        a = box_volume_rank(zscore_normalize(pts))
        b = box_volume_rank(zscore_normalize(shifted))
        assert a.tolist() == b.tolist()


def rec(losses):
    return Recommendation(basket=np.zeros(3, dtype=int), losses=np.asarray(losses))


class TestAcceptabilityFilter:
    def test_anchor_is_excluded(self):
        anchor = rec([0.0, 1.0, 0, 0, 0, 1, 1, 1, 1, 1, 1])
        assert acceptability_filter([anchor]) == []

    def test_bad_environmental_ratio_is_excluded(self):
        z = [0.1, 0.8, 0, 0, 0, 1.2, 0.8, 0.8, 0.8, 0.8, 0.8]
        assert acceptability_filter([rec(z)]) == []

    def test_good_solution_is_kept(self):
        z = [0.1, 0.8, 0, 0, 0, 0.8, 0.8, 0.8, 0.8, 0.8, 0.8]
        out = acceptability_filter([rec(z)])
        assert len(out) == 1

    def test_dissimilar_solution_is_excluded(self):
        z = [0.6, 0.8, 0, 0, 0, 0.8, 0.8, 0.8, 0.8, 0.8, 0.8]
        assert acceptability_filter([rec(z)]) == []

    def test_subset_and_idempotent(self):
        rng = np.random.default_rng(6)
        sols = [rec(rng.uniform(0, 1.5, size=11)) for _ in range(50)]
        once = acceptability_filter(sols)
        assert all(s in sols for s in once)
        assert acceptability_filter(once) == once


class TestPooledDominanceRatio:
    def test_single_method_all_non_dominated(self):
        ratios = pooled_dominance_ratio({"a": np.array([[1.0, 2.0], [2.0, 1.0]])})
        assert ratios == {"a": 1.0}

    def test_strict_dominance_between_methods(self):
        ratios = pooled_dominance_ratio(
            {"a": np.array([[1.0, 1.0]]), "b": np.array([[2.0, 2.0]])}
        )
        assert ratios == {"a": 1.0, "b": 0.0}

    def test_duplicates_across_methods_count_as_non_dominated(self):
        ratios = pooled_dominance_ratio(
            {"a": np.array([[1.0, 1.0]]), "b": np.array([[1.0, 1.0]])}
        )
        assert ratios == {"a": 1.0, "b": 1.0}

    def test_empty_pool_raises(self):
        with pytest.raises(ValueError):
            pooled_dominance_ratio({})
        with pytest.raises(ValueError):
            pooled_dominance_ratio({"a": np.zeros((0, 3))})
