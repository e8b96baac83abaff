import numpy as np
import pytest

from pivotprune import (
    Dataset,
    DistanceSpec,
    Metric,
    PivotSet,
    brute_force_k_center,
    coverage_radius,
    greedy_farthest_point,
)
from pivotprune.errors import DatasetError
from pivotprune.pivots import default_k
from pivotprune.synth import clustered_vectors, mutated_sequences

import _oracles


def pivot_values(data, pivots):
    return sorted(data[i].features[0] for i in pivots.pivot_indices)


class TestGreedy:
    def test_line_k2(self, line, euclid):
        p = greedy_farthest_point(line, euclid, 2, seed_index=0)
        assert pivot_values(line, p) == [0.0, 9.0]
        # brute-force recomputation of R(P) on the 5 points
        D = [[abs(a - b) for b in (0, 1, 2, 8, 9)] for a in (0, 1, 2, 8, 9)]
        assert _oracles.k_center_radius(D, [0, 4]) == 2
        assert p.coverage_radius == 2.0

    def test_k_equals_n(self, line, euclid):
        p = greedy_farthest_point(line, euclid, 5)
        assert sorted(p.pivot_indices) == [0, 1, 2, 3, 4]
        assert p.coverage_radius == 0.0

    def test_k1_is_seed(self, line, euclid):
        p = greedy_farthest_point(line, euclid, 1, seed_index=3)
        assert p.pivot_indices == (3,)
        assert p.coverage_radius == 8.0  # point 8 to point 0

    def test_ties_go_to_smallest_row(self, euclid):
        data = Dataset.from_vectors([[0.0], [-5.0], [5.0]])
        assert greedy_farthest_point(data, euclid, 2).pivot_indices == (0, 1)

    def test_duplicates_keep_indices_distinct(self, euclid):
        data = Dataset.from_vectors([[1.0], [1.0], [1.0]])
        p = greedy_farthest_point(data, euclid, 3)
        assert sorted(p.pivot_indices) == [0, 1, 2]

    def test_evaluation_count(self):
        data, _ = mutated_sequences(120, rng_seed=2)
        spec = DistanceSpec("levenshtein")
        metric = Metric(spec, data)
        greedy_farthest_point(data, spec, 7, metric=metric)
        assert metric.evaluations == 120 * 7

    def test_errors(self, line, euclid):
        with pytest.raises(ValueError):
            greedy_farthest_point(line, euclid, 6)
        with pytest.raises(IndexError):
            greedy_farthest_point(line, euclid, 2, seed_index=5)
        with pytest.raises(DatasetError):
            greedy_farthest_point(Dataset((), {"x": 0}), euclid, 1)

    def test_default_k(self):
        assert default_k(1) == 1
        assert default_k(100) == 10
        assert default_k(150_000) == 32

    @pytest.mark.parametrize("kind", ["euclidean", "angular", "levenshtein"])
    def test_radius_monotone_in_k_and_deterministic(self, kind):
        spec = DistanceSpec(kind)
        if kind == "levenshtein":
            data, _ = mutated_sequences(200, rng_seed=4)
        else:
            data, _ = clustered_vectors(200, rng_seed=4)
        radii = [greedy_farthest_point(data, spec, k).coverage_radius for k in range(1, 20)]
        assert all(b <= a for a, b in zip(radii, radii[1:]))
        assert greedy_farthest_point(data, spec, 9) == greedy_farthest_point(data, spec, 9)

    def test_radius_field_matches_recomputation(self):
        data, _ = clustered_vectors(300, rng_seed=8)
        spec = DistanceSpec("euclidean")
        p = greedy_farthest_point(data, spec, 12)
        assert p.coverage_radius == coverage_radius(data, spec, p.pivot_indices)


class TestCoverageRadius:
    def test_all_rows(self, line, euclid):
        assert coverage_radius(line, euclid, range(5)) == 0.0

    def test_single_pivot(self, line, euclid):
        assert coverage_radius(line, euclid, [0]) == 9.0

    def test_two_pivots(self, line, euclid):
        assert coverage_radius(line, euclid, [0, 4]) == 2.0

    def test_empty(self, line, euclid):
        with pytest.raises(ValueError):
            coverage_radius(line, euclid, [])


class TestBruteForce:
    def test_line_k2(self, line, euclid):
        D = [[abs(a - b) for b in (0, 1, 2, 8, 9)] for a in (0, 1, 2, 8, 9)]
        assert _oracles.enumerate_k_center(D, 2) == 1
        best = brute_force_k_center(line, euclid, 2)
        assert best.coverage_radius == 1.0
        # lexicographic tie-break: (1, 3) is the first pair reaching radius 1
        assert best.pivot_indices == (1, 3)

    def test_k_equals_n(self, line, euclid):
        small = Dataset.from_vectors([[0.0], [4.0], [6.0]])
        assert brute_force_k_center(small, euclid, 3).coverage_radius == 0.0

    def test_two_points(self, euclid):
        data = Dataset.from_vectors([[0.0], [10.0]])
        best = brute_force_k_center(data, euclid, 1)
        assert best.coverage_radius == 10.0 and best.pivot_indices == (0,)

    def test_cap(self, euclid):
        data = Dataset.from_vectors(np.arange(16.0)[:, None])
        with pytest.raises(ValueError):
            brute_force_k_center(data, euclid, 2)
        with pytest.raises(ValueError):
            brute_force_k_center(data, euclid, 2, max_n=10)
        # 8 integer points per center need 2r + 1 >= 8
        assert brute_force_k_center(data, euclid, 2, max_n=16).coverage_radius == 4.0


class TestPivotSet:
    def test_rejects_empty_and_duplicates(self):
        spec = DistanceSpec("euclidean")
        with pytest.raises(ValueError):
            PivotSet((), 0.0, spec)
        with pytest.raises(ValueError):
            PivotSet((1, 1), 0.0, spec)

    def test_prefix(self, line, euclid):
        p = greedy_farthest_point(line, euclid, 3)
        assert p.prefix(1, line) == greedy_farthest_point(line, euclid, 1)
