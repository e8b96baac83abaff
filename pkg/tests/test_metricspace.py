import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotprune import (
    Dataset,
    DistanceSpec,
    Metric,
    Suffix,
    check_metric_axioms,
    distance,
    featurize_bag_of_activities,
)
from pivotprune.errors import (
    DatasetError,
    DimensionMismatchError,
    MissingFeaturesError,
    ZeroVectorError,
)
from pivotprune.metricspace import levenshtein
from pivotprune.synth import clustered_vectors, mutated_sequences

import _oracles

SPECS = [DistanceSpec(k) for k in ("euclidean", "angular", "levenshtein")]


def vec(id_, *xs):
    return Suffix(id_, (0,), xs)


def word(id_, text):
    return Suffix(id_, tuple(ord(c) - ord("a") for c in text))


class TestDistanceExamples:
    def test_euclidean_345(self):
        assert distance(DistanceSpec("euclidean"), vec("a", 0, 0), vec("b", 3, 4)) == 5.0

    def test_angular_orthogonal(self):
        d = distance(DistanceSpec("angular"), vec("a", 1, 0), vec("b", 0, 1))
        assert d == pytest.approx(0.5, abs=1e-15)

    def test_angular_matches_arccos_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b = rng.normal(size=4), rng.normal(size=4)
            got = distance(DistanceSpec("angular"), vec("a", *a), vec("b", *b))
            assert got == pytest.approx(_oracles.angular(a, b), abs=1e-7)

    def test_angular_ignores_scale(self):
        d = distance(DistanceSpec("angular"), vec("a", 1, 2, 3), vec("b", 2, 4, 6))
        assert d <= 1e-12

    def test_levenshtein_identity(self):
        a = Suffix("a", (0, 1, 2))
        assert distance(DistanceSpec("levenshtein"), a, Suffix("b", (0, 1, 2))) == 0.0

    def test_kitten_sitting(self):
        # DP oracle computed independently
        assert _oracles.levenshtein_table("kitten", "sitting") == 3
        d = distance(DistanceSpec("levenshtein"), word("k", "kitten"), word("s", "sitting"))
        assert d == 3.0

    def test_missing_features(self):
        with pytest.raises(MissingFeaturesError):
            distance(DistanceSpec("euclidean"), Suffix("a", (0,)), vec("b", 1.0))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            distance(DistanceSpec("euclidean"), vec("a", 1.0), vec("b", 1.0, 2.0))

    def test_zero_vector_angular(self):
        with pytest.raises(ZeroVectorError):
            distance(DistanceSpec("angular"), vec("a", 0.0, 0.0), vec("b", 1.0, 0.0))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            DistanceSpec("cosine")


class TestLevenshteinOracle:
    def test_exhaustive_short_sequences(self):
        """All sequences of length <= 6 over 3 letters, every pair, against a
        vectorized DP."""
        seqs = list(_oracles.all_sequences(3, 6))
        data = Dataset(tuple(Suffix(str(i), s) for i, s in enumerate(seqs)),
                       {"a": 0, "b": 1, "c": 2})
        metric = Metric(DistanceSpec("levenshtein"), data)
        got = np.vstack([metric.to_rows(metric.row_repr(i)) for i in range(len(seqs))])

        by_len: dict[int, list[int]] = {}
        for i, s in enumerate(seqs):
            by_len.setdefault(len(s), []).append(i)
        for la, rows_a in by_len.items():
            A = np.array([seqs[i] for i in rows_a])
            for lb, rows_b in by_len.items():
                B = np.array([seqs[j] for j in rows_b])
                ia, ib = np.meshgrid(np.arange(len(rows_a)), np.arange(len(rows_b)), indexing="ij")
                want = _oracles.levenshtein_pairs(A[ia.ravel()], B[ib.ravel()])
                sub = got[np.ix_(rows_a, rows_b)].ravel()
                np.testing.assert_array_equal(sub, want)

    @given(st.lists(st.integers(0, 4), max_size=12), st.lists(st.integers(0, 4), max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_random_against_table(self, a, b):
        assert levenshtein(a, b) == _oracles.levenshtein_table(a, b)


@pytest.fixture(scope="module")
def datasets():
    vectors, _ = clustered_vectors(200, dim=5, clusters=4, rng_seed=11)
    seqs, _ = mutated_sequences(200, rng_seed=11)
    return {"euclidean": vectors, "angular": vectors, "levenshtein": seqs}


class TestMetricProperties:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_symmetry_identity(self, spec, datasets):
        data = datasets[spec.kind]
        rng = np.random.default_rng(5)
        for i, j in rng.integers(0, len(data), size=(1000, 2)).tolist():
            a, b = data[i], data[j]
            assert abs(distance(spec, a, b) - distance(spec, b, a)) <= 1e-12
            if spec.kind == "levenshtein":
                assert distance(spec, a, a) == 0.0
            else:
                assert distance(spec, a, a) <= 1e-12

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_triangle_inequality(self, spec, datasets):
        data = datasets[spec.kind]
        rng = np.random.default_rng(6)
        for x, y, z in rng.integers(0, len(data), size=(1000, 3)).tolist():
            dxy = distance(spec, data[x], data[y])
            assert dxy <= distance(spec, data[x], data[z]) + distance(spec, data[z], data[y]) + 1e-9

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_check_metric_axioms_clean(self, spec, datasets):
        assert check_metric_axioms(spec, datasets[spec.kind], 1000, rng_seed=1) == []

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
    def test_batched_and_single_paths_bit_identical(self, spec, datasets):
        data = datasets[spec.kind]
        metric = Metric(spec, data)
        q = metric.prepare(data[7])
        rows = metric.to_rows(q)
        for i in range(0, len(data), 13):
            assert rows[i] == metric.to_row(q, i) == distance(spec, data[7], data[i])


def test_squared_euclidean_is_caught():
    data = Dataset.from_vectors([[0.0], [1.0], [2.0]])

    def squared(a, b):
        return (a.features[0] - b.features[0]) ** 2

    violations = check_metric_axioms(squared, data, 1000, rng_seed=0)
    triangle = {v.rows: v for v in violations if v.axiom == "triangle"}
    assert (0, 2, 1) in triangle
    assert triangle[(0, 2, 1)].lhs == 4.0 and triangle[(0, 2, 1)].rhs == 2.0


def test_metric_counts_evaluations():
    data = Dataset.from_vectors(np.arange(10.0)[:, None])
    metric = Metric(DistanceSpec("euclidean"), data)
    q = metric.prepare(data[0])
    metric.to_rows(q)
    metric.to_rows(q, [1, 2, 3])
    metric.to_row(q, 4)
    assert metric.evaluations == 14
    metric.reset_counter()
    assert metric.evaluations == 0


class TestFeaturize:
    alphabet = {"A": 0, "B": 1}

    def test_counts(self):
        data = Dataset((Suffix("s", (0, 0, 1)), Suffix("t", (1, 1, 1))), self.alphabet)
        f = featurize_bag_of_activities(data)
        assert f[0].features == (2.0, 1.0)
        assert f[1].features == (0.0, 3.0)
        assert f.feature_dim == 2

    def test_disjoint_unit_vectors(self):
        data = featurize_bag_of_activities(
            Dataset((Suffix("a", (0,)), Suffix("b", (1,))), self.alphabet))
        assert distance(DistanceSpec("euclidean"), data[0], data[1]) == pytest.approx(math.sqrt(2))


class TestDatasetInvariants:
    def test_duplicate_ids(self):
        with pytest.raises(DatasetError):
            Dataset((Suffix("a", (0,)), Suffix("a", (0,))), {"x": 0})

    def test_empty_activities(self):
        with pytest.raises(DatasetError):
            Suffix("a", ())

    def test_activity_outside_alphabet(self):
        with pytest.raises(DatasetError):
            Dataset((Suffix("a", (3,)),), {"x": 0})

    def test_mixed_features(self):
        with pytest.raises(DatasetError):
            Dataset((Suffix("a", (0,), (1.0,)), Suffix("b", (0,))), {"x": 0})

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            Dataset((Suffix("a", (0,), (1.0,)), Suffix("b", (0,), (1.0, 2.0))), {"x": 0})

    def test_angular_metric_rejects_zero_rows(self):
        data = Dataset.from_vectors([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ZeroVectorError):
            Metric(DistanceSpec("angular"), data)
