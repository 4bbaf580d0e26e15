import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reference_clustering import naive_agglomerate
from turnmove.clustering import ClusterAssignment, Linkage, agglomerate, cluster_sizes, validate_matrix


def random_matrix(rng, n, integer=False):
    a = rng.integers(0, 4, size=(n, n)).astype(float) if integer else rng.uniform(0, 10, size=(n, n))
    m = np.triu(a, 1)
    return m + m.T


def abs_diff(xs):
    xs = np.asarray(xs, dtype=float)
    return np.abs(xs[:, None] - xs[None, :])


@st.composite
def matrices(draw):
    n = draw(st.integers(1, 9))
    vals = draw(st.lists(st.integers(0, 5), min_size=n * n, max_size=n * n))
    a = np.triu(np.array(vals, dtype=float).reshape(n, n), 1)
    return a + a.T


class TestExamples:
    @pytest.mark.parametrize("linkage", list(Linkage))
    def test_k_equals_n(self, linkage):
        a = agglomerate(abs_diff([3, 1, 4, 1.5]), 4, linkage)
        assert a.labels == (0, 1, 2, 3)
        assert a.merges == ()

    def test_two_groups(self):
        m = abs_diff([0, 1, 10, 11])
        ref, _ = naive_agglomerate(m.tolist(), 2, "single")
        got = agglomerate(m, 2, Linkage.SINGLE)
        assert list(got.labels) == ref == [0, 0, 1, 1]

    def test_chain_tie_break(self):
        m = abs_diff([0, 2, 4, 6])
        ref, merges = naive_agglomerate(m.tolist(), 2, "single")
        got = agglomerate(m, 2, "single")
        # all gaps equal: (0,1) then (0,2) merge first under the lowest-key rule
        assert list(got.labels) == ref == [0, 0, 0, 1]
        assert got.partition() == frozenset({frozenset({0, 1, 2}), frozenset({3})})
        assert [(mg.left, mg.right) for mg in got.merges] == [(lo, hi) for lo, hi, _ in merges]

    def test_k_one(self):
        assert agglomerate(abs_diff([5, 1, 9]), 1).labels == (0, 0, 0)

    def test_average_differs_from_single(self):
        # single chains 0-1-2-3; average keeps the tight pair and splits the chain
        xs = [0, 3, 6, 9, 9.5]
        single = agglomerate(abs_diff(xs), 2, "single")
        average = agglomerate(abs_diff(xs), 2, "average")
        assert naive_agglomerate(abs_diff(xs).tolist(), 2, "average")[0] == list(average.labels)
        assert single.labels != average.labels

    def test_sizes(self):
        assert cluster_sizes(ClusterAssignment((0, 0, 1), 2)) == [2, 1]
        assert cluster_sizes(ClusterAssignment((0, 1, 2), 3)) == [1, 1, 1]
        assert cluster_sizes(ClusterAssignment((0, 0, 0), 1)) == [3]


class TestValidation:
    @pytest.mark.parametrize("m", [
        [[0, 1], [2, 0]],
        [[0, np.nan], [np.nan, 0]],
        [[1, 1], [1, 0]],
        [[0, 1, 2], [1, 0, 3]],
    ])
    def test_bad_matrix(self, m):
        with pytest.raises(ValueError):
            validate_matrix(m)

    @pytest.mark.parametrize("k", [0, 4])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            agglomerate(abs_diff([1, 2, 3]), k)

    def test_negative_entries_allowed(self):
        m = np.array([[0, -2, 5], [-2, 0, 4], [5, 4, 0]], dtype=float)
        assert agglomerate(m, 2).labels == (0, 0, 1)


class TestOracle:
    @pytest.mark.parametrize("linkage", ["single", "average"])
    def test_random_matrices(self, linkage):
        rng = np.random.default_rng(42)
        for trial in range(100):
            n = int(rng.integers(1, 11))
            m = random_matrix(rng, n, integer=trial % 2 == 0)
            k = int(rng.integers(1, n + 1))
            ref_labels, ref_merges = naive_agglomerate(m.tolist(), k, linkage)
            got = agglomerate(m, k, linkage)
            assert list(got.labels) == ref_labels
            assert [(g.left, g.right) for g in got.merges] == [(lo, hi) for lo, hi, _ in ref_merges]
            # average sums may differ in the last ulp from summation order
            assert [g.distance for g in got.merges] == pytest.approx([d for *_, d in ref_merges], rel=1e-12)

    @given(matrices(), st.data(), st.sampled_from(["single", "average"]))
    def test_property_matches_reference(self, m, data, linkage):
        k = data.draw(st.integers(1, len(m)))
        assert list(agglomerate(m, k, linkage).labels) == naive_agglomerate(m.tolist(), k, linkage)[0]


class TestProperties:
    @given(matrices(), st.data(), st.sampled_from(["single", "average"]), st.sampled_from([0.5, 2.0, 8.0]))
    def test_scale_invariance(self, m, data, linkage, c):
        k = data.draw(st.integers(1, len(m)))
        assert agglomerate(m, k, linkage).labels == agglomerate(c * m, k, linkage).labels

    @given(st.integers(0, 10_000), st.integers(2, 9), st.sampled_from(["single", "average"]))
    def test_permutation_invariance(self, seed, n, linkage):
        # continuous values: no ties, so the partition cannot depend on item order
        rng = np.random.default_rng(seed)
        m = random_matrix(rng, n)
        k = int(rng.integers(1, n + 1))
        perm = rng.permutation(n)
        permuted = agglomerate(m[np.ix_(perm, perm)], k, linkage)
        back = frozenset(frozenset(int(perm[i]) for i in c) for c in permuted.partition())
        assert back == agglomerate(m, k, linkage).partition()

    @given(matrices())
    def test_single_merge_distances_non_decreasing(self, m):
        d = [g.distance for g in agglomerate(m, 1, "single").merges]
        assert d == sorted(d)

    @given(matrices(), st.data(), st.sampled_from(["single", "average"]))
    def test_labels_cover_k(self, m, data, linkage):
        k = data.draw(st.integers(1, len(m)))
        a = agglomerate(m, k, linkage)
        assert sorted(set(a.labels)) == list(range(k))
        assert sum(cluster_sizes(a)) == len(m)
