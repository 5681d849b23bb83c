import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratecode import datagen, segmentation as seg
from ratecode.coding import coding_length_with_mean
from ratecode.errors import InvalidGroup, InvalidInput, InvalidPartition, TooManySamples


def oracle_group_bits(X, eps):
    """Independent rewrite of the with-mean group length via the covariance spectrum."""
    n, m = X.shape
    mu = X.mean(axis=1)
    C = np.cov(X, bias=True).reshape(n, n) if m > 1 else np.zeros((n, n))
    lam = np.clip(np.linalg.eigvalsh(C), 0, None)
    return (m + n) / 2 * np.sum(np.log2(1 + n / eps**2 * lam)) + n / 2 * np.log2(1 + mu @ mu / eps**2)


def oracle_total(W, groups, eps):
    m = W.shape[1]
    return sum(oracle_group_bits(W[:, list(g)], eps) - len(g) * np.log2(len(g) / m) for g in groups)


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def blobs(seed, m=60):
    return datagen.sample_mixture(datagen.two_blobs(seed), m)


class TestPartition:
    def test_from_labels_canonical(self):
        p = seg.Partition.from_labels([2, 2, 0, 1, 0])
        assert p.groups == ((0, 1), (2, 4), (3,))
        np.testing.assert_array_equal(p.labels(), [0, 0, 1, 2, 1])

    def test_validate(self):
        with pytest.raises(InvalidPartition):
            seg.Partition(((0, 1), (1, 2))).validate(3)
        with pytest.raises(InvalidPartition):
            seg.Partition(((0,),)).validate(2)
        with pytest.raises(InvalidPartition):
            seg.Partition(((0,), ()))


class TestSegmentedLength:
    def test_single_group_is_plain_length(self):
        rng = np.random.default_rng(0)
        W = rng.standard_normal((3, 9))
        assert seg.segmented_coding_length(W, [tuple(range(9))], 0.4) == pytest.approx(
            coding_length_with_mean(W, 0.4))

    def test_two_singletons_pay_one_bit_each(self):
        W = np.array([[1.0, -2.0], [0.5, 3.0]])
        eps = 0.3
        expected = coding_length_with_mean(W[:, :1], eps) + coding_length_with_mean(W[:, 1:], eps) + 2.0
        assert seg.segmented_coding_length(W, [(0,), (1,)], eps) == pytest.approx(expected)

    def test_true_split_is_shorter_and_matches_oracle(self):
        W, labels = blobs(1)
        eps = 0.1
        truth = seg.Partition.from_labels(labels)
        whole = seg.Partition((tuple(range(W.shape[1])),))
        two = seg.segmented_coding_length(W, truth, eps)
        one = seg.segmented_coding_length(W, whole, eps)
        assert two < one
        assert two == pytest.approx(oracle_total(W, truth.groups, eps), rel=1e-9)
        assert one == pytest.approx(oracle_total(W, whole.groups, eps), rel=1e-9)

    def test_invalid_partition(self):
        with pytest.raises(InvalidPartition):
            seg.segmented_coding_length(np.zeros((2, 3)), [(0, 1)], 1.0)


class TestMergeGain:
    def test_coincident_points_merge(self):
        W = np.array([[1.0, 1.0], [2.0, 2.0]])
        assert seg.merge_gain(W, [(0,), (1,)], 0, 1, 0.01) < 0

    def test_orthogonal_lines_stay_apart(self):
        t = np.linspace(-3, 3, 12)
        W = np.hstack([np.vstack([t, 0 * t]), np.vstack([0 * t, t])])
        p = seg.Partition((tuple(range(12)), tuple(range(12, 24))))
        eps = 0.01
        gain = seg.merge_gain(W, p, 0, 1, eps)
        merged = oracle_total(W, [tuple(range(24))], eps)
        apart = oracle_total(W, p.groups, eps)
        assert gain == pytest.approx(merged - apart, rel=1e-9)
        assert gain > 0

    def test_same_group_rejected(self):
        with pytest.raises(InvalidGroup):
            seg.merge_gain(np.zeros((1, 2)), [(0,), (1,)], 1, 1, 1.0)

    def test_unknown_group_rejected(self):
        with pytest.raises(InvalidGroup):
            seg.merge_gain(np.zeros((1, 2)), [(0,), (1,)], 0, 5, 1.0)


class TestGreedy:
    def test_single_sample(self):
        r = seg.segment_greedy(np.array([[1.0], [2.0]]), 0.1)
        assert r.partition.groups == ((0,),)
        assert r.merge_trace == []

    def test_identical_columns(self):
        r = seg.segment_greedy(np.tile([[1.0], [-1.0]], (1, 3)), 0.01)
        assert r.partition.groups == ((0, 1, 2),)

    def test_does_not_modify_input(self):
        W, _ = blobs(2, 20)
        W = np.asfortranarray(W)
        before = W.copy()
        seg.segment_greedy(W, 0.05)
        np.testing.assert_array_equal(W, before)

    def test_recovers_two_degenerate_blobs(self):
        W, labels = blobs(0)
        r = seg.segment_greedy(W, 0.05)
        assert r.n_groups == 2
        assert r.partition.groups == seg.Partition.from_labels(labels).groups

    def test_subset_never_beats_oracle(self):
        W, _ = blobs(0)
        r = seg.segment_greedy(W, 0.05)
        for seed in range(10):
            sub = np.random.default_rng(seed).choice(W.shape[1], 10, replace=False)
            best = seg.segment_bruteforce(W[:, sub], 0.05)
            restricted = seg.Partition.from_labels(r.labels()[sub])
            assert seg.segmented_coding_length(W[:, sub], restricted, 0.05) >= best.total_length - 1e-9
            assert seg.segment_greedy(W[:, sub], 0.05).total_length >= best.total_length - 1e-9

    @pytest.mark.xfail(strict=True, reason="sparse 10-sample subsets at eps=0.05 often fragment; "
                                           "greedy reaches the optimum in about 28 of 40 draws")
    def test_subset_greedy_always_optimal(self):
        misses = 0
        for seed in range(40):
            W, _ = blobs(seed)
            sub = np.random.default_rng(seed).choice(60, 10, replace=False)
            best = seg.segment_bruteforce(W[:, sub], 0.05)
            misses += seg.segment_greedy(W[:, sub], 0.05).partition.groups != best.partition.groups
        assert misses == 0

    def test_trace_and_total_consistent(self):
        W, _ = blobs(3, 40)
        eps = 0.05
        r = seg.segment_greedy(W, eps)
        m = W.shape[1]
        start = seg.segmented_coding_length(W, seg.Partition.singletons(m), eps)
        deltas = [d for _, _, d in r.merge_trace]
        assert all(d < 0 for d in deltas)
        assert start + sum(deltas) == pytest.approx(r.total_length, abs=1e-6)
        assert seg.segmented_coding_length(W, r.partition, eps) == pytest.approx(r.total_length, abs=1e-6)

    def test_each_merge_matches_fresh_evaluation(self):
        W, _ = blobs(4, 16)
        eps = 0.05
        r = seg.segment_greedy(W, eps)
        owner = np.arange(W.shape[1])
        total = seg.segmented_coding_length(W, seg.Partition.from_labels(owner), eps)
        for a, b, delta in r.merge_trace:
            owner[owner == b] = a
            new_total = seg.segmented_coding_length(W, seg.Partition.from_labels(owner), eps)
            assert new_total - total == pytest.approx(delta, abs=1e-6)
            total = new_total

    def test_permutation_invariance(self):
        W, _ = blobs(5, 30)
        perm = np.random.default_rng(1).permutation(30)
        a = seg.segment_greedy(W, 0.05)
        b = seg.segment_greedy(W[:, perm], 0.05)
        relabeled = {tuple(sorted(perm[list(g)])) for g in b.partition.groups}
        assert relabeled == set(a.partition.groups)
        assert a.total_length == pytest.approx(b.total_length, abs=1e-6)

    def test_backends_agree(self):
        W, _ = blobs(6, 50)
        a = seg.segment_greedy(W, 0.05, use_numba=True)
        b = seg.segment_greedy(W, 0.05, use_numba=False)
        assert a.partition.groups == b.partition.groups
        assert a.total_length == pytest.approx(b.total_length, abs=1e-9)

    def test_outlier_robustness(self):
        W, labels = datagen.sample_mixture(datagen.two_blobs(11), 200)
        W, mask = datagen.add_outliers(W, 0.1, 15.0, seed=11)
        r = seg.segment_greedy(W, 0.05)
        found = r.labels()
        dominant = np.argsort(np.bincount(found))[::-1][:2]
        for c in (0, 1):
            inliers = (labels == c) & ~mask
            share = max(np.mean(found[inliers] == g) for g in dominant)
            assert share >= 0.9


class TestBruteforce:
    def test_single(self):
        assert seg.segment_bruteforce(np.ones((2, 1)), 0.1).partition.groups == ((0,),)

    def test_two_identical(self):
        r = seg.segment_bruteforce(np.ones((2, 2)), 0.1)
        assert r.partition.groups == ((0, 1),)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(8)
        W = rng.standard_normal((2, 6))
        eps = 0.5
        best = min(oracle_total(W, p, eps) for p in set_partitions(list(range(6))))
        r = seg.segment_bruteforce(W, eps)
        assert r.total_length == pytest.approx(best, abs=1e-9)

    def test_never_worse_than_greedy_and_equal_when_separated(self):
        W, labels = blobs(9, 8)
        b = seg.segment_bruteforce(W, 0.05)
        g = seg.segment_greedy(W, 0.05)
        assert b.total_length <= g.total_length + 1e-9
        X, _ = datagen.sample_mixture(datagen.MixtureSpec(
            [datagen.Component([-6, 0], 0.5, covariance=np.eye(2)),
             datagen.Component([6, 0], 0.5, covariance=np.eye(2))], seed=3), 8)
        b = seg.segment_bruteforce(X, 1.0)
        g = seg.segment_greedy(X, 1.0)
        assert b.partition.groups == g.partition.groups

    def test_backends_identical(self):
        rng = np.random.default_rng(10)
        W = rng.standard_normal((3, 8))
        a = seg.segment_bruteforce(W, 0.7, use_numba=True)
        b = seg.segment_bruteforce(W, 0.7, use_numba=False)
        assert a.partition.groups == b.partition.groups
        assert a.total_length == b.total_length

    def test_tie_break_lexicographic(self):
        # four identical points: every partition into one group is optimal, the
        # canonical string 0000 is the smallest
        r = seg.segment_bruteforce(np.zeros((1, 4)), 1.0)
        assert r.partition.groups == ((0, 1, 2, 3),)

    def test_too_many(self):
        with pytest.raises(TooManySamples):
            seg.segment_bruteforce(np.zeros((1, 13)), 1.0)


class TestSelectDistortion:
    def test_single_value(self):
        W, _ = blobs(0, 20)
        sel = seg.select_distortion(W, [0.3])
        assert sel.eps_star == 0.3

    def test_zero_data(self):
        W = np.zeros((2, 5))
        grid = [0.5, 0.1, 1.0]
        sel = seg.select_distortion(W, grid)
        assert sel.eps_star == 0.1
        np.testing.assert_allclose(sel.objectives, [10 * np.log2(e) for e in grid], atol=1e-12)

    def test_objective_recomputed(self):
        W, _ = blobs(2, 40)
        grid = [0.01, 0.05, 0.1, 0.5, 1.0]
        sel = seg.select_distortion(W, grid)
        n, m = W.shape
        recomputed = [seg.segmented_coding_length(W, r.partition, e) + m * n * np.log2(e)
                      for r, e in zip(sel.results, grid)]
        np.testing.assert_allclose(sel.objectives, recomputed, atol=1e-6)
        assert all(sel.objectives[grid.index(sel.eps_star)] <= v for v in recomputed)

    def test_empty_grid(self):
        with pytest.raises(InvalidInput):
            seg.select_distortion(np.ones((1, 2)), [])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.sampled_from([0.1, 0.5, 2.0]))
def test_greedy_never_beats_oracle(seed, m, eps):
    W = np.random.default_rng(seed).standard_normal((2, m)) * 3
    g = seg.segment_greedy(W, eps)
    b = seg.segment_bruteforce(W, eps)
    assert g.total_length >= b.total_length - 1e-9


def test_set_partition_helper_counts():
    assert sum(1 for _ in set_partitions(list(range(5)))) == 52
    assert len(list(itertools.islice(set_partitions([0]), 5))) == 1
