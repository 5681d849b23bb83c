"""Segmentation by minimizing the total lossy coding length of a partition.

The cost of a partition ``{W_1, ..., W_k}`` of the ``m`` columns of ``W`` is

    sum_i  L(W_i) + |W_i| * (-log2(|W_i| / m))

where ``L`` is the coding length with an explicit mean term
(:func:`ratecode.coding.coding_length_with_mean`) and the second term is the
entropy code for group membership.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .coding import as_data_matrix, check_distortion, coding_length_with_mean
from .errors import InvalidGroup, InvalidInput, InvalidPartition, TooManySamples

BRUTEFORCE_MAX_M = 12


@dataclass(frozen=True)
class Partition:
    """Disjoint groups of column indices, ordered by their smallest member."""

    groups: tuple
    per_group_length: tuple = None

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(i) for i in g)) for g in self.groups)
        if any(len(g) == 0 for g in groups):
            raise InvalidPartition("empty group")
        object.__setattr__(self, "groups", tuple(sorted(groups, key=lambda g: g[0])))

    @classmethod
    def from_labels(cls, labels):
        labels = np.asarray(labels)
        groups = {}
        for i, lab in enumerate(labels.tolist()):
            groups.setdefault(lab, []).append(i)
        return cls(tuple(groups.values()))

    @classmethod
    def singletons(cls, m):
        return cls(tuple((i,) for i in range(m)))

    @property
    def sizes(self):
        return [len(g) for g in self.groups]

    def __len__(self):
        return len(self.groups)

    def labels(self):
        """Canonical labels: group ``k`` is the k-th group by smallest member."""
        m = sum(self.sizes)
        out = np.empty(m, dtype=np.int64)
        for k, g in enumerate(self.groups):
            out[list(g)] = k
        return out

    def validate(self, m):
        seen = np.zeros(m, dtype=bool)
        for g in self.groups:
            for i in g:
                if i < 0 or i >= m:
                    raise InvalidPartition(f"index {i} outside 0..{m - 1}")
                if seen[i]:
                    raise InvalidPartition(f"index {i} appears in more than one group")
                seen[i] = True
        if not seen.all():
            missing = np.flatnonzero(~seen)[:5].tolist()
            raise InvalidPartition(f"indices not covered: {missing}")


@dataclass
class SegmentationResult:
    partition: Partition
    total_length: float
    epsilon: float
    merge_trace: list = field(default_factory=list)  # (slot_a, slot_b, delta_bits)

    @property
    def n_groups(self):
        return len(self.partition)

    def labels(self):
        return self.partition.labels()


def membership_bits(size, m):
    """Entropy-code cost ``size * -log2(size / m)`` (vectorized)."""
    size = np.asarray(size, dtype=np.float64)
    return -size * np.log2(size / m)


def _group_length(W, members, eps):
    return coding_length_with_mean(W[:, list(members)], eps)


def segmented_coding_length(W, partition, eps):
    """Total bits of ``W`` coded group-by-group under ``partition``."""
    W = as_data_matrix(W)
    eps = check_distortion(eps)
    m = W.shape[1]
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    partition.validate(m)
    total = 0.0
    for g in partition.groups:
        total += _group_length(W, g, eps) + float(membership_bits(len(g), m))
    return total


def merge_gain(W, partition, i, j, eps):
    """Change in total length when groups ``i`` and ``j`` are merged.

    Group ids index ``partition.groups``. Negative means merging shortens
    the code.
    """
    W = as_data_matrix(W)
    eps = check_distortion(eps)
    m = W.shape[1]
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    k = len(partition.groups)
    for g in (i, j):
        if not (isinstance(g, (int, np.integer)) and 0 <= g < k):
            raise InvalidGroup(f"unknown group id {g!r}")
    if i == j:
        raise InvalidGroup("cannot merge a group with itself")
    partition.validate(m)
    gi, gj = partition.groups[i], partition.groups[j]
    before = (_group_length(W, gi, eps) + float(membership_bits(len(gi), m))
              + _group_length(W, gj, eps) + float(membership_bits(len(gj), m)))
    union = gi + gj
    after = _group_length(W, union, eps) + float(membership_bits(len(union), m))
    return after - before


def segment_greedy(W, eps, use_numba=None):
    """Pairwise steepest descent of the segmented coding length.

    Starts from singletons and repeatedly merges the pair whose union
    shortens the total code the most, stopping when no merge helps. Group
    moments (count, mean, centered scatter) are updated in closed form and
    only the gain-table row and column of the merged group are recomputed.
    Exact ties go to the pair with the smallest (first, second) smallest
    member index.
    """
    W = as_data_matrix(W)
    eps = check_distortion(eps)
    n, m = W.shape
    eps2 = eps * eps

    counts = np.ones(m, dtype=np.int64)
    means = np.array(W.T, order="C")  # copy: rows are updated in place
    scatters = np.zeros((m, n, n))
    base = _kernels.moment_lengths(counts, means, scatters, eps2)
    member = membership_bits(counts, m)

    gains = np.full((m, m), np.inf)
    if m > 1:
        ia, ib = np.triu_indices(m, 1)
        merged = _kernels.merged_lengths(counts, means, scatters, ia, ib, eps2, use_numba)
        gains[ia, ib] = (merged + membership_bits(counts[ia] + counts[ib], m)
                         - base[ia] - member[ia] - base[ib] - member[ib])

    alive = np.ones(m, dtype=bool)
    trace = []
    n_alive = m
    while n_alive > 1:
        flat = int(np.argmin(gains))
        a, b = divmod(flat, m)
        delta = gains[a, b]
        if not delta < 0.0:
            break
        # merge slot b into slot a (a < b keeps slot id == smallest member)
        ca, cb = counts[a], counts[b]
        c = ca + cb
        diff = means[b] - means[a]
        scatters[a] = scatters[a] + scatters[b] + (ca * cb / c) * np.outer(diff, diff)
        means[a] = means[a] + diff * (cb / c)
        counts[a] = c
        alive[b] = False
        n_alive -= 1
        gains[b, :] = np.inf
        gains[:, b] = np.inf
        base[a] = _kernels.moment_lengths(counts[a:a + 1], means[a:a + 1], scatters[a:a + 1], eps2)[0]
        member[a] = membership_bits(c, m)
        trace.append((int(a), int(b), float(delta)))

        others = np.flatnonzero(alive)
        others = others[others != a]
        if others.size:
            ia = np.minimum(others, a)
            ib = np.maximum(others, a)
            merged = _kernels.merged_lengths(counts, means, scatters, ia, ib, eps2, use_numba)
            gains[ia, ib] = (merged + membership_bits(counts[ia] + counts[ib], m)
                             - base[ia] - member[ia] - base[ib] - member[ib])

    owner = np.arange(m)
    for a, b, _ in trace:
        owner[owner == b] = a
    partition = Partition.from_labels(owner)
    lengths = tuple(_group_length(W, g, eps) for g in partition.groups)
    partition = Partition(partition.groups, lengths)
    total = sum(L + float(membership_bits(len(g), m)) for L, g in zip(lengths, partition.groups))
    return SegmentationResult(partition, total, eps, trace)


def _subset_table(W, eps):
    n, m = W.shape
    table = np.empty(1 << m)
    table[0] = 0.0
    for mask in range(1, 1 << m):
        members = [i for i in range(m) if mask >> i & 1]
        table[mask] = _group_length(W, members, eps) + float(membership_bits(len(members), m))
    return table


def segment_bruteforce(W, eps, max_m=BRUTEFORCE_MAX_M, use_numba=None):
    """Globally optimal partition by enumerating every set partition.

    Feasible only for small ``m`` (Bell-number growth). Among exactly equal
    totals the lexicographically smallest canonical label string wins.
    """
    W = as_data_matrix(W)
    eps = check_distortion(eps)
    m = W.shape[1]
    if m > max_m:
        raise TooManySamples(f"brute force limited to m <= {max_m}, got {m}")
    table = _subset_table(W, eps)
    labels, _ = _kernels.rgs_search(table, m, use_numba)
    partition = Partition.from_labels(labels)
    lengths = tuple(_group_length(W, g, eps) for g in partition.groups)
    partition = Partition(partition.groups, lengths)
    total = sum(L + float(membership_bits(len(g), m)) for L, g in zip(lengths, partition.groups))
    return SegmentationResult(partition, total, eps, [])


@dataclass
class DistortionSelection:
    eps_star: float
    grid: list
    objectives: list
    results: list


def distortion_objective(result, n, m):
    """Segmented length plus the ``m n log2 eps`` residual penalty."""
    return result.total_length + m * n * np.log2(result.epsilon)


def select_distortion(W, eps_grid, use_numba=None):
    """Pick the grid distortion minimizing ``L^s(eps) + m n log2(eps)``.

    Ties go to the earliest grid entry.
    """
    W = as_data_matrix(W)
    grid = [check_distortion(e) for e in (eps_grid or [])]
    if not grid:
        raise InvalidInput("distortion grid is empty")
    n, m = W.shape
    results = [segment_greedy(W, e, use_numba) for e in grid]
    objectives = [float(distortion_objective(r, n, m)) for r in results]
    best = int(np.argmin(objectives))
    return DistortionSelection(grid[best], grid, objectives, results)
