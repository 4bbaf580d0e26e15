"""Agglomerative clustering over a precomputed dissimilarity matrix."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Linkage(str, enum.Enum):
    SINGLE = "single"
    AVERAGE = "average"


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    distance: float


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster index per item, numbered 0..k-1 in order of each cluster's lowest item."""

    labels: tuple[int, ...]
    k: int
    merges: tuple[Merge, ...] = ()

    def members(self, cluster: int) -> list[int]:
        return [i for i, c in enumerate(self.labels) if c == cluster]

    def partition(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(self.members(c)) for c in range(self.k))


def cluster_sizes(assignment: ClusterAssignment) -> list[int]:
    sizes = [0] * assignment.k
    for c in assignment.labels:
        sizes[c] += 1
    return sizes


def validate_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"dissimilarity matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("dissimilarity matrix has non-finite entries")
    if not np.array_equal(m, m.T):
        raise ValueError("dissimilarity matrix is not symmetric")
    if np.any(np.diag(m) != 0):
        raise ValueError("dissimilarity matrix must have a zero diagonal")
    return m


def agglomerate(m, k: int, linkage: Linkage | str = Linkage.SINGLE) -> ClusterAssignment:
    """Merge singletons bottom-up until ``k`` clusters remain.

    Each cluster is keyed by its lowest item index. Among pairs at the same
    linkage distance, the pair with the lexicographically smallest
    (lower key, higher key) merges first.
    """
    m = validate_matrix(m)
    linkage = Linkage(linkage)
    n = m.shape[0]
    if not 1 <= k <= max(n, 1) or n == 0:
        raise ValueError(f"k={k} out of range for {n} items")

    # rows/columns are indexed by cluster key; merged-away keys are masked with inf
    sums = m.copy()
    sizes = np.ones(n)
    dist = m.copy()
    active = np.ones(n, dtype=bool)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    dist[~upper] = np.inf
    owner = list(range(n))
    merges = []

    for _ in range(n - k):
        flat = int(np.argmin(dist))
        a, b = divmod(flat, n)
        merges.append(Merge(a, b, float(dist[a, b])))
        if linkage is Linkage.SINGLE:
            sums[a] = np.minimum(sums[a], sums[b])
            sums[:, a] = sums[a]
        else:
            sums[a] += sums[b]
            sums[:, a] = sums[a]
            sizes[a] += sizes[b]
        active[b] = False
        for i in range(n):
            if owner[i] == b:
                owner[i] = a
        dist[b, :] = np.inf
        dist[:, b] = np.inf
        others = np.flatnonzero(active)
        others = others[others != a]
        values = sums[a, others]
        if linkage is Linkage.AVERAGE:
            values = values / (sizes[a] * sizes[others])
        lo = others < a
        dist[others[lo], a] = values[lo]
        dist[a, others[~lo]] = values[~lo]

    relabel: dict[int, int] = {}
    labels = []
    for i in range(n):
        labels.append(relabel.setdefault(owner[i], len(relabel)))
    return ClusterAssignment(tuple(labels), k, tuple(merges))
