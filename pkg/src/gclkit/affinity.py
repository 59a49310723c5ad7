"""Affinity matrices over flattened representation batches.

A +1 entry pulls two batch entries together, a -1 pushes them apart, 0 means
the pair does not participate. Rows follow the canonical flattened order of
the batch (labeled entries by (index, slot), then unlabeled). Four built-in
constructors cover the standard supervised/unsupervised loss instances:

  type 1 — disjoint positive/negative pairs (Siamese-style),
  type 2 — one positive and one negative per anchor (triplet-style),
  type 3 — query rows against all second-slot entries (episode/prototypical),
  type 4 — every entry against all others (NT-Xent style),

plus the labeled+unlabeled block layout used for semi-supervised batches.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AffinityMatrix:
    a: np.ndarray  # (M, M)
    n_labeled: int
    n_unlabeled: int = 0

    @property
    def size(self):
        return self.a.shape[0]


@dataclass(frozen=True)
class AnchorMask:
    """Rows with nonempty positive support; the others contribute no ratio term."""

    active: np.ndarray  # (M,) bool

    @property
    def count(self):
        return int(self.active.sum())


def _flat(i, k):
    # 0-based class index, 0-based slot
    return 2 * i + k


def type1_affinity(n):
    """Disjoint pairs: (i,1)-(i,2) positive, (i,2)-(i+1 mod N,1) negative."""
    if n < 2:
        raise ValueError("type 1 needs N >= 2 (no negative pair otherwise)")
    a = np.zeros((2 * n, 2 * n))
    for i in range(n):
        a[_flat(i, 0), _flat(i, 1)] = 1.0
        a[_flat(i, 1), _flat((i + 1) % n, 0)] = -1.0
    return AffinityMatrix(a, n)


def type2_affinity(n):
    """Triplets: cross-slot same class positive, cross-slot next class negative."""
    if n < 2:
        raise ValueError("type 2 needs N >= 2 (no negative pair otherwise)")
    a = np.zeros((2 * n, 2 * n))
    for i in range(n):
        j = (i + 1) % n
        a[_flat(i, 0), _flat(i, 1)] = 1.0
        a[_flat(i, 1), _flat(i, 0)] = 1.0
        a[_flat(i, 0), _flat(j, 1)] = -1.0
        a[_flat(i, 1), _flat(j, 0)] = -1.0
    return AffinityMatrix(a, n)


def type3_affinity(n):
    """Episode layout: each slot-1 query vs all slot-2 entries, own class positive."""
    if n < 1:
        raise ValueError("N >= 1 required")
    a = np.zeros((2 * n, 2 * n))
    for i in range(n):
        for j in range(n):
            a[_flat(i, 0), _flat(j, 1)] = 1.0 if i == j else -1.0
    return AffinityMatrix(a, n)


episode_affinity = type3_affinity


def type4_affinity(n):
    """NT-Xent layout: own other view positive, self zero, everything else negative."""
    if n < 1:
        raise ValueError("N >= 1 required")
    a = -np.ones((2 * n, 2 * n))
    for i in range(n):
        a[_flat(i, 0), _flat(i, 1)] = 1.0
        a[_flat(i, 1), _flat(i, 0)] = 1.0
        a[_flat(i, 0), _flat(i, 0)] = 0.0
        a[_flat(i, 1), _flat(i, 1)] = 0.0
    return AffinityMatrix(a, n)


ntxent_affinity = type4_affinity


def semi_affinity(n_labeled, n_unlabeled, relaxed_unlabeled=False):
    """Block layout for mixed batches.

    Labeled-labeled and unlabeled-unlabeled blocks follow the type-4 layout;
    every cross-group pair is negative. With ``relaxed_unlabeled``, distinct
    unlabeled samples are ignored (0) instead of repelled (-1).
    """
    if n_labeled < 0 or n_unlabeled < 0 or n_labeled + n_unlabeled < 1:
        raise ValueError("need at least one sample overall")
    if n_unlabeled == 0:
        return AffinityMatrix(type4_affinity(n_labeled).a, n_labeled, 0)
    if n_labeled == 0:
        return AffinityMatrix(type4_affinity(n_unlabeled).a, 0, n_unlabeled)
    m0, m1 = 2 * n_labeled, 2 * n_unlabeled
    a = -np.ones((m0 + m1, m0 + m1))
    a[:m0, :m0] = type4_affinity(n_labeled).a
    block = type4_affinity(n_unlabeled).a
    if relaxed_unlabeled:
        block = np.where(block < 0, 0.0, block)
    a[m0:, m0:] = block
    return AffinityMatrix(a, n_labeled, n_unlabeled)


def validate(affinity, batch, allow_general=False):
    """Check matrix/batch consistency and mark anchors with no positive support.

    ``allow_general`` admits real-valued affinities (complete-form evaluation);
    otherwise entries must be in {-1, 0, +1}.
    """
    a = affinity.a
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("affinity must be a square matrix")
    if batch is not None and a.shape[0] != batch.size:
        raise ValueError(f"affinity size {a.shape[0]} != batch size {batch.size}")
    if not allow_general and not np.all(np.isin(a, (-1.0, 0.0, 1.0))):
        raise ValueError("affinity entries must be in {-1, 0, +1}")
    return AnchorMask(active=(a > 0).any(axis=1))


def save_affinity(path, affinity):
    """Plain-text grid: one row per line, space-separated entries."""
    with open(path, "w") as fh:
        for row in affinity.a:
            fh.write(" ".join(format(v, "g") for v in row) + "\n")


def load_affinity(path, n_labeled=None, n_unlabeled=0):
    a = np.loadtxt(path, ndmin=2)
    if n_labeled is None:
        n_labeled = a.shape[0] // 2 - n_unlabeled
    return AffinityMatrix(a, n_labeled, n_unlabeled)
