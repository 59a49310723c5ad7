"""Representation-batch construction.

A representation batch is a flat list of embeddings tagged with
(group, index, slot): group 0 = labeled, 1 = unlabeled; index is the 1-based
class/sample index within its group; slot is the view index (1 = query/first
view, 2 = prototype/second view). Entries are stored in canonical flattened
order: all labeled entries sorted by (index, slot), then all unlabeled ones.
That flattening is what lets the loss treat every affinity tensor as a plain
square matrix.

Batches also remember how each entry was formed from the encoder outputs that
fed it (``sources``), so loss gradients on entries can be pushed back onto the
individual encodings (e.g. through a prototype mean).
"""

from dataclasses import dataclass, field

import numpy as np


class CapacityError(ValueError):
    """Mini-batch request exceeds what the dataset can supply."""


@dataclass(frozen=True)
class LabeledMiniBatch:
    """N classes x K samples of raw feature vectors."""

    samples: np.ndarray  # (N, K, F)
    labels: np.ndarray  # (N,)


@dataclass(frozen=True)
class UnlabeledMiniBatch:
    samples: np.ndarray  # (N', F)


@dataclass(frozen=True)
class RepresentationBatch:
    z: np.ndarray  # (2*(n_labeled + n_unlabeled), D)
    groups: np.ndarray  # (M,) int, 0 labeled / 1 unlabeled
    indices: np.ndarray  # (M,) int, 1-based within group
    slots: np.ndarray  # (M,) int, 1 or 2
    n_labeled: int
    n_unlabeled: int
    # Per entry: tuple of (source_row, coefficient) into the encoding pool.
    sources: tuple = field(default=None, repr=False)
    n_source_rows: int = 0
    labeled_source_rows: int = 0

    def __post_init__(self):
        m = self.z.shape[0]
        if m != 2 * (self.n_labeled + self.n_unlabeled):
            raise ValueError("entry count must be 2*(N + N')")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("non-finite embedding values")
        tags = list(zip(self.groups.tolist(), self.indices.tolist(), self.slots.tolist()))
        if len(set(tags)) != m:
            raise ValueError("(group, index, slot) tags must be unique")
        for u, i, _ in tags:
            if (u, i, 1) not in tags or (u, i, 2) not in tags:
                raise ValueError(f"both slots required for group={u}, index={i}")

    @property
    def size(self):
        return self.z.shape[0]

    @property
    def dim(self):
        return self.z.shape[1]

    def split_by_group(self):
        """Inverse of merge_semi_batch: recover the labeled and unlabeled parts."""
        lab = self.groups == 0
        off = self.labeled_source_rows
        parts = []
        for mask, n_lab, n_unl, shift, pool in (
            (lab, self.n_labeled, 0, 0, off),
            (~lab, 0, self.n_unlabeled, off, self.n_source_rows - off),
        ):
            idx = np.flatnonzero(mask)
            src = None
            if self.sources is not None:
                src = tuple(
                    tuple((row - shift, c) for row, c in self.sources[i]) for i in idx
                )
            parts.append(
                RepresentationBatch(
                    z=self.z[idx],
                    groups=self.groups[idx],
                    indices=self.indices[idx],
                    slots=self.slots[idx],
                    n_labeled=n_lab,
                    n_unlabeled=n_unl,
                    sources=src,
                    n_source_rows=pool,
                    labeled_source_rows=pool if n_lab else 0,
                )
            )
        return parts[0], parts[1]


def _tags(n, group):
    groups = np.full(2 * n, group, dtype=int)
    indices = np.repeat(np.arange(1, n + 1), 2)
    slots = np.tile([1, 2], n)
    return groups, indices, slots


def two_step_sample(dataset, n, k, rng):
    """Sample N distinct classes, then K samples per class without replacement.

    ``dataset`` needs ``features`` (n_rows, F) and ``labels`` (n_rows,).
    """
    classes, counts = np.unique(dataset.labels, return_counts=True)
    if len(classes) < n:
        raise CapacityError(f"need {n} classes, dataset has {len(classes)}")
    eligible = classes[counts >= k]
    if len(eligible) < n:
        raise CapacityError(f"need {n} classes with >= {k} samples, have {len(eligible)}")
    chosen = rng.choice(eligible, size=n, replace=False)
    samples = np.empty((n, k, dataset.features.shape[1]))
    for row, c in enumerate(chosen):
        idx = np.flatnonzero(dataset.labels == c)
        take = rng.choice(idx, size=k, replace=False)
        samples[row] = dataset.features[take]
    return LabeledMiniBatch(samples=samples, labels=np.asarray(chosen))


def build_prototype_batch(encoded):
    """Queries in slot 1, mean of the remaining K'-1 encodings in slot 2.

    ``encoded``: (N, K', D) embeddings of a labeled mini-batch; the first
    sample of each class is the query.
    """
    encoded = np.asarray(encoded, dtype=float)
    if encoded.ndim != 3 or encoded.shape[1] < 2:
        raise ValueError("expected (N, K', D) with K' >= 2")
    n, kp, d = encoded.shape
    z = np.empty((2 * n, d))
    z[0::2] = encoded[:, 0]
    z[1::2] = encoded[:, 1:].mean(axis=1)
    coeff = 1.0 / (kp - 1)
    sources = []
    for i in range(n):
        sources.append(((i * kp, 1.0),))
        sources.append(tuple((i * kp + j, coeff) for j in range(1, kp)))
    groups, indices, slots = _tags(n, 0)
    return RepresentationBatch(z, groups, indices, slots, n, 0, tuple(sources), n * kp, n * kp)


def build_weight_batch(encoded, weights):
    """Slot 1 = encoding, slot 2 = trainable weight vector (parameter prototype).

    Source rows 0..N-1 are the encodings, N..2N-1 the weight vectors.
    """
    encoded = np.asarray(encoded, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if encoded.shape != weights.shape:
        raise ValueError(f"weights shape {weights.shape} != encodings shape {encoded.shape}")
    n, d = encoded.shape
    z = np.empty((2 * n, d))
    z[0::2] = encoded
    z[1::2] = weights
    sources = []
    for i in range(n):
        sources.append(((i, 1.0),))
        sources.append(((n + i, 1.0),))
    groups, indices, slots = _tags(n, 0)
    return RepresentationBatch(z, groups, indices, slots, n, 0, tuple(sources), 2 * n, 2 * n)


def build_augmented_batch(samples, t1, t2, encode):
    """Two augmented views per unlabeled sample, encoded into slots 1 and 2.

    ``t1``/``t2`` are per-sample transforms (already drawn from the
    augmentation family); ``encode`` maps (M, F) features to (M, D) embeddings.
    """
    if isinstance(samples, UnlabeledMiniBatch):
        samples = samples.samples
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    views = np.empty((2 * n, samples.shape[1]))
    for i in range(n):
        views[2 * i] = t1(samples[i])
        views[2 * i + 1] = t2(samples[i])
    z = np.asarray(encode(views), dtype=float)
    sources = tuple(((i, 1.0),) for i in range(2 * n))
    groups, indices, slots = _tags(n, 1)
    return RepresentationBatch(z, groups, indices, slots, 0, n, sources, 2 * n)


def merge_semi_batch(z0, z1):
    """Union of a labeled and an unlabeled batch, labeled entries first."""
    if z1.size == 0:
        return z0
    if z0.size == 0:
        return z1
    if z0.n_unlabeled or z1.n_labeled:
        raise ValueError("merge expects an all-labeled batch then an all-unlabeled one")
    if z0.dim != z1.dim:
        raise ValueError(f"embedding dims differ: {z0.dim} vs {z1.dim}")
    sources = None
    if z0.sources is not None and z1.sources is not None:
        off = z0.n_source_rows
        sources = z0.sources + tuple(
            tuple((row + off, c) for row, c in entry) for entry in z1.sources
        )
    return RepresentationBatch(
        z=np.vstack([z0.z, z1.z]),
        groups=np.concatenate([z0.groups, z1.groups]),
        indices=np.concatenate([z0.indices, z1.indices]),
        slots=np.concatenate([z0.slots, z1.slots]),
        n_labeled=z0.n_labeled,
        n_unlabeled=z1.n_unlabeled,
        sources=sources,
        n_source_rows=z0.n_source_rows + z1.n_source_rows,
        labeled_source_rows=z0.n_source_rows,
    )


def backprop_to_sources(batch, grad_z):
    """Push per-entry gradients back onto the encoding pool rows."""
    if batch.sources is None:
        raise ValueError("batch carries no source bookkeeping")
    out = np.zeros((batch.n_source_rows, batch.dim))
    for entry, g in zip(batch.sources, grad_z):
        for row, coeff in entry:
            out[row] += coeff * g
    return out
