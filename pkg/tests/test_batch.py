import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gclkit import batch as batching
from gclkit.synth import LabeledDataset

from conftest import random_augmented_batch, random_prototype_batch


def toy_dataset(n_classes=4, per_class=5, f=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), per_class)
    return LabeledDataset(rng.normal(size=(n_classes * per_class, f)), labels)


class TestTwoStepSample:
    def test_shapes_and_distinct_classes(self):
        mb = batching.two_step_sample(toy_dataset(), 3, 2, np.random.default_rng(0))
        assert mb.samples.shape == (3, 2, 3)
        assert len(np.unique(mb.labels)) == 3

    def test_single_class_pair_is_exact(self):
        ds = toy_dataset(n_classes=1, per_class=2)
        mb = batching.two_step_sample(ds, 1, 2, np.random.default_rng(0))
        assert sorted(map(tuple, mb.samples[0])) == sorted(map(tuple, ds.features))

    def test_deterministic_under_seed(self):
        ds = toy_dataset()
        a = batching.two_step_sample(ds, 2, 3, np.random.default_rng(42))
        b = batching.two_step_sample(ds, 2, 3, np.random.default_rng(42))
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)

    def test_no_replacement_within_class(self):
        ds = toy_dataset(per_class=3)
        mb = batching.two_step_sample(ds, 2, 3, np.random.default_rng(1))
        for cls in mb.samples:
            assert len({tuple(row) for row in cls}) == 3

    def test_capacity_errors(self):
        ds = toy_dataset(n_classes=2, per_class=2)
        with pytest.raises(batching.CapacityError):
            batching.two_step_sample(ds, 3, 2, np.random.default_rng(0))
        with pytest.raises(batching.CapacityError):
            batching.two_step_sample(ds, 2, 3, np.random.default_rng(0))


class TestPrototypeBatch:
    def test_kprime2_prototype_is_single_support(self):
        enc = np.arange(12, dtype=float).reshape(2, 2, 3)
        rep = batching.build_prototype_batch(enc)
        assert np.array_equal(rep.z[1], enc[0, 1])
        assert np.array_equal(rep.z[3], enc[1, 1])

    def test_kprime3_mean_of_supports(self):
        enc = np.array([[[9.0, 9.0], [1.0, 0.0], [0.0, 1.0]]])
        rep = batching.build_prototype_batch(enc)
        assert np.array_equal(rep.z[1], [0.5, 0.5])

    def test_cardinality_and_tags(self):
        rep = batching.build_prototype_batch(np.random.default_rng(0).normal(size=(2, 2, 4)))
        assert rep.size == 4 and rep.n_labeled == 2 and rep.n_unlabeled == 0
        assert np.array_equal(rep.slots, [1, 2, 1, 2])
        assert np.array_equal(rep.indices, [1, 1, 2, 2])
        assert np.all(rep.groups == 0)

    def test_rejects_kprime1(self):
        with pytest.raises(ValueError):
            batching.build_prototype_batch(np.zeros((2, 1, 3)))

    @given(c=st.floats(-3, 3, allow_nan=False), seed=st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_linearity_under_scaling(self, c, seed):
        enc = np.random.default_rng(seed).normal(size=(3, 3, 4))
        base = batching.build_prototype_batch(enc)
        scaled = batching.build_prototype_batch(c * enc)
        assert np.allclose(scaled.z, c * base.z)


class TestWeightBatch:
    def test_pass_through(self):
        rng = np.random.default_rng(0)
        enc, w = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        rep = batching.build_weight_batch(enc, w)
        assert rep.size == 6
        assert np.array_equal(rep.z[1::2], w)
        assert np.array_equal(rep.z[0::2], enc)

    def test_n1(self):
        rep = batching.build_weight_batch(np.ones((1, 2)), np.zeros((1, 2)))
        assert rep.size == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            batching.build_weight_batch(np.ones((2, 3)), np.ones((2, 4)))

    def test_means_as_weights_match_prototype_batch(self):
        # weight vectors set to the support means give the same embeddings
        # as prototype construction
        enc = np.random.default_rng(3).normal(size=(3, 4, 5))
        proto = batching.build_prototype_batch(enc)
        via_weights = batching.build_weight_batch(enc[:, 0], enc[:, 1:].mean(axis=1))
        assert np.allclose(proto.z, via_weights.z)


class TestAugmentedBatch:
    def test_identity_transforms_equal_views(self):
        samples = np.random.default_rng(0).normal(size=(3, 4))
        rep = batching.build_augmented_batch(samples, lambda x: x, lambda x: x, lambda x: x)
        assert np.array_equal(rep.z[0::2], rep.z[1::2])
        assert rep.n_labeled == 0 and rep.n_unlabeled == 3

    def test_cardinality(self):
        rep = batching.build_augmented_batch(np.zeros((2, 3)), lambda x: x, lambda x: x + 1,
                                             lambda x: x)
        assert rep.size == 4

    def test_deterministic_under_seed(self):
        samples = np.random.default_rng(0).normal(size=(4, 3))

        def build(seed):
            rng = np.random.default_rng(seed)
            noise = lambda x: x + rng.normal(size=x.shape)
            return batching.build_augmented_batch(samples, noise, noise, lambda x: x)

        assert np.array_equal(build(7).z, build(7).z)


class TestMergeAndSplit:
    def test_empty_unlabeled_returns_labeled(self, rng):
        rep = random_prototype_batch(rng)
        empty = batching.RepresentationBatch(
            z=np.zeros((0, rep.dim)), groups=np.zeros(0, int), indices=np.zeros(0, int),
            slots=np.zeros(0, int), n_labeled=0, n_unlabeled=0)
        assert batching.merge_semi_batch(rep, empty) is rep

    def test_cardinality(self, rng):
        merged = batching.merge_semi_batch(random_prototype_batch(rng, n=2, d=4),
                                           random_augmented_batch(rng, n=3, d=4))
        assert merged.size == 10
        assert merged.n_labeled == 2 and merged.n_unlabeled == 3

    def test_round_trip_split(self, rng):
        z0 = random_prototype_batch(rng, n=3, d=5)
        z1 = random_augmented_batch(rng, n=2, d=5)
        back0, back1 = batching.merge_semi_batch(z0, z1).split_by_group()
        for orig, back in ((z0, back0), (z1, back1)):
            assert np.array_equal(orig.z, back.z)
            assert np.array_equal(orig.indices, back.indices)
            assert orig.sources == back.sources
            assert orig.n_source_rows == back.n_source_rows

    def test_rejects_mixed_or_mismatched(self, rng):
        z0 = random_prototype_batch(rng, n=2, d=4)
        z1 = random_augmented_batch(rng, n=2, d=5)
        with pytest.raises(ValueError, match="dims"):
            batching.merge_semi_batch(z0, z1)
        with pytest.raises(ValueError, match="expects"):
            batching.merge_semi_batch(z0, z0)


class TestRepresentationBatchValidation:
    def test_rejects_wrong_cardinality(self):
        with pytest.raises(ValueError, match="2"):
            batching.RepresentationBatch(np.zeros((3, 2)), np.zeros(3, int),
                                         np.ones(3, int), np.ones(3, int), 2, 0)

    def test_rejects_nonfinite(self):
        z = np.zeros((2, 2))
        z[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            batching.RepresentationBatch(z, np.zeros(2, int), np.ones(2, int),
                                         np.array([1, 2]), 1, 0)

    def test_rejects_missing_slot(self):
        with pytest.raises(ValueError, match="slots"):
            batching.RepresentationBatch(np.zeros((2, 2)), np.zeros(2, int),
                                         np.array([1, 2]), np.array([1, 1]), 1, 0)


class TestBackpropToSources:
    def test_prototype_gradient_split(self):
        enc = np.random.default_rng(0).normal(size=(2, 3, 2))
        rep = batching.build_prototype_batch(enc)
        grad_z = np.arange(8, dtype=float).reshape(4, 2)
        out = batching.backprop_to_sources(rep, grad_z)
        assert out.shape == (6, 2)
        # query gradient passes through; each support gets half the prototype's
        assert np.array_equal(out[0], grad_z[0])
        assert np.allclose(out[1], 0.5 * grad_z[1])
        assert np.allclose(out[2], 0.5 * grad_z[1])

    def test_merged_offsets(self, rng):
        z0 = random_prototype_batch(rng, n=2, kp=2, d=3)
        z1 = random_augmented_batch(rng, n=2, d=3)
        merged = batching.merge_semi_batch(z0, z1)
        g = np.ones((merged.size, 3))
        out = batching.backprop_to_sources(merged, g)
        assert out.shape == (z0.n_source_rows + z1.n_source_rows, 3)
        assert np.all(out != 0)

    def test_requires_sources(self):
        rep = batching.RepresentationBatch(np.zeros((2, 2)), np.zeros(2, int),
                                           np.ones(2, int), np.array([1, 2]), 1, 0)
        with pytest.raises(ValueError):
            batching.backprop_to_sources(rep, np.zeros((2, 2)))
