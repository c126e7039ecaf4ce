"""Toy engine: training math, determinism, persistence."""
import numpy as np
import pytest

from classifier_worker import BUCKETS, ToyEngine, WorkerError, featurize

from pool_fixtures import LABELS, separable_pool


class TestFeatures:
    def test_counts_are_normalized(self):
        feats = featurize("good good bad")
        assert sum(feats.values()) == pytest.approx(1.0)
        assert len(feats) == 2

    def test_empty_text_has_no_features(self):
        assert featurize("   ") == {}

    def test_case_folding(self):
        assert featurize("Good") == featurize("good")

    def test_buckets_in_range(self):
        for token in ("a", "zebra", "unusually-long-token-xyz"):
            (bucket,) = featurize(token).keys()
            assert 0 <= bucket < BUCKETS


class TestRefine:
    def test_separable_pool_loss_decreases(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        result = engine.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=3)
        assert result["model_version"] == 1
        assert result["train_loss_after"] < result["train_loss_before"]

    def test_zero_epochs_bumps_version_only(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        result = engine.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=0)
        assert result["model_version"] == 1
        assert result["train_loss_after"] == result["train_loss_before"]

    def test_loss_non_increasing_across_cycles(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        losses = []
        for _ in range(5):
            r = engine.refine(pool50, learning_rate=1e-2, weight_decay=0.0, epochs=1)
            losses.append((r["train_loss_before"], r["train_loss_after"]))
        # continue-from-latest: each cycle starts where the last one ended
        for (_, after), (before, _) in zip(losses, losses[1:]):
            assert before == after
        flat = [losses[0][0]] + [after for _, after in losses]
        assert all(b >= a for b, a in zip(flat, flat[1:]))

    def test_same_seed_same_pool_identical(self, pool50):
        a = ToyEngine(LABELS, seed=7)
        b = ToyEngine(LABELS, seed=7)
        ra = a.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=3)
        rb = b.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=3)
        assert ra == rb
        assert np.array_equal(a._weights, b._weights)
        assert a.predict([s["text"] for s in pool50]) == b.predict(
            [s["text"] for s in pool50]
        )

    def test_different_seeds_differ(self, pool50):
        a = ToyEngine(LABELS, seed=0)
        b = ToyEngine(LABELS, seed=1)
        assert not np.array_equal(a._weights, b._weights)

    def test_reset_mode_retrains_from_base(self, pool50):
        engine = ToyEngine(LABELS, seed=0, reset_each_refine=True)
        r1 = engine.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=3)
        r2 = engine.refine(pool50, learning_rate=2e-5, weight_decay=0.01, epochs=3)
        assert r2["model_version"] == 2
        assert (r2["train_loss_before"], r2["train_loss_after"]) == (
            r1["train_loss_before"],
            r1["train_loss_after"],
        )

    def test_training_actually_learns(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        engine.refine(pool50, learning_rate=5.0, weight_decay=0.0, epochs=200)
        predictions = engine.predict([s["text"] for s in pool50])
        right = sum(1 for p, s in zip(predictions, pool50) if p[0] == s["label"])
        assert right == len(pool50)

    def test_unknown_label_rejected_without_version_bump(self):
        engine = ToyEngine(LABELS, seed=0)
        with pytest.raises(WorkerError):
            engine.refine([{"text": "x", "label": "spicy"}])
        assert engine.model_version == 0

    def test_empty_pool_rejected(self):
        engine = ToyEngine(LABELS, seed=0)
        with pytest.raises(WorkerError):
            engine.refine([])

    def test_bad_hyperparameters_rejected(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        with pytest.raises(WorkerError):
            engine.refine(pool50, learning_rate=0.0)
        with pytest.raises(WorkerError):
            engine.refine(pool50, epochs=-1)


class TestPredict:
    def test_pure_in_model_version(self):
        engine = ToyEngine(LABELS, seed=0)
        first = engine.predict(["some fixed text"] * 3)
        assert first[0] == first[1] == first[2]
        assert engine.predict(["some fixed text"]) == [first[0]]

    def test_confidence_in_range_and_version_changes_output(self, pool50):
        engine = ToyEngine(LABELS, seed=0)
        before = engine.predict(["wonderful delightful superb"])
        assert 0.0 < before[0][1] <= 1.0
        engine.refine(pool50, learning_rate=1.0, weight_decay=0.0, epochs=20)
        after = engine.predict(["wonderful delightful superb"])
        assert after != before
        assert after[0][0] == "positive"


class TestCheckpoint:
    def test_version_and_weights_survive_restart(self, tmp_path, pool50):
        first = ToyEngine(LABELS, seed=0, checkpoint_dir=tmp_path)
        first.refine(pool50, learning_rate=1e-2, weight_decay=0.0, epochs=2)
        assert first.model_version == 1

        reborn = ToyEngine(LABELS, seed=0, checkpoint_dir=tmp_path)
        assert reborn.model_version == 1
        assert np.array_equal(reborn._weights, first._weights)
        assert reborn.predict(["average ordinary plain"]) == first.predict(
            ["average ordinary plain"]
        )

    def test_mismatched_checkpoint_refused(self, tmp_path, pool50):
        ToyEngine(LABELS, seed=0, checkpoint_dir=tmp_path).refine(pool50)
        with pytest.raises(WorkerError):
            ToyEngine(LABELS, seed=1, checkpoint_dir=tmp_path)
        with pytest.raises(WorkerError):
            ToyEngine(("up", "down", "flat"), seed=0, checkpoint_dir=tmp_path)

    def test_fresh_dir_starts_at_zero(self, tmp_path):
        engine = ToyEngine(LABELS, seed=0, checkpoint_dir=tmp_path / "new")
        assert engine.model_version == 0
