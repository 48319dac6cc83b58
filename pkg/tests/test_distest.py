"""
Tests for the hybrid password-probability estimator.
"""

import numpy as np
import pytest

from c3py import ArtifactError, ConfigurationError, DatasetMode, EmptyInputError, HybridEstimator, LeakDataset, train_estimator
from c3py.api.distest import ALPHABET, END, train_histogram, train_ngram


class TestHistogram:
    """Tests for the exact head."""

    def test_head_probabilities(self, password_leak):
        """Test that head passwords get their empirical frequency."""
        estimator = train_estimator(password_leak, t=3)
        total = password_leak.total
        assert estimator.estimate("123456") == pytest.approx(40 / total)
        assert estimator.estimate("password") == pytest.approx(25 / total)
        assert estimator.head_mass == pytest.approx(77 / total)

    def test_order_ties_lexicographic(self):
        """Test count-descending, then lexicographic ordering."""
        histogram = train_histogram({"b": 2, "a": 2, "c": 5}, t=3)
        assert histogram.passwords == ["c", "a", "b"]

    def test_empty_rejected(self):
        """Test that an empty corpus cannot be trained on."""
        with pytest.raises(EmptyInputError):
            train_histogram({}, t=3)
        with pytest.raises(EmptyInputError):
            train_ngram([])


class TestNGram:
    """Tests for the smoothed n-gram tail."""

    def test_conditionals_sum_to_one(self):
        """Test every context's distribution is normalized."""
        model = train_ngram({"abc": 3, "abd": 1}, smoothing=0.01)
        for context in ["\x02\x02", "\x02a", "ab", "zz"]:
            assert model.distribution(context).sum() == pytest.approx(1.0)
            total = sum(model.conditional(context, s) for s in ALPHABET + END)
            assert total == pytest.approx(1.0)

    def test_unseen_positive(self):
        """Test that smoothing keeps unseen strings positive."""
        model = train_ngram(["hello"], smoothing=0.01)
        assert model.prob("zzzz") > 0
        assert model.prob("hello") > model.prob("hellp")

    def test_unmodelled_characters_skipped(self):
        """Test that a password outside the alphabet leaves the model normalized."""
        model = train_ngram({"päss": 5, "pass": 1}, smoothing=0.01)
        for context in ["\x02\x02", "\x02p", "pa", "pä"]:
            assert model.distribution(context).sum() == pytest.approx(1.0)
            total = sum(model.conditional(context, s) for s in ALPHABET + END)
            assert total == pytest.approx(1.0)
        assert model.counts["\x02p"] == {"a": 1}

    def test_sample_after_unmodelled_corpus(self):
        """Test that tail sampling works when the head holds unmodelled passwords."""
        leak = LeakDataset(DatasetMode.PASSWORD, {"päss": 5, "pass": 1})
        draws = train_estimator(leak, t=1).sample(50, seed=1)
        assert len(draws) == 50
        assert all(set(w) <= set(ALPHABET) for w in draws)


class TestHybridEstimator:
    """Tests for the combined estimator."""

    def test_tail_positive_and_below_head(self, password_leak):
        """Test that tail passwords get small positive estimates."""
        estimator = train_estimator(password_leak, t=5)
        p = estimator.estimate("never-leaked-xyz")
        assert 0 < p < estimator.estimate("dragon")

    def test_out_of_alphabet_positive(self, password_leak):
        """Test that characters outside the alphabet still estimate positive."""
        estimator = train_estimator(password_leak, t=5)
        assert estimator.estimate("pässword") > 0

    def test_head_covers_corpus(self):
        """Test the tail stays positive when the head holds every password."""
        estimator = train_estimator(LeakDataset.from_passwords(["a", "b", "a"]), t=10)
        assert estimator.estimate("c") > 0

    def test_top_q(self, password_leak):
        """Test top_q over the head and with a domain."""
        estimator = train_estimator(password_leak, t=5)
        assert estimator.top_q(2) == ["123456", "password"]
        with pytest.raises(ConfigurationError):
            estimator.top_q(6)
        ranked = estimator.top_q(6, domain=["hunter2"])
        assert ranked[:5] == estimator.top_q(5)
        assert ranked[5] == "hunter2"

    def test_sample_deterministic(self, password_leak):
        """Test that a fixed seed reproduces samples."""
        estimator = train_estimator(password_leak, t=5)
        assert estimator.sample(20, seed=4) == estimator.sample(20, seed=4)

    def test_sample_follows_model(self):
        """Test that samples of a one-password corpus are mostly that password."""
        estimator = train_estimator(LeakDataset.from_passwords(["abc"] * 50), t=1, smoothing=1e-6)
        draws = estimator.sample(200, seed=1)
        assert np.mean([d == "abc" for d in draws]) > 0.9


class TestEstimatorArtifact:
    """Tests for save/load and the content digest."""

    def test_save_load_same_digest(self, password_leak, temp_dir):
        """Test that a loaded estimator answers identically."""
        estimator = train_estimator(password_leak, t=5)
        path = temp_dir / "estimator.bin"
        estimator.save(path)
        loaded = HybridEstimator.load(path)
        assert loaded.digest == estimator.digest
        for w in ["123456", "hunter2", "unseen!"]:
            assert loaded.estimate(w) == pytest.approx(estimator.estimate(w), rel=1e-12)

    def test_digest_depends_on_training(self, password_leak):
        """Test that different parameters give different digests."""
        a = train_estimator(password_leak, t=5)
        b = train_estimator(password_leak, t=4)
        assert a.digest != b.digest
        assert a.digest == train_estimator(password_leak, t=5).digest

    def test_tampered_rejected(self, password_leak, temp_dir):
        """Test that a modified body fails the digest check."""
        data = bytearray(train_estimator(password_leak, t=5).to_bytes())
        data[-1] ^= 0x01
        with pytest.raises(ArtifactError):
            HybridEstimator.from_bytes(bytes(data))

    def test_bad_magic_rejected(self):
        """Test that arbitrary bytes are rejected."""
        with pytest.raises(ArtifactError):
            HybridEstimator.from_bytes(b"not an estimator artifact at all....................")
