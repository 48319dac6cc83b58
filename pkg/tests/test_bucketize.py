"""
Tests for hash-prefix, identifier-based and frequency-smoothing buckets.
"""

import random

import numpy as np
import pytest

from c3py import (
    ConfigurationError,
    Credential,
    FsbParams,
    HashAlgorithm,
    HpbParams,
    LeakDataset,
    MalformedInputError,
    fsb_interval,
    hash_password,
    hpb_bucket,
    idb_bucket,
    pick_bucket,
    train_estimator,
)
from c3py.api.bucketize import BucketInterval, bw_bound, check_bucket_id
from c3py.api.simlab import ExactDistribution


def zipf_leak(rng: random.Random, n_unique: int, skew: float = 1.0) -> LeakDataset:
    """Leak over n_unique random passwords with Zipf-like multiplicities."""
    words = [f"pw{rng.getrandbits(40):010x}" for _ in range(n_unique)]
    raw = []
    for rank, w in enumerate(words, 1):
        raw.extend([w] * max(1, int(200 / rank ** skew)))
    return LeakDataset.from_passwords(raw)


class TestHashPrefixBuckets:
    """Tests for hpb_bucket and idb_bucket."""

    def test_hibp_bucket_is_prefix(self):
        """Test that 20 SHA1 bits equal the 5-character HIBP prefix."""
        p = HpbParams(20, HashAlgorithm.SHA1)
        assert hpb_bucket("test", p) == 0xA94A8
        assert hpb_bucket("test", p) == int(hash_password("test").digest[:5], 16)

    def test_range(self):
        """Test that buckets fall in [0, 2^l)."""
        p = HpbParams(7, HashAlgorithm.SHA256)
        assert all(0 <= hpb_bucket(f"w{i}", p) < 128 for i in range(500))

    def test_credential_serialization(self):
        """Test that credentials bucket by u || 0x00 || w."""
        p = HpbParams(16, HashAlgorithm.SHA256)
        assert hpb_bucket(Credential("Bob", "pw"), p) == hpb_bucket(b"bob\x00pw", p)

    def test_idb_ignores_password(self):
        """Test that IDB buckets depend on the case-folded username only."""
        p = HpbParams(16, HashAlgorithm.SHA256)
        assert idb_bucket("Alice", p) == idb_bucket("alice", p)
        assert idb_bucket("alice", p) == hpb_bucket(b"alice", p)

    def test_salt_changes_buckets(self):
        """Test that a salt yields a different assignment."""
        plain = HpbParams(16, HashAlgorithm.SHA256)
        salted = HpbParams(16, HashAlgorithm.SHA256, b"salt")
        assert any(hpb_bucket(f"w{i}", plain) != hpb_bucket(f"w{i}", salted) for i in range(10))

    def test_bits_validated(self):
        """Test that l must fit the digest."""
        with pytest.raises(ValueError):
            HpbParams(0)
        with pytest.raises(ValueError):
            HpbParams(161, HashAlgorithm.SHA1)


class TestBucketInterval:
    """Tests for wrap-around runs."""

    def test_covered_wraps(self):
        """Test a run that crosses |B| - 1."""
        interval = BucketInterval(6, 4, 8)
        assert interval.wraps
        assert interval.covered() == [6, 7, 0, 1]
        assert interval.segments() == [(6, 8), (0, 2)]
        assert interval.contains(0) and not interval.contains(2)

    def test_validation(self):
        """Test start and gamma bounds."""
        with pytest.raises(ValueError):
            BucketInterval(8, 1, 8)
        with pytest.raises(ValueError):
            BucketInterval(0, 9, 8)


class TestFsbInterval:
    """Tests for run lengths and starts."""

    def setup_method(self):
        self.estimator = ExactDistribution({"a": 0.5, "b": 0.25, "c": 0.125, "d": 0.0625, "e": 0.0625})

    def test_top_passwords_cover_everything(self):
        """Test that passwords at least as likely as w_qbar get every bucket."""
        p = FsbParams(16, 3, self.estimator)
        assert p.p_qbar == 0.125
        for w in "abc":
            assert len(fsb_interval(w, p)) == 16

    def test_gamma_proportional(self):
        """Test gamma = ceil(|B| p(w) / p(w_qbar))."""
        p = FsbParams(16, 3, self.estimator)
        assert len(fsb_interval("d", p)) == 8

    def test_gamma_floor_one(self):
        """Test that tiny probabilities still get one bucket."""
        estimator = ExactDistribution({"a": 0.999999, "b": 1e-6})
        p = FsbParams(4, 1, estimator)
        assert len(fsb_interval("b", p)) == 1

    def test_start_deterministic_and_salted(self):
        """Test f(w) is fixed per salt and changes with it."""
        p = FsbParams(1024, 3, self.estimator, b"one")
        q = FsbParams(1024, 3, self.estimator, b"two")
        assert fsb_interval("d", p).start == fsb_interval("d", p).start
        assert any(fsb_interval(w, p).start != fsb_interval(w, q).start for w in "de")

    def test_non_power_of_two(self):
        """Test starts for a |B| that is not a power of two."""
        p = FsbParams(10, 3, self.estimator)
        assert all(0 <= fsb_interval(w, p).start < 10 for w in "abcde")

    def test_qbar_beyond_estimator(self):
        """Test that q_bar larger than the ranked set is rejected."""
        with pytest.raises(ConfigurationError):
            FsbParams(16, 6, self.estimator)


class TestPickBucket:
    """Tests for client-side bucket selection."""

    def setup_method(self):
        self.params = FsbParams(64, 2, ExactDistribution({"a": 0.5, "b": 0.3, "c": 0.15, "d": 0.05}))

    def test_random_in_run(self):
        """Test that random picks stay inside the run and reach all of it."""
        interval = fsb_interval("d", self.params)
        rng = np.random.default_rng(1)
        picks = {pick_bucket("d", self.params, "random", rng) for _ in range(400)}
        assert picks == set(interval.covered())

    def test_seeded_reproducible(self):
        """Test that an integer seed reproduces the pick."""
        assert pick_bucket("c", self.params, rng=5) == pick_bucket("c", self.params, rng=5)

    def test_derandomized_stable(self):
        """Test that one cookie always selects the same bucket."""
        cookie = bytes(range(32))
        first = pick_bucket("c", self.params, "derandomized", cookie=cookie)
        assert all(pick_bucket("c", self.params, "derandomized", cookie=cookie) == first for _ in range(10))
        assert fsb_interval("c", self.params).contains(first)

    def test_derandomized_varies_with_cookie(self):
        """Test that different cookies spread over the run."""
        picks = {
            pick_bucket("c", self.params, "derandomized", cookie=bytes([i]) * 32)
            for i in range(64)
        }
        assert len(picks) > 1

    def test_derandomized_needs_cookie(self):
        """Test that derandomized mode without a cookie is rejected."""
        with pytest.raises(ConfigurationError):
            pick_bucket("c", self.params, "derandomized")


class TestBandwidth:
    """Tests for the balls-and-bins bucket-size bound."""

    def test_bucket_id_checked(self):
        """Test the bucket-id range check."""
        assert check_bucket_id(0, 4) == 0
        with pytest.raises(MalformedInputError):
            check_bucket_id(4, 4)

    def _hpb_max(self, rng, n, l):
        p = HpbParams(l, HashAlgorithm.SHA256)
        counts = np.bincount(
            [hpb_bucket(f"{rng.getrandbits(64):x}", p) for _ in range(n)], minlength=2 ** l
        )
        return int(counts.max()), bw_bound("hpb", p, n)

    def _fsb_max(self, leak, num_buckets, q_bar):
        estimator = train_estimator(leak, t=q_bar)
        p = FsbParams(num_buckets, q_bar, estimator)
        load = np.zeros(num_buckets + 1, dtype=np.int64)
        for w in leak.passwords():
            for lo, hi in fsb_interval(w, p).segments():
                load[lo] += 1
                load[hi] -= 1
        return int(np.cumsum(load)[:num_buckets].max()), bw_bound("fsb", p, leak.N)

    def test_hpb_bound(self):
        """Test the HPB bound on small stores."""
        rng = random.Random(31)
        for l in (6, 8):
            observed, bound = self._hpb_max(rng, 20_000, l)
            assert observed <= bound

    def test_fsb_bound(self):
        """Test the FSB bound on small stores."""
        rng = random.Random(32)
        for _ in range(3):
            observed, bound = self._fsb_max(zipf_leak(rng, 2000), 256, 10)
            assert observed <= bound

    @pytest.mark.slow
    def test_bounds_desk_scale(self):
        """Test 20 HPB stores of 10^5 digests and 20 FSB stores."""
        rng = random.Random(33)
        for i in range(20):
            observed, bound = self._hpb_max(rng, 100_000, (8, 10, 12)[i % 3])
            assert observed <= bound
        for _ in range(20):
            observed, bound = self._fsb_max(zipf_leak(rng, 10_000), 1024, 50)
            assert observed <= bound
