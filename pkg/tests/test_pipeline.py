"""
Tests for the offline hash pipeline: ingest, prefix length, buckets.
"""

import random

import pytest

from c3py import (
    EmptyInputError,
    HashAlgorithm,
    MalformedInputError,
    bucket_stats,
    hash_password,
    min_prefix_length,
    populate_buckets,
    preprocess,
)
from c3py._io.kvstore import SqliteStore
from c3py.api.core import common_prefix_length
from c3py.api.pipeline import (
    SortedHashStream,
    bucket_stats_from_store,
    iter_buckets,
    write_bucket_files,
    write_bucket_store,
)


def random_digests(rng: random.Random, n: int, bits: int = 160) -> list:
    width = bits // 4
    return [f"{rng.getrandbits(bits):0{width}X}" for _ in range(n)]


def brute_force_prefix_length(digests) -> int:
    """min over digests of the longest prefix shared with any other digest."""
    best = None
    for i, a in enumerate(digests):
        shared = max(common_prefix_length(a, b) for j, b in enumerate(digests) if j != i)
        best = shared if best is None else min(best, shared)
    return best


def clustered_digests(rng: random.Random, n: int) -> list:
    """At least n digests sharing long prefixes in clusters of two to four."""
    out = set()
    while len(out) < n:
        stem = f"{rng.getrandbits(32):08X}"
        for _ in range(rng.randint(2, 4)):
            out.add(stem + f"{rng.getrandbits(128):032X}")
    return sorted(out)


class TestPreprocess:
    """Tests for sorting and de-duplication."""

    def test_sorts_and_dedupes(self):
        """Test that output is sorted, unique and uppercase."""
        lines = ["b" * 40, "A" * 40, "a" * 40, "", "  " + "C" * 40 + "  "]
        stream = preprocess(lines)
        assert list(stream) == ["A" * 40, "B" * 40, "C" * 40]
        assert stream.algorithm is HashAlgorithm.SHA1
        assert stream.sorted_unique

    def test_external_merge_matches_in_memory(self, temp_dir):
        """Test that spilling runs to disk gives the same output."""
        rng = random.Random(3)
        digests = random_digests(rng, 500)
        lines = digests + digests[:100]
        rng.shuffle(lines)
        stream = preprocess(lines, chunk_size=37, tmp_dir=temp_dir)
        try:
            assert list(stream) == sorted(set(digests))
        finally:
            stream.close()
        assert not list(temp_dir.glob("c3run-*"))

    def test_output_file(self, temp_dir):
        """Test that the merged result can be written to a named file."""
        out = temp_dir / "sorted.txt"
        rng = random.Random(5)
        digests = random_digests(rng, 50)
        preprocess(digests, chunk_size=10, output=out)
        assert out.read_text().split() == sorted(digests)

    def test_strict_reports_line(self):
        """Test that a malformed line fails with its line number."""
        with pytest.raises(MalformedInputError) as info:
            preprocess(["A" * 40, "NOTHEX", "B" * 40])
        assert info.value.line_number == 2

    def test_mixed_widths_rejected(self):
        """Test that SHA1 and SHA-256 digests cannot be mixed."""
        with pytest.raises(MalformedInputError):
            preprocess(["A" * 40, "B" * 64])

    def test_lenient_skips(self):
        """Test lenient mode counts skipped lines."""
        stream = preprocess(["A" * 40, "bad", "B" * 40], strict=False)
        assert list(stream) == ["A" * 40, "B" * 40]
        assert stream.skipped == 1

    def test_from_sorted_file_verifies_order(self, temp_dir):
        """Test that an unsorted file is caught while streaming."""
        path = temp_dir / "unsorted.txt"
        path.write_text("B" * 40 + "\n" + "A" * 40 + "\n")
        with pytest.raises(MalformedInputError):
            list(SortedHashStream.from_sorted_file(path))


class TestMinPrefixLength:
    """Tests for the minimal k-anonymous prefix length."""

    def test_three_digests(self):
        """Test the smallest accepted corpus."""
        digests = ["AB" + "0" * 38, "AC" + "0" * 38, "B" + "0" * 39]
        assert min_prefix_length(digests) == 0

    def test_edge_elements_count(self):
        """Test that the first and last digests contribute their one neighbour."""
        digests = ["ABC0" + "0" * 36, "ABC1" + "0" * 36, "ABC2" + "0" * 36]
        assert min_prefix_length(digests) == 3
        assert brute_force_prefix_length(digests) == 3

    def test_rejects_short_input(self):
        """Test that fewer than three digests are rejected."""
        with pytest.raises(EmptyInputError):
            min_prefix_length(["A" * 40, "B" * 40])

    def test_rejects_unsorted(self):
        """Test that an out-of-order stream is rejected."""
        with pytest.raises(MalformedInputError):
            min_prefix_length(["B" * 40, "A" * 40, "C" * 40])

    def test_matches_brute_force(self):
        """Test equality with the quadratic oracle on random corpora."""
        rng = random.Random(11)
        for trial in range(20):
            n = rng.randint(10, 300)
            digests = sorted(set(clustered_digests(rng, n) if trial % 2 else random_digests(rng, n)))
            assert min_prefix_length(digests) == brute_force_prefix_length(digests)

    def test_diversity_at_L_and_minimality_at_L_plus_1(self):
        """Test every bucket holds two digests at L and some bucket one at L+1."""
        rng = random.Random(12)
        digests = sorted(set(clustered_digests(rng, 200)))
        L = min_prefix_length(digests)
        assert min(len(b) for b in populate_buckets(digests, L).values()) >= 2
        assert min(len(b) for b in populate_buckets(digests, L + 1).values()) == 1

    @pytest.mark.slow
    def test_matches_brute_force_many_corpora(self):
        """Test the oracle on 200 corpora of up to 1000 digests."""
        rng = random.Random(13)
        for trial in range(200):
            n = rng.randint(10, 1000)
            digests = sorted(set(clustered_digests(rng, n) if trial % 2 else random_digests(rng, n)))
            assert min_prefix_length(digests) == brute_force_prefix_length(digests)


class TestBuckets:
    """Tests for bucket grouping and statistics."""

    def test_partition_is_disjoint_cover(self):
        """Test that buckets cover every digest exactly once."""
        rng = random.Random(21)
        digests = sorted(set(random_digests(rng, 1000)))
        buckets = populate_buckets(digests, 2)
        flat = [d for group in buckets.values() for d in group]
        assert sorted(flat) == digests
        assert len(flat) == len(set(flat))
        assert all(d.startswith(p) for p, group in buckets.items() for d in group)

    def test_stats_match_naive(self):
        """Test bucket_stats against a direct recomputation."""
        rng = random.Random(22)
        digests = sorted(set(random_digests(rng, 400)))
        buckets = populate_buckets(digests, 2)
        sizes = {p: len(g) for p, g in buckets.items()}
        stats = bucket_stats(buckets)
        ordered = sorted(sizes.values())
        mid = len(ordered) // 2
        median = ordered[mid] if len(ordered) % 2 else (ordered[mid - 1] + ordered[mid]) / 2
        assert stats.total == 400
        assert stats.bucket_count == len(buckets)
        assert stats.min_size == ordered[0]
        assert stats.max_size == ordered[-1]
        assert stats.mean_size == pytest.approx(400 / len(buckets))
        assert stats.median_size == median
        assert stats.argmax == min(p for p, s in sizes.items() if s == ordered[-1])

    def test_stats_empty(self):
        """Test that an empty bucket map is rejected."""
        with pytest.raises(EmptyInputError):
            bucket_stats({})

    def test_rejects_bad_length(self):
        """Test that L must be at least 1."""
        with pytest.raises(ValueError):
            populate_buckets(["A" * 40], 0)

    def test_bucket_files(self, temp_dir):
        """Test format A: one file per prefix."""
        digests = sorted(hash_password(w).digest for w in ["a", "b", "c", "d", "e"])
        count = write_bucket_files(iter_buckets(digests, 1), temp_dir / "buckets")
        files = sorted((temp_dir / "buckets").glob("*.txt"))
        assert count == len(files)
        assert sorted(d for f in files for d in f.read_text().split()) == digests

    def test_bucket_store(self, temp_dir):
        """Test format B: store rows, metadata and statistics."""
        rng = random.Random(23)
        digests = sorted(set(random_digests(rng, 300)))
        with SqliteStore(temp_dir / "range.sqlite") as store:
            written = write_bucket_store(iter_buckets(digests, 2), store, HashAlgorithm.SHA1)
            assert written == 300
            assert store.get_meta("prefix_length") == "2"
            assert store.get_meta("algorithm") == "sha1"
            assert [k for k, _ in store.scan_prefix(digests[0][:2])] == [
                d for d in digests if d.startswith(digests[0][:2])
            ]
            assert bucket_stats_from_store(store) == bucket_stats(populate_buckets(digests, 2))
