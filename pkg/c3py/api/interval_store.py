"""
Sharded interval store for frequency-smoothing bucketization.

The bucket range [0, |B|) is cut into r shards of floor(|B|/r) buckets; the
last shard also takes the |B| mod r remainder. Each leaked password's run is
split into at most two linear segments, each segment is clipped to every
shard it touches, and each shard answers stabbing queries from an
IntervalTree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Set, Tuple

from intervaltree import Interval, IntervalTree

from .._io.intervals import IntervalSections, IntervalStoreFile, ShardSection
from .bucketize import FsbParams, check_bucket_id, fsb_interval
from .core import LeakDataset
from .enums import DatasetMode
from .errors import ConfigurationError, EmptyInputError

logger = logging.getLogger(__name__)


INTERVALS_PER_SHARD = 4_000_000


def default_shard_count(n_passwords: int, num_buckets: int) -> int:
    """About INTERVALS_PER_SHARD intervals per shard, at least 1, at most |B|."""
    return max(1, min(num_buckets, math.ceil(n_passwords / INTERVALS_PER_SHARD)))


@dataclass
class IntervalStore:
    """
    Per-shard interval trees answering "which leaked passwords cover b".

    Interval data is the uppercase hex salted digest of the password.
    """
    num_buckets: int
    q_bar: int
    p_qbar: float
    salt: bytes
    estimator_digest: str
    shards: List[IntervalTree] = field(repr=False)

    def __post_init__(self):
        if not 1 <= len(self.shards) <= self.num_buckets:
            raise ValueError(f"shard count must be in [1, {self.num_buckets}], got {len(self.shards)}")

    @property
    def r(self) -> int:
        return len(self.shards)

    @property
    def shard_width(self) -> int:
        return self.num_buckets // self.r

    def shard_of(self, b: int) -> int:
        return min(b // self.shard_width, self.r - 1)

    def shard_range(self, i: int) -> Tuple[int, int]:
        """Half-open bucket range of shard i."""
        lo = i * self.shard_width
        hi = self.num_buckets if i == self.r - 1 else lo + self.shard_width
        return lo, hi

    def query(self, b: int) -> Set[str]:
        """Salted digests of every password whose run covers b."""
        check_bucket_id(b, self.num_buckets)
        return {iv.data for iv in self.shards[self.shard_of(b)].at(b)}

    def shard_counts(self) -> List[int]:
        return [len(tree) for tree in self.shards]

    # === Persistence ===

    def to_file(self, path: Path) -> None:
        sections = IntervalSections(
            scheme="fsb",
            num_buckets=self.num_buckets,
            q_bar=self.q_bar,
            p_qbar=self.p_qbar,
            salt=self.salt,
            estimator_digest=self.estimator_digest,
            shards=[
                ShardSection(
                    *self.shard_range(i),
                    [(iv.begin, iv.end, bytes.fromhex(iv.data)) for iv in tree],
                )
                for i, tree in enumerate(self.shards)
            ],
        )
        IntervalStoreFile.build(sections).to_file(path)
        logger.info("saved interval store (%d shards) to %s", self.r, path)

    @classmethod
    def from_file(cls, path: Path) -> "IntervalStore":
        s = IntervalStoreFile.from_file(path).sections()
        if s.scheme != "fsb":
            raise ConfigurationError(f"not an fsb store: scheme {s.scheme!r}")
        shards = [
            IntervalTree(Interval(begin, end, digest.hex().upper()) for begin, end, digest in shard.segments)
            for shard in s.shards
        ]
        return cls(s.num_buckets, s.q_bar, s.p_qbar, s.salt, s.estimator_digest, shards)


def build_interval_store(
    dataset: LeakDataset,
    p: FsbParams,
    r: Optional[int] = None,
    estimator_digest: str = "",
) -> IntervalStore:
    """
    One run per unique leaked password, duplicated into every touched shard.

    Args:
        dataset: password-only leak
        p: FSB parameters
        r: shard count (default_shard_count when None)
        estimator_digest: recorded in the store metadata

    Raises:
        EmptyInputError: empty dataset
    """
    if dataset.mode is not DatasetMode.PASSWORD:
        raise ConfigurationError("interval stores are built from password-only leaks")
    dataset.require_nonempty()
    B = p.num_buckets
    if r is None:
        r = default_shard_count(dataset.N, B)
    if not 1 <= r <= B:
        raise ConfigurationError(f"shard count must be in [1, {B}], got {r}")

    width = B // r
    per_shard: List[List[Interval]] = [[] for _ in range(r)]

    def shard_of(b: int) -> int:
        return min(b // width, r - 1)

    for w in dataset.passwords():
        data = p.salted_hex(w)
        for lo, hi in fsb_interval(w, p).segments():
            for i in range(shard_of(lo), shard_of(hi - 1) + 1):
                shard_lo = i * width
                shard_hi = B if i == r - 1 else shard_lo + width
                per_shard[i].append(Interval(max(lo, shard_lo), min(hi, shard_hi), data))

    store = IntervalStore(B, p.q_bar, p.p_qbar, p.salt, estimator_digest,
                          [IntervalTree(intervals) for intervals in per_shard])
    logger.info("built interval store: %d passwords, %d shards, %d segments",
                dataset.N, r, sum(store.shard_counts()))
    return store


def fsb_bucket_contents(store: IntervalStore, b: int) -> Set[str]:
    """
    Salted digests of the leaked passwords covering bucket b.

    Raises:
        MalformedInputError: b outside [0, |B|)
    """
    return store.query(b)


def naive_bucket_contents(dataset: LeakDataset, p: FsbParams, b: int) -> Set[str]:
    """Linear-scan reference for fsb_bucket_contents."""
    check_bucket_id(b, p.num_buckets)
    return {p.salted_hex(w) for w in dataset.passwords() if fsb_interval(w, p).contains(b)}
