"""
FSB interval store I/O.

File layout (big-endian):
- Magic: 8 bytes ("C3FSBIT\\0")
- Version: u16 (1)
- Digest: 32 bytes, SHA-256 of everything after the digest
- Metadata:
    scheme             u16 length + "fsb"
    num_buckets        u64
    q_bar              u32
    p_qbar             f64
    salt               u32 length + bytes
    estimator digest   u16 length + uppercase hex
    shard count r      u32
- Per shard, in order:
    lo, hi             u64, u64   half-open bucket range of the shard
    count              u32
    intervals          count x (begin u64, end u64, salted digest 32 bytes),
                       sorted by (begin, end, digest), clipped to [lo, hi)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

from .base import ByteWriter, C3Block


INTERVALS_MAGIC = b"C3FSBIT\x00"
INTERVALS_FILE_VERSION = 1
SALTED_DIGEST_SIZE = 32

Segment = Tuple[int, int, bytes]


@dataclass
class ShardSection:
    lo: int
    hi: int
    segments: List[Segment]


@dataclass
class IntervalSections:
    scheme: str
    num_buckets: int
    q_bar: int
    p_qbar: float
    salt: bytes
    estimator_digest: str
    shards: List[ShardSection]


class IntervalStoreFile(C3Block):
    """FSB interval store block."""

    MAGIC = INTERVALS_MAGIC
    VERSION = INTERVALS_FILE_VERSION

    @classmethod
    def build(cls, sections: IntervalSections) -> "IntervalStoreFile":
        w = ByteWriter()
        w.text(sections.scheme).u64(sections.num_buckets).u32(sections.q_bar)
        w.f64(sections.p_qbar).blob(sections.salt).text(sections.estimator_digest)
        w.u32(len(sections.shards))
        for shard in sections.shards:
            w.u64(shard.lo).u64(shard.hi).u32(len(shard.segments))
            for begin, end, digest in sorted(shard.segments):
                if len(digest) != SALTED_DIGEST_SIZE:
                    raise ValueError(f"salted digest must be {SALTED_DIGEST_SIZE} bytes")
                w.u64(begin).u64(end).raw(digest)
        return cls.wrap(w.getvalue())

    def sections(self) -> IntervalSections:
        r = self.reader()
        scheme = r.text()
        num_buckets = r.u64()
        q_bar = r.u32()
        p_qbar = r.f64()
        salt = r.blob()
        estimator_digest = r.text()
        shards = []
        for _ in range(r.u32()):
            lo, hi = r.u64(), r.u64()
            segments = [(r.u64(), r.u64(), r.raw(SALTED_DIGEST_SIZE)) for _ in range(r.u32())]
            shards.append(ShardSection(lo, hi, segments))
        return IntervalSections(scheme, num_buckets, q_bar, p_qbar, salt, estimator_digest, shards)

    @classmethod
    def from_file(cls, path: Path) -> "IntervalStoreFile":
        return cls.read(Path(path).read_bytes())

    def to_file(self, path: Path) -> None:
        Path(path).write_bytes(self.write())
