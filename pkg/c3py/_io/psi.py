"""
PSI bucket store and server key I/O.

Bucket store layout (big-endian):
- Magic: 8 bytes ("C3PSIST\\0")
- Version: u16 (1)
- Digest: 32 bytes, SHA-256 of everything after the digest
- Metadata:
    mode          u16 length + "gpc" | "idb"
    bits          u8      bucket-id bits l
    key id        u16 length + hex
    group         u16 length + curve name
    encoding      u16 length + element encoding name
    slow hash     u32 n, u16 r, u16 p, u32 length + salt
- Buckets:
    count         u32
    per bucket (ascending id): u32 id, u32 element count,
                  elements (ELEMENT_SIZE bytes each, ascending)

Server key layout:
- Magic: 8 bytes ("C3PSIKY\\0"), Version u16, Digest 32 bytes
- key id (u16 length + hex), group (u16 length + name), scalar (u32 length + big-endian bytes)
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from .base import ByteWriter, C3Block


PSI_STORE_MAGIC = b"C3PSIST\x00"
SERVER_KEY_MAGIC = b"C3PSIKY\x00"
PSI_FILE_VERSION = 1
ELEMENT_SIZE = 33


@dataclass
class PsiStoreSections:
    mode: str
    bits: int
    key_id: str
    group: str
    encoding: str
    slow_hash: Tuple[int, int, int, bytes]
    buckets: Dict[int, List[bytes]]


class PsiStoreFile(C3Block):
    """Precomputed PSI bucket store block."""

    MAGIC = PSI_STORE_MAGIC
    VERSION = PSI_FILE_VERSION

    @classmethod
    def build(cls, sections: PsiStoreSections) -> "PsiStoreFile":
        w = ByteWriter()
        w.text(sections.mode).u8(sections.bits).text(sections.key_id)
        w.text(sections.group).text(sections.encoding)
        n, r, p, salt = sections.slow_hash
        w.u32(n).u16(r).u16(p).blob(salt)
        w.u32(len(sections.buckets))
        for bucket_id in sorted(sections.buckets):
            elements = sorted(sections.buckets[bucket_id])
            w.u32(bucket_id).u32(len(elements))
            for element in elements:
                if len(element) != ELEMENT_SIZE:
                    raise ValueError(f"element must be {ELEMENT_SIZE} bytes, got {len(element)}")
                w.raw(element)
        return cls.wrap(w.getvalue())

    def sections(self) -> PsiStoreSections:
        r = self.reader()
        mode = r.text()
        bits = r.u8()
        key_id = r.text()
        group = r.text()
        encoding = r.text()
        slow_hash = (r.u32(), r.u16(), r.u16(), r.blob())
        buckets = {}
        for _ in range(r.u32()):
            bucket_id = r.u32()
            buckets[bucket_id] = [r.raw(ELEMENT_SIZE) for _ in range(r.u32())]
        return PsiStoreSections(mode, bits, key_id, group, encoding, slow_hash, buckets)

    @classmethod
    def from_file(cls, path: Path) -> "PsiStoreFile":
        return cls.read(Path(path).read_bytes())

    def to_file(self, path: Path) -> None:
        Path(path).write_bytes(self.write())


class ServerKeyFile(C3Block):
    """Server secret key block. Written with owner-only permissions."""

    MAGIC = SERVER_KEY_MAGIC
    VERSION = PSI_FILE_VERSION

    @classmethod
    def build(cls, key_id: str, group: str, scalar: bytes) -> "ServerKeyFile":
        return cls.wrap(ByteWriter().text(key_id).text(group).blob(scalar).getvalue())

    def fields(self) -> Tuple[str, str, bytes]:
        r = self.reader()
        return r.text(), r.text(), r.blob()

    @classmethod
    def from_file(cls, path: Path) -> "ServerKeyFile":
        return cls.read(Path(path).read_bytes())

    def to_file(self, path: Path) -> None:
        fd = os.open(str(path), os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "wb") as f:
            f.write(self.write())
