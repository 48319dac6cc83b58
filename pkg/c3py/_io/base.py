"""
Low-level binary I/O utilities for c3py artifacts.

Follows the block pattern used throughout the package:
- Classes maintain a raw _data bytearray
- Fixed header fields are addressed through IntEnum offsets
- Variable-length sections are streamed through ByteWriter/ByteReader
- Every artifact ends its header with a SHA-256 digest of the content
"""

from __future__ import annotations

import hashlib
import struct

from ..api.errors import ArtifactError


DIGEST_SIZE = 32


def read_u16_be(data, offset):
    """Read big-endian uint16."""
    return (data[offset] << 8) | data[offset + 1]


def write_u16_be(data, offset, value):
    """Write big-endian uint16."""
    data[offset] = (value >> 8) & 0xFF
    data[offset + 1] = value & 0xFF


def read_u32_be(data, offset):
    """Read big-endian uint32."""
    return (
        (data[offset] << 24) |
        (data[offset + 1] << 16) |
        (data[offset + 2] << 8) |
        data[offset + 3]
    )


def write_u32_be(data, offset, value):
    """Write big-endian uint32."""
    data[offset] = (value >> 24) & 0xFF
    data[offset + 1] = (value >> 16) & 0xFF
    data[offset + 2] = (value >> 8) & 0xFF
    data[offset + 3] = value & 0xFF


def read_u64_be(data, offset):
    """Read big-endian uint64."""
    return (read_u32_be(data, offset) << 32) | read_u32_be(data, offset + 4)


def write_u64_be(data, offset, value):
    """Write big-endian uint64."""
    write_u32_be(data, offset, (value >> 32) & 0xFFFFFFFF)
    write_u32_be(data, offset + 4, value & 0xFFFFFFFF)


class ByteWriter:
    """Append-only big-endian writer for variable-length sections."""

    def __init__(self):
        self._data = bytearray()

    def u8(self, value: int) -> "ByteWriter":
        self._data.append(value & 0xFF)
        return self

    def u16(self, value: int) -> "ByteWriter":
        self._data.extend(b"\x00\x00")
        write_u16_be(self._data, len(self._data) - 2, value)
        return self

    def u32(self, value: int) -> "ByteWriter":
        self._data.extend(bytes(4))
        write_u32_be(self._data, len(self._data) - 4, value)
        return self

    def u64(self, value: int) -> "ByteWriter":
        self._data.extend(bytes(8))
        write_u64_be(self._data, len(self._data) - 8, value)
        return self

    def f64(self, value: float) -> "ByteWriter":
        self._data.extend(struct.pack(">d", value))
        return self

    def raw(self, value: bytes) -> "ByteWriter":
        self._data.extend(value)
        return self

    def blob(self, value: bytes) -> "ByteWriter":
        """Write a u32 length followed by the bytes."""
        self.u32(len(value))
        return self.raw(value)

    def text(self, value: str) -> "ByteWriter":
        """Write a u16 length followed by UTF-8 bytes."""
        encoded = value.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"text field too long: {len(encoded)} bytes")
        self.u16(len(encoded))
        return self.raw(encoded)

    def getvalue(self) -> bytes:
        return bytes(self._data)

    def __len__(self) -> int:
        return len(self._data)


class ByteReader:
    """Cursor over an immutable buffer; raises ArtifactError on truncation."""

    def __init__(self, data: bytes, offset: int = 0):
        self._data = data
        self._pos = offset

    def _take(self, size: int) -> int:
        start = self._pos
        if start + size > len(self._data):
            raise ArtifactError(
                f"truncated artifact: need {size} bytes at offset {start}, "
                f"have {len(self._data) - start}"
            )
        self._pos += size
        return start

    def u8(self) -> int:
        return self._data[self._take(1)]

    def u16(self) -> int:
        return read_u16_be(self._data, self._take(2))

    def u32(self) -> int:
        return read_u32_be(self._data, self._take(4))

    def u64(self) -> int:
        return read_u64_be(self._data, self._take(8))

    def f64(self) -> float:
        start = self._take(8)
        return struct.unpack(">d", self._data[start:start + 8])[0]

    def raw(self, size: int) -> bytes:
        start = self._take(size)
        return bytes(self._data[start:start + size])

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def text(self) -> str:
        return self.raw(self.u16()).decode("utf-8")


class C3Block:
    """
    Base class for c3py binary artifacts.

    Layout shared by every subclass:
        MAGIC (8 bytes) | VERSION (u16) | DIGEST (32 bytes) | BODY

    DIGEST is SHA-256 over BODY. Subclasses define MAGIC and VERSION and
    build/parse BODY.
    """

    MAGIC = b""
    VERSION = 1
    HEADER_SIZE = 8 + 2 + DIGEST_SIZE

    def __init__(self):
        self._data = bytearray()

    @classmethod
    def read(cls, data):
        """Read a block from binary data, checking magic, version and digest."""
        instance = cls.__new__(cls)
        instance._data = bytearray(data)
        if not instance.check_header():
            raise ArtifactError(f"bad magic for {cls.__name__}: {bytes(data[:8])!r}")
        if not instance.check_version():
            raise ArtifactError(
                f"unsupported {cls.__name__} version {instance.version}, expected {cls.VERSION}"
            )
        if not instance.verify_digest():
            raise ArtifactError(f"{cls.__name__} content digest mismatch")
        return instance

    @classmethod
    def wrap(cls, body: bytes):
        """Assemble header + body, computing the digest."""
        instance = cls.__new__(cls)
        instance._data = bytearray(cls.HEADER_SIZE) + bytearray(body)
        instance._data[0:8] = cls.MAGIC
        write_u16_be(instance._data, 8, cls.VERSION)
        instance.update_digest()
        return instance

    def write(self):
        """Write block to binary data."""
        return bytes(self._data)

    # === Header ===

    @property
    def header(self) -> bytes:
        return bytes(self._data[0:8])

    @property
    def version(self) -> int:
        return read_u16_be(self._data, 8)

    def check_header(self) -> bool:
        return len(self._data) >= self.HEADER_SIZE and self.header == self.MAGIC

    def check_version(self) -> bool:
        return self.version == self.VERSION

    # === Digest ===

    @property
    def body(self) -> bytes:
        return bytes(self._data[self.HEADER_SIZE:])

    @property
    def digest(self) -> bytes:
        return bytes(self._data[10:10 + DIGEST_SIZE])

    @property
    def digest_hex(self) -> str:
        return self.digest.hex().upper()

    def calculate_digest(self) -> bytes:
        return hashlib.sha256(self._data[self.HEADER_SIZE:]).digest()

    def update_digest(self) -> None:
        self._data[10:10 + DIGEST_SIZE] = self.calculate_digest()

    def verify_digest(self) -> bool:
        return self.digest == self.calculate_digest()

    def reader(self) -> ByteReader:
        """Cursor positioned at the start of the body."""
        return ByteReader(bytes(self._data), self.HEADER_SIZE)
