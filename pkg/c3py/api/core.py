"""
Credential and hash types, hashing and prefix arithmetic.

Hex digests are uppercase everywhere; parsers accept either case and
normalize. Digest ordering is plain lexicographic order on the hex string,
which is the order the prefix-length scan relies on.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .enums import DatasetMode, HashAlgorithm
from .errors import (
    AlgorithmMismatchError,
    ConfigurationError,
    EmptyInputError,
    MalformedInputError,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Constants
# =============================================================================

HEX_DIGITS = frozenset("0123456789ABCDEF")
MAX_PASSWORD_LENGTH = 30
PRINTABLE_MIN = 0x20
PRINTABLE_MAX = 0x7E
CREDENTIAL_SEPARATOR = b"\x00"


def _is_hex(text: str) -> bool:
    return all(c in HEX_DIGITS for c in text)


def is_clean_password(password: str) -> bool:
    """Printable ASCII, 1 to 30 characters."""
    if not 0 < len(password) <= MAX_PASSWORD_LENGTH:
        return False
    return all(PRINTABLE_MIN <= ord(c) <= PRINTABLE_MAX for c in password)


def is_clean_username(username: str) -> bool:
    return bool(username) and all(PRINTABLE_MIN <= ord(c) for c in username)


# =============================================================================
# Hash Types
# =============================================================================

@dataclass(frozen=True, order=True)
class PasswordHash:
    """
    A fixed-width uppercase hex digest.

    Attributes:
        digest: 40 hex characters for SHA1, 64 for SHA-256
        algorithm: algorithm tag; inferred from the digest width when omitted
    """
    digest: str
    algorithm: Optional[HashAlgorithm] = field(default=None, compare=False)

    def __post_init__(self):
        digest = self.digest.upper()
        object.__setattr__(self, "digest", digest)
        if not _is_hex(digest):
            raise ValueError(f"digest must be hexadecimal, got {self.digest!r}")
        if self.algorithm is None:
            try:
                algorithm = HashAlgorithm.from_hex_length(len(digest))
            except ConfigurationError:
                raise ValueError(f"digest has unsupported width {len(digest)}") from None
            object.__setattr__(self, "algorithm", algorithm)
        else:
            object.__setattr__(self, "algorithm", HashAlgorithm.parse(self.algorithm))
        if len(digest) != self.algorithm.hex_length:
            raise ValueError(
                f"{self.algorithm.value} digest must be {self.algorithm.hex_length} "
                f"characters, got {len(digest)}"
            )

    @classmethod
    def parse(
        cls,
        text: str,
        algorithm: Optional[HashAlgorithm] = None,
        line_number: Optional[int] = None,
    ) -> "PasswordHash":
        """
        Parse a digest line, raising MalformedInputError instead of ValueError.

        Args:
            text: hex digest, any case, surrounding whitespace ignored
            algorithm: expected algorithm, or None to infer from width
            line_number: reported in the error when given
        """
        try:
            return cls(text.strip(), algorithm)
        except ValueError as e:
            raise MalformedInputError(str(e), line_number) from None

    @property
    def raw(self) -> bytes:
        return bytes.fromhex(self.digest)

    def __str__(self) -> str:
        return self.digest


@dataclass(frozen=True)
class HashPrefix:
    """Leading hex characters of a digest; the HPB bucket identifier."""
    prefix: str

    def __post_init__(self):
        prefix = self.prefix.upper()
        object.__setattr__(self, "prefix", prefix)
        if not _is_hex(prefix):
            raise ValueError(f"prefix must be hexadecimal, got {self.prefix!r}")

    @property
    def length(self) -> int:
        """Length in hex characters (4 bits each)."""
        return len(self.prefix)

    @property
    def bucket_id(self) -> int:
        return int(self.prefix, 16) if self.prefix else 0

    def matches(self, h: PasswordHash) -> bool:
        return h.digest.startswith(self.prefix)

    def __str__(self) -> str:
        return self.prefix


# =============================================================================
# Credentials and Datasets
# =============================================================================

@dataclass(frozen=True, order=True)
class Credential:
    """
    A username-password pair after cleaning.

    The username is case-folded; the password must be printable ASCII of at
    most 30 characters.
    """
    username: str
    password: str

    def __post_init__(self):
        object.__setattr__(self, "username", self.username.lower())
        if not is_clean_username(self.username):
            raise ValueError(f"invalid username {self.username!r}")
        if not is_clean_password(self.password):
            raise ValueError("password fails the cleaning filter")

    @classmethod
    def clean(cls, username: str, password: str) -> Optional["Credential"]:
        """Build a credential, or None when the pair fails the cleaning filter."""
        try:
            return cls(username.strip(), password)
        except ValueError:
            return None

    def serialize(self) -> bytes:
        """Canonical byte form u || 0x00 || w."""
        return self.username.encode("utf-8") + CREDENTIAL_SEPARATOR + self.password.encode("ascii")


Entry = Union[str, Credential]


@dataclass
class LeakDataset:
    """
    A de-duplicated leak with per-entry multiplicities.

    Attributes:
        mode: password-only or username-password
        counts: multiplicity of each entry in the raw corpus
        skipped: raw entries dropped by the cleaning filter
    """
    mode: DatasetMode
    counts: Dict[Entry, int] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        self.mode = DatasetMode.parse(self.mode)
        for entry, count in self.counts.items():
            if count < 1:
                raise ValueError(f"multiplicity must be >= 1, got {count}")
            expected = Credential if self.mode is DatasetMode.PAIR else str
            if not isinstance(entry, expected):
                raise ValueError(f"{self.mode.value} dataset cannot hold {type(entry).__name__}")

    # === Construction ===

    @classmethod
    def from_passwords(cls, passwords: Iterable[str]) -> "LeakDataset":
        """Count cleaned passwords; entries failing the filter are skipped."""
        counts: Counter = Counter()
        skipped = 0
        for w in passwords:
            if is_clean_password(w):
                counts[w] += 1
            else:
                skipped += 1
        if skipped:
            logger.info("skipped %d passwords failing the cleaning filter", skipped)
        return cls(DatasetMode.PASSWORD, dict(counts), skipped)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]]) -> "LeakDataset":
        """Count cleaned (username, password) pairs."""
        counts: Counter = Counter()
        skipped = 0
        for u, w in pairs:
            credential = Credential.clean(u, w)
            if credential is None:
                skipped += 1
            else:
                counts[credential] += 1
        if skipped:
            logger.info("skipped %d pairs failing the cleaning filter", skipped)
        return cls(DatasetMode.PAIR, dict(counts), skipped)

    @classmethod
    def load_passwords(cls, path: Path) -> "LeakDataset":
        """Read one password per line (LF or CRLF)."""
        return cls.from_passwords(_read_lines(Path(path)))

    @classmethod
    def load_pairs(cls, path: Path) -> "LeakDataset":
        """Read `username<TAB>password` or `username:password` lines."""
        return cls.from_pairs(_split_pair(line) for line in _read_lines(Path(path)) if line)

    # === Queries ===

    @property
    def entries(self) -> frozenset:
        return frozenset(self.counts)

    @property
    def N(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        """Raw corpus size including multiplicity."""
        return sum(self.counts.values())

    def password_counts(self) -> Dict[str, int]:
        """Multiplicity per password, aggregated over users in pair mode."""
        if self.mode is DatasetMode.PASSWORD:
            return dict(self.counts)
        counts: Counter = Counter()
        for credential, count in self.counts.items():
            counts[credential.password] += count
        return dict(counts)

    def passwords(self) -> List[str]:
        """Unique passwords, sorted."""
        return sorted(self.password_counts())

    def credentials(self) -> List[Credential]:
        if self.mode is not DatasetMode.PAIR:
            raise ConfigurationError("password-only dataset has no credentials")
        return sorted(self.counts)

    def __contains__(self, entry) -> bool:
        return entry in self.counts

    def __len__(self) -> int:
        return self.N

    def require_nonempty(self) -> None:
        if not self.counts:
            raise EmptyInputError("leak dataset is empty")


def _read_lines(path: Path) -> Iterator[str]:
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as f:
        for line in f:
            yield line.rstrip("\r\n")


def _split_pair(line: str) -> Tuple[str, str]:
    sep = "\t" if "\t" in line else ":"
    username, _, password = line.partition(sep)
    return username, password


# =============================================================================
# Operations
# =============================================================================

def hash_password(
    plaintext: Union[bytes, str],
    algorithm: Union[HashAlgorithm, str] = HashAlgorithm.SHA1,
) -> PasswordHash:
    """
    Hash a plaintext without salt.

    Args:
        plaintext: bytes, or str encoded as UTF-8; empty allowed
        algorithm: "sha1" or "sha256"

    Returns:
        Uppercase PasswordHash

    Raises:
        ConfigurationError: unknown algorithm tag
    """
    algorithm = HashAlgorithm.parse(algorithm)
    if isinstance(plaintext, str):
        plaintext = plaintext.encode("utf-8")
    digest = hashlib.new(algorithm.value, plaintext).hexdigest().upper()
    return PasswordHash(digest, algorithm)


def common_prefix_length(a: str, b: str) -> int:
    """Number of leading characters two strings share."""
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


def similar_prefix(a: PasswordHash, b: PasswordHash) -> int:
    """
    Length of the longest common leading substring, in hex characters.

    Raises:
        AlgorithmMismatchError: a and b use different algorithms
    """
    if a.algorithm is not b.algorithm:
        raise AlgorithmMismatchError(
            f"cannot compare {a.algorithm.value} and {b.algorithm.value} digests"
        )
    return common_prefix_length(a.digest, b.digest)


def truncate(h: PasswordHash, L: int) -> HashPrefix:
    """
    Leading L characters of a digest.

    Raises:
        MalformedInputError: L outside [0, digest length]
    """
    if not 0 <= L <= len(h.digest):
        raise MalformedInputError(f"prefix length {L} outside [0, {len(h.digest)}]")
    return HashPrefix(h.digest[:L])


def prefix_bits(digest: bytes, bits: int) -> int:
    """Integer value of the first `bits` bits of a digest."""
    total = len(digest) * 8
    if not 0 <= bits <= total:
        raise ValueError(f"bits must be in [0, {total}], got {bits}")
    return int.from_bytes(digest, "big") >> (total - bits)
