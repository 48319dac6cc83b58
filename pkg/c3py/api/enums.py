"""
Enumerations for c3py.

String-valued enums double as config/CLI tokens; `parse` accepts any case.
"""

from enum import Enum

from .errors import ConfigurationError


class _Token(str, Enum):
    """String enum parsed case-insensitively from config and CLI input."""

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ConfigurationError(
                f"unknown {cls.__name__} '{value}' (expected one of: {choices})"
            ) from None

    def __str__(self):
        return self.value


class HashAlgorithm(_Token):
    """Digest algorithms for credential hashing."""
    SHA1 = "sha1"
    SHA256 = "sha256"

    @property
    def hex_length(self) -> int:
        """Digest width in hex characters."""
        return 40 if self is HashAlgorithm.SHA1 else 64

    @property
    def bits(self) -> int:
        return self.hex_length * 4

    @classmethod
    def from_hex_length(cls, length: int) -> "HashAlgorithm":
        for algorithm in cls:
            if algorithm.hex_length == length:
                return algorithm
        raise ConfigurationError(f"no hash algorithm produces {length}-character digests")


class DatasetMode(_Token):
    """Leak dataset entry kind."""
    PASSWORD = "password"
    PAIR = "pair"


class Scheme(_Token):
    """Bucketization schemes."""
    HPB = "hpb"
    FSB = "fsb"
    IDB = "idb"


class Protocol(_Token):
    """Service protocols. HIBP and GPC are both hash-prefix bucketized."""
    HIBP = "hibp"
    FSB = "fsb"
    GPC = "gpc"
    IDB = "idb"


class PsiMode(_Token):
    """PSI bucketing mode: by credential hash (gpc) or username hash (idb)."""
    GPC = "gpc"
    IDB = "idb"


class SelectionMode(_Token):
    """Client-side FSB bucket selection."""
    RANDOM = "random"
    DERANDOMIZED = "derandomized"


class Game(_Token):
    """Guessing games."""
    GUESS = "guess"
    BUCKET_GUESS = "bucket-guess"


class SlowHashProfile(_Token):
    """Cost profiles of the memory-hard hash inside the OPRF preimage."""
    PRODUCTION = "production"
    TEST = "test"
