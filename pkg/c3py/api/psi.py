"""
OPRF-based private set membership.

F_a(x) = H(slow(x))^a over a prime-order elliptic-curve group, where slow is
a memory-hard hash and H maps its output onto the curve. Because
(F_a(x))^b = F_ab(x), the client can blind with r, let the server raise to
its key, and strip r again:

    client: x = F_r(u||w), b = bucket          -> (x, b)
    server: y = x^key, z_b = stored bucket      <- (y, z_b)
    client: x~ = y^(1/r); leaked <=> x~ in z_b

Elements cross every module boundary as 33-byte compressed encodings.
"""

from __future__ import annotations

import hashlib
import logging
import secrets
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from cryptography.hazmat.primitives.kdf.scrypt import Scrypt
from ecdsa import SECP256k1, numbertheory
from ecdsa.ellipticcurve import INFINITY, PointJacobi
from ecdsa.errors import MalformedPointError

from .._io.psi import ELEMENT_SIZE, PsiStoreFile, PsiStoreSections, ServerKeyFile
from .bucketize import DEFAULT_PSI_BITS, HpbParams, hpb_bucket, idb_bucket
from .core import Credential, LeakDataset
from .enums import DatasetMode, HashAlgorithm, PsiMode, SlowHashProfile
from .errors import ConfigurationError, ProtocolError

logger = logging.getLogger(__name__)


# =============================================================================
# Constants
# =============================================================================

HASH_TO_CURVE_DOMAIN = b"c3py-h2c-v1"
HASH_TO_CURVE_ATTEMPTS = 256
ELEMENT_ENCODING = "sec1-compressed"
SLOW_HASH_SALT = b"c3py-oprf-v1"

SLOW_HASH_PROFILES = {
    SlowHashProfile.PRODUCTION: (2 ** 18, 8, 1),    # 256 MiB, single lane
    SlowHashProfile.TEST: (2 ** 4, 1, 1),
}

ElementLike = Union[bytes, str]


# =============================================================================
# Group
# =============================================================================

class Group(ABC):
    """Prime-order cyclic group with hashing into it."""

    name: str
    order: int

    @abstractmethod
    def hash_to_element(self, data: bytes):
        """Deterministic map from bytes to a non-identity element."""

    @abstractmethod
    def exp(self, element, scalar: int):
        """element^scalar."""

    @abstractmethod
    def serialize(self, element) -> bytes:
        """Canonical encoding."""

    @abstractmethod
    def deserialize(self, data: bytes):
        """Strict decoding; ProtocolError on anything but a valid non-identity element."""

    def inverse(self, scalar: int) -> int:
        """Scalar inverse mod the group order."""
        scalar %= self.order
        if scalar == 0:
            raise ProtocolError("zero scalar has no inverse")
        return pow(scalar, -1, self.order)

    def random_scalar(self) -> int:
        """Uniform over [1, order)."""
        return secrets.randbelow(self.order - 1) + 1


class Secp256k1Group(Group):
    """secp256k1 (cofactor 1) with try-and-increment hashing to the curve."""

    name = "secp256k1"

    def __init__(self):
        self.curve = SECP256k1.curve
        self.order = SECP256k1.order
        self.field_prime = self.curve.p()

    def hash_to_element(self, data: bytes) -> PointJacobi:
        for counter in range(HASH_TO_CURVE_ATTEMPTS):
            x_bytes = hashlib.sha256(HASH_TO_CURVE_DOMAIN + bytes([counter]) + data).digest()
            if int.from_bytes(x_bytes, "big") >= self.field_prime:
                continue
            point = self._decode(b"\x02" + x_bytes)
            if point is not None:
                return point
        raise ProtocolError("hash-to-curve exhausted its attempts")

    def _decode(self, data: bytes) -> Optional[PointJacobi]:
        try:
            point = PointJacobi.from_bytes(
                self.curve, data, valid_encodings=("compressed",), order=self.order
            )
        except (MalformedPointError, numbertheory.Error, ValueError, AssertionError):
            return None
        if point == INFINITY:
            return None
        return point

    def exp(self, element: PointJacobi, scalar: int) -> PointJacobi:
        scalar %= self.order
        if scalar == 0:
            raise ProtocolError("exponent must be a nonzero scalar")
        return element * scalar

    def serialize(self, element: PointJacobi) -> bytes:
        return element.to_bytes("compressed")

    def deserialize(self, data: bytes) -> PointJacobi:
        if len(data) != ELEMENT_SIZE or data[0] not in (2, 3):
            raise ProtocolError(f"element must be {ELEMENT_SIZE}-byte compressed encoding")
        if int.from_bytes(data[1:], "big") >= self.field_prime:
            raise ProtocolError("element x-coordinate outside the field")
        point = self._decode(bytes(data))
        if point is None:
            raise ProtocolError("element is not a point on the curve")
        return point


# =============================================================================
# Slow Hash
# =============================================================================

@dataclass(frozen=True)
class SlowHash:
    """scrypt with fixed cost parameters; memory = 128 * n * r bytes."""
    n: int
    r: int
    p: int
    salt: bytes = SLOW_HASH_SALT

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")

    @classmethod
    def from_profile(cls, profile: Union[SlowHashProfile, str]) -> "SlowHash":
        return cls(*SLOW_HASH_PROFILES[SlowHashProfile.parse(profile)])

    def __call__(self, data: bytes) -> bytes:
        return Scrypt(salt=self.salt, length=32, n=self.n, r=self.r, p=self.p).derive(data)

    @property
    def params(self) -> Tuple[int, int, int, bytes]:
        return (self.n, self.r, self.p, self.salt)


@dataclass(frozen=True)
class OprfSuite:
    """Group plus slow hash: everything both sides must agree on."""
    group: Group = field(default_factory=Secp256k1Group)
    slow_hash: SlowHash = field(default_factory=lambda: SlowHash.from_profile(SlowHashProfile.PRODUCTION))

    @classmethod
    def for_profile(cls, profile: Union[SlowHashProfile, str]) -> "OprfSuite":
        return cls(Secp256k1Group(), SlowHash.from_profile(profile))

    def element(self, data: bytes):
        """H(slow(data))."""
        return self.group.hash_to_element(self.slow_hash(data))


_DEFAULT_SUITE: Optional[OprfSuite] = None


def default_suite() -> OprfSuite:
    global _DEFAULT_SUITE
    if _DEFAULT_SUITE is None:
        _DEFAULT_SUITE = OprfSuite()
    return _DEFAULT_SUITE


# =============================================================================
# Key
# =============================================================================

@dataclass(frozen=True)
class ServerKey:
    """Secret exponent kappa in [1, order)."""
    scalar: int = field(repr=False)
    key_id: str = ""

    @classmethod
    def generate(cls, suite: Optional[OprfSuite] = None) -> "ServerKey":
        suite = suite or default_suite()
        return cls.from_scalar(suite.group.random_scalar(), suite)

    @classmethod
    def from_scalar(cls, scalar: int, suite: Optional[OprfSuite] = None) -> "ServerKey":
        suite = suite or default_suite()
        if not 1 <= scalar < suite.group.order:
            raise ProtocolError("key scalar must be in [1, order)")
        public = suite.group.serialize(suite.group.exp(SECP256k1.generator, scalar))
        return cls(scalar, hashlib.sha256(public).hexdigest()[:16].upper())

    def save(self, path: Path, suite: Optional[OprfSuite] = None) -> None:
        suite = suite or default_suite()
        ServerKeyFile.build(self.key_id, suite.group.name, self.scalar.to_bytes(32, "big")).to_file(path)

    @classmethod
    def load(cls, path: Path, suite: Optional[OprfSuite] = None) -> "ServerKey":
        key_id, group, scalar = ServerKeyFile.from_file(path).fields()
        suite = suite or default_suite()
        if group != suite.group.name:
            raise ConfigurationError(f"key is for group {group}, suite uses {suite.group.name}")
        key = cls.from_scalar(int.from_bytes(scalar, "big"), suite)
        if key.key_id != key_id:
            raise ConfigurationError("key file id does not match its scalar")
        return key


# =============================================================================
# Store
# =============================================================================

@dataclass
class PsiBucketStore:
    """
    Bucket id -> set of compressed F_key(u||w) encodings.

    Attributes:
        mode: gpc (bucket by u||w) or idb (bucket by u)
        bits: bucket-id bits l
        key_id: id of the key the elements were computed under
        slow_hash: cost parameters used inside the elements
    """
    mode: PsiMode
    bits: int
    key_id: str
    slow_hash: SlowHash
    buckets: Dict[int, FrozenSet[bytes]] = field(default_factory=dict)

    def __post_init__(self):
        self.mode = PsiMode.parse(self.mode)
        if not 1 <= self.bits <= 32:
            raise ValueError(f"bits must be in [1, 32], got {self.bits}")

    @property
    def num_buckets(self) -> int:
        return 2 ** self.bits

    def bucket(self, b: int) -> FrozenSet[bytes]:
        return self.buckets.get(b, frozenset())

    def sizes(self) -> Dict[int, int]:
        return {b: len(z) for b, z in self.buckets.items()}

    def __len__(self) -> int:
        return sum(len(z) for z in self.buckets.values())

    def to_file(self, path: Path, group_name: str = "secp256k1") -> None:
        PsiStoreFile.build(PsiStoreSections(
            mode=self.mode.value,
            bits=self.bits,
            key_id=self.key_id,
            group=group_name,
            encoding=ELEMENT_ENCODING,
            slow_hash=self.slow_hash.params,
            buckets={b: list(z) for b, z in self.buckets.items()},
        )).to_file(path)
        logger.info("saved %s store (%d elements) to %s", self.mode.value, len(self), path)

    @classmethod
    def from_file(cls, path: Path) -> "PsiBucketStore":
        s = PsiStoreFile.from_file(path).sections()
        if s.encoding != ELEMENT_ENCODING:
            raise ConfigurationError(f"unsupported element encoding {s.encoding!r}")
        return cls(
            s.mode, s.bits, s.key_id, SlowHash(*s.slow_hash),
            {b: frozenset(z) for b, z in s.buckets.items()},
        )


# =============================================================================
# Operations
# =============================================================================

def _as_bytes(element: ElementLike) -> bytes:
    if isinstance(element, str):
        try:
            return bytes.fromhex(element)
        except ValueError:
            raise ProtocolError("element is not valid hex") from None
    return bytes(element)


def psi_bucket(credential: Credential, bits: int, mode: Union[PsiMode, str]) -> int:
    """First `bits` bits of SHA-256(u||w) (gpc) or SHA-256(u) (idb)."""
    params = HpbParams(bits, HashAlgorithm.SHA256)
    if PsiMode.parse(mode) is PsiMode.IDB:
        return idb_bucket(credential.username, params)
    return hpb_bucket(credential, params)


def oprf(a: int, x: bytes, suite: Optional[OprfSuite] = None) -> bytes:
    """
    F_a(x) = H(slow(x))^a, compressed.

    Raises:
        ProtocolError: a is zero mod the group order
    """
    suite = suite or default_suite()
    if a % suite.group.order == 0:
        raise ProtocolError("OPRF key must be a nonzero scalar")
    return suite.group.serialize(suite.group.exp(suite.element(x), a))


def exponentiate(element: ElementLike, scalar: int, suite: Optional[OprfSuite] = None) -> bytes:
    """Validated element^scalar, compressed."""
    suite = suite or default_suite()
    point = suite.group.deserialize(_as_bytes(element))
    return suite.group.serialize(suite.group.exp(point, scalar))


def blind(
    u: str,
    w: str,
    r: Optional[int] = None,
    suite: Optional[OprfSuite] = None,
) -> Tuple[int, bytes]:
    """
    Blind the credential u||w.

    Args:
        r: explicit blinding scalar; a fresh uniform nonzero scalar when None

    Returns:
        (r, x) with x = F_r(u||w); r must stay on the client
    """
    suite = suite or default_suite()
    if r is None:
        r = suite.group.random_scalar()
    return r, oprf(r, Credential(u, w).serialize(), suite)


def server_eval(
    key: ServerKey,
    x: ElementLike,
    b: int,
    store: PsiBucketStore,
    suite: Optional[OprfSuite] = None,
) -> Tuple[bytes, List[bytes]]:
    """
    y = x^key and the stored bucket z_b (sorted; empty for unknown buckets).

    Raises:
        ProtocolError: invalid element encoding or bucket id out of range
    """
    if not 0 <= b < store.num_buckets:
        raise ProtocolError(f"bucket id {b} outside [0, {store.num_buckets})")
    y = exponentiate(x, key.scalar, suite)
    return y, sorted(store.bucket(b))


def unblind(y: ElementLike, r: int, suite: Optional[OprfSuite] = None) -> bytes:
    """
    x~ = y^(1/r).

    Raises:
        ProtocolError: r is zero or y is not a valid element
    """
    suite = suite or default_suite()
    return exponentiate(y, suite.group.inverse(r), suite)


def check_membership(x_tilde: ElementLike, z_b: Iterable[ElementLike]) -> bool:
    """Encoding membership."""
    target = _as_bytes(x_tilde)
    return any(_as_bytes(z) == target for z in z_b)


def precompute_psi_store(
    dataset: LeakDataset,
    key: ServerKey,
    l: int = DEFAULT_PSI_BITS,
    mode: Union[PsiMode, str] = PsiMode.GPC,
    suite: Optional[OprfSuite] = None,
) -> PsiBucketStore:
    """
    z_j = { F_key(u||w) : bucket(u, w) = j } over every leaked pair.
    """
    suite = suite or default_suite()
    mode = PsiMode.parse(mode)
    if dataset.mode is not DatasetMode.PAIR:
        raise ConfigurationError("PSI stores are built from username-password leaks")
    buckets: Dict[int, set] = defaultdict(set)
    for credential in dataset.credentials():
        element = oprf(key.scalar, credential.serialize(), suite)
        buckets[psi_bucket(credential, l, mode)].add(element)
    store = PsiBucketStore(mode, l, key.key_id, suite.slow_hash,
                           {b: frozenset(z) for b, z in buckets.items()})
    logger.info("precomputed %s store: %d pairs in %d buckets", mode.value, dataset.N, len(buckets))
    return store


def rotate_store(
    store: PsiBucketStore,
    old_key: ServerKey,
    new_key: ServerKey,
    suite: Optional[OprfSuite] = None,
) -> PsiBucketStore:
    """Re-key every element by new * old^-1 without touching the leak."""
    suite = suite or default_suite()
    if store.key_id != old_key.key_id:
        raise ConfigurationError(f"store is keyed by {store.key_id}, not {old_key.key_id}")
    factor = new_key.scalar * suite.group.inverse(old_key.scalar) % suite.group.order
    buckets = {
        b: frozenset(exponentiate(z, factor, suite) for z in elements)
        for b, elements in store.buckets.items()
    }
    logger.info("rotated %s store from key %s to %s", store.mode.value, old_key.key_id, new_key.key_id)
    return PsiBucketStore(store.mode, store.bits, new_key.key_id, store.slow_hash, buckets)
