"""
Bucketization schemes.

- HPB: first l bits of the (optionally salted) hash of w, or of u || w
- IDB: first l bits of the hash of the username alone
- FSB: each password is replicated into a contiguous, wrap-around run of
  gamma buckets, gamma proportional to its estimated probability, so that
  within any bucket no password is much likelier than another

Bucket selection for FSB clients is either uniform over the covered run or
derandomized by a client cookie so repeat queries hit one fixed bucket.
"""

from __future__ import annotations

import hashlib
import math
import secrets
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple, Union

import numpy as np

from .core import Credential, prefix_bits
from .enums import HashAlgorithm, Scheme, SelectionMode
from .errors import ConfigurationError, MalformedInputError


# =============================================================================
# Constants
# =============================================================================

DEFAULT_HPB_BITS = 20
DEFAULT_PSI_BITS = 16
DEFAULT_FSB_BUCKETS = 2 ** 30
DEFAULT_FSB_QBAR = 10 ** 3


def _as_bytes(s: Union[str, bytes, Credential]) -> bytes:
    if isinstance(s, Credential):
        return s.serialize()
    if isinstance(s, str):
        return s.encode("utf-8")
    return bytes(s)


# =============================================================================
# Hash-Prefix Bucketization
# =============================================================================

@dataclass(frozen=True)
class HpbParams:
    """
    Hash-prefix parameters.

    Attributes:
        l: prefix bits, 1 <= l <= digest bits
        algorithm: digest algorithm
        salt: prepended to the serialization when non-empty
    """
    l: int = DEFAULT_HPB_BITS
    algorithm: HashAlgorithm = HashAlgorithm.SHA1
    salt: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "algorithm", HashAlgorithm.parse(self.algorithm))
        if not 1 <= self.l <= self.algorithm.bits:
            raise ValueError(f"l must be in [1, {self.algorithm.bits}], got {self.l}")

    @property
    def num_buckets(self) -> int:
        return 2 ** self.l

    def digest(self, data: bytes) -> bytes:
        return hashlib.new(self.algorithm.value, self.salt + data).digest()


def hpb_bucket(s: Union[str, bytes, Credential], p: HpbParams) -> int:
    """
    Bucket of a password (HIBP mode) or credential (GPC mode, u || w).

    Returns:
        Integer value of the first l bits of the hash
    """
    return prefix_bits(p.digest(_as_bytes(s)), p.l)


def idb_bucket(u: str, p: HpbParams) -> int:
    """Bucket from the case-folded username only."""
    return prefix_bits(p.digest(u.lower().encode("utf-8")), p.l)


# =============================================================================
# Frequency-Smoothing Bucketization
# =============================================================================

@dataclass(frozen=True)
class BucketInterval:
    """
    A wrap-around run of gamma consecutive buckets starting at `start`.
    """
    start: int
    gamma: int
    num_buckets: int

    def __post_init__(self):
        if not 0 <= self.start < self.num_buckets:
            raise ValueError(f"start {self.start} outside [0, {self.num_buckets})")
        if not 1 <= self.gamma <= self.num_buckets:
            raise ValueError(f"gamma must be in [1, {self.num_buckets}], got {self.gamma}")

    @property
    def wraps(self) -> bool:
        return self.start + self.gamma > self.num_buckets

    def contains(self, b: int) -> bool:
        return (b - self.start) % self.num_buckets < self.gamma

    def covered(self) -> List[int]:
        """Covered bucket ids in run order."""
        return [(self.start + j) % self.num_buckets for j in range(self.gamma)]

    def segments(self) -> List[Tuple[int, int]]:
        """At most two half-open linear segments [lo, hi)."""
        end = self.start + self.gamma
        if end <= self.num_buckets:
            return [(self.start, end)]
        return [(self.start, self.num_buckets), (0, end - self.num_buckets)]

    def __len__(self) -> int:
        return self.gamma


@dataclass(frozen=True)
class FsbParams:
    """
    Frequency-smoothing parameters.

    Attributes:
        num_buckets: |B|
        q_bar: estimated attacker budget
        estimator: anything with estimate(w) and top_q(q)
        salt: public per-deployment salt of f
        p_qbar: estimated probability of the q_bar-th likeliest password;
            derived from the estimator when left at 0
    """
    num_buckets: int
    q_bar: int
    estimator: Any = field(compare=False, repr=False)
    salt: bytes = b""
    p_qbar: float = 0.0

    def __post_init__(self):
        if self.num_buckets < 1:
            raise ValueError(f"num_buckets must be >= 1, got {self.num_buckets}")
        if self.q_bar < 1:
            raise ValueError(f"q_bar must be >= 1, got {self.q_bar}")
        if not self.p_qbar:
            ranked = self.estimator.top_q(self.q_bar)
            if len(ranked) < self.q_bar:
                raise ConfigurationError(
                    f"estimator ranks only {len(ranked)} passwords, q_bar={self.q_bar}"
                )
            object.__setattr__(self, "p_qbar", float(self.estimator.estimate(ranked[-1])))
        if self.p_qbar <= 0:
            raise ConfigurationError(f"p_qbar must be > 0, got {self.p_qbar}")

    # === Hash functions ===

    def salted_digest(self, w: str) -> bytes:
        return hashlib.sha256(self.salt + w.encode("utf-8")).digest()

    def salted_hex(self, w: str) -> str:
        """The form in which the server publishes bucket contents."""
        return self.salted_digest(w).hex().upper()

    def start_of(self, w: str) -> int:
        """
        f(w): the leading log2|B| bits of the salted SHA-256 when |B| is a
        power of two, otherwise the leading 64 bits reduced mod |B|.
        """
        digest = self.salted_digest(w)
        B = self.num_buckets
        if B & (B - 1) == 0:
            return prefix_bits(digest, B.bit_length() - 1)
        return int.from_bytes(digest[:8], "big") % B

    def cookie_offset(self, w: str, cookie: bytes) -> int:
        """f(w || c) as a 64-bit integer."""
        digest = hashlib.sha256(self.salt + w.encode("utf-8") + cookie).digest()
        return int.from_bytes(digest[:8], "big")

    def gamma_of(self, w: str) -> int:
        B = self.num_buckets
        ratio = float(self.estimator.estimate(w)) / self.p_qbar
        if ratio >= 1.0:
            return B
        return min(B, max(1, math.ceil(B * ratio)))


def fsb_interval(w: str, p: FsbParams) -> BucketInterval:
    """
    gamma = min(|B|, ceil(|B| * p(w) / p(w_qbar))), floored at 1;
    start = f(w); the run wraps past |B| - 1 back to 0.
    """
    return BucketInterval(p.start_of(w), p.gamma_of(w), p.num_buckets)


def pick_bucket(
    w: str,
    p: FsbParams,
    mode: Union[SelectionMode, str] = SelectionMode.RANDOM,
    rng: Union[None, int, np.random.Generator] = None,
    cookie: Optional[bytes] = None,
) -> int:
    """
    Choose one bucket of w's run.

    Args:
        w: password
        p: FSB parameters
        mode: RANDOM (uniform over the run) or DERANDOMIZED (fixed per cookie)
        rng: seed or Generator for RANDOM mode; OS randomness when None
        cookie: client secret for DERANDOMIZED mode

    Returns:
        Bucket id in [0, |B|)
    """
    mode = SelectionMode.parse(mode)
    interval = fsb_interval(w, p)
    if mode is SelectionMode.DERANDOMIZED:
        if not cookie:
            raise ConfigurationError("derandomized selection needs a client cookie")
        j = p.cookie_offset(w, cookie) % interval.gamma
    elif rng is None:
        j = secrets.randbelow(interval.gamma)
    else:
        generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        j = int(generator.integers(interval.gamma))
    return (interval.start + j) % p.num_buckets


# =============================================================================
# Bandwidth
# =============================================================================

def bw_bound(scheme: Union[Scheme, str], params, N: int) -> float:
    """
    Balls-and-bins bound on the largest bucket.

    HPB/IDB: 2N / 2^l. FSB: 2 (q_bar + 1/p(w_qbar) + N/|B|).
    """
    scheme = Scheme.parse(scheme)
    if scheme in (Scheme.HPB, Scheme.IDB):
        return 2.0 * N / (2 ** params.l)
    return 2.0 * (params.q_bar + 1.0 / params.p_qbar + N / params.num_buckets)


def check_bucket_id(b: int, num_buckets: int) -> int:
    """Validate a bucket id, raising MalformedInputError when out of range."""
    if not 0 <= b < num_buckets:
        raise MalformedInputError(f"bucket id {b} outside [0, {num_buckets})")
    return b
