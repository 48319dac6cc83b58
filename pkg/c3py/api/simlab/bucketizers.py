"""
Bucketizers over simulated credentials.

A bucketizer maps (username, password) to the set of bucket ids the
credential may be queried under; the games weight each bucket by
1 / |buckets(u, w)|.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

from ..bucketize import FsbParams, HpbParams, fsb_interval, hpb_bucket, idb_bucket
from ..core import CREDENTIAL_SEPARATOR
from ..enums import HashAlgorithm, Scheme
from ..errors import ConfigurationError


class Bucketizer(ABC):
    """
    Attributes:
        scheme: bucketization scheme
        password_only: buckets do not depend on the username
    """
    scheme: Scheme
    password_only: bool = True

    def __init__(self):
        self._cache: Dict[Tuple[str, str], Tuple[int, ...]] = {}

    @property
    @abstractmethod
    def num_buckets(self) -> int:
        """|B|."""

    @abstractmethod
    def _compute(self, u: str, w: str) -> Tuple[int, ...]:
        """Bucket ids of (u, w), ascending."""

    def buckets(self, u: str, w: str) -> Tuple[int, ...]:
        key = ("", w) if self.password_only else (u, w)
        found = self._cache.get(key)
        if found is None:
            found = self._compute(u, w)
            self._cache[key] = found
        return found

    def size(self, u: str, w: str) -> int:
        return len(self.buckets(u, w))


class HpbBucketizer(Bucketizer):
    """Hash-prefix buckets of w (HIBP) or of u||w (GPC)."""

    scheme = Scheme.HPB

    def __init__(self, params: HpbParams, include_username: bool = False):
        super().__init__()
        self.params = params
        self.include_username = include_username
        self.password_only = not include_username

    @property
    def num_buckets(self) -> int:
        return self.params.num_buckets

    def _compute(self, u: str, w: str) -> Tuple[int, ...]:
        if self.include_username:
            data = u.lower().encode("utf-8") + CREDENTIAL_SEPARATOR + w.encode("utf-8")
            return (hpb_bucket(data, self.params),)
        return (hpb_bucket(w, self.params),)


class IdbBucketizer(Bucketizer):
    """Hash-prefix buckets of the username alone."""

    scheme = Scheme.IDB
    password_only = False

    def __init__(self, params: HpbParams):
        super().__init__()
        self.params = params

    @property
    def num_buckets(self) -> int:
        return self.params.num_buckets

    def _compute(self, u: str, w: str) -> Tuple[int, ...]:
        return (idb_bucket(u, self.params),)


class FsbBucketizer(Bucketizer):
    """Frequency-smoothing runs; a likely password sits in many buckets."""

    scheme = Scheme.FSB

    def __init__(self, params: FsbParams):
        super().__init__()
        self.params = params

    @property
    def num_buckets(self) -> int:
        return self.params.num_buckets

    def _compute(self, u: str, w: str) -> Tuple[int, ...]:
        return tuple(sorted(fsb_interval(w, self.params).covered()))


class SingleBucketizer(Bucketizer):
    """Everything in bucket 0."""

    scheme = Scheme.HPB

    @property
    def num_buckets(self) -> int:
        return 1

    def _compute(self, u: str, w: str) -> Tuple[int, ...]:
        return (0,)


def make_bucketizer(
    scheme: Scheme,
    bits: Optional[int] = None,
    num_buckets: Optional[int] = None,
    q_bar: Optional[int] = None,
    estimator=None,
    salt: bytes = b"",
    algorithm: HashAlgorithm = HashAlgorithm.SHA256,
    include_username: bool = False,
) -> Bucketizer:
    """
    Build a bucketizer from scheme parameters.

    HPB and IDB need `bits`; FSB needs `num_buckets`, `q_bar` and an
    estimator (anything with estimate/top_q).
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.FSB:
        if num_buckets is None or q_bar is None or estimator is None:
            raise ConfigurationError("fsb needs num_buckets, q_bar and an estimator")
        return FsbBucketizer(FsbParams(num_buckets, q_bar, estimator, salt))
    if bits is None:
        raise ConfigurationError(f"{scheme.value} needs a bucket-id bit count")
    params = HpbParams(bits, algorithm, salt)
    if scheme is Scheme.IDB:
        return IdbBucketizer(params)
    return HpbBucketizer(params, include_username)
