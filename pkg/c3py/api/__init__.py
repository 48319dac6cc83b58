"""
c3py.api - compromised-credential checking.

High-level API:
    from c3py import LeakDataset, ServiceConfig, build_stores, C3Client

Low-level file I/O (internal use):
    from c3py._io import EstimatorFile, IntervalStoreFile, PsiStoreFile
"""

from .errors import (
    C3Error,
    ConfigurationError,
    MalformedInputError,
    AlgorithmMismatchError,
    EmptyInputError,
    ArtifactError,
    EstimatorMismatchError,
    ProtocolError,
    StoreUnavailableError,
    WorldTooLargeError,
    TheoremViolation,
    UnknownProtocolError,
    TransportError,
)
from .enums import (
    HashAlgorithm,
    DatasetMode,
    Scheme,
    Protocol,
    PsiMode,
    SelectionMode,
    Game,
    SlowHashProfile,
)

# Data model
from .core import (
    PasswordHash,
    HashPrefix,
    Credential,
    LeakDataset,
    hash_password,
    similar_prefix,
    truncate,
    prefix_bits,
)

# Offline pipeline
from .pipeline import (
    SortedHashStream,
    BucketStats,
    preprocess,
    min_prefix_length,
    iter_buckets,
    populate_buckets,
    bucket_stats,
    bucket_stats_from_store,
    write_bucket_files,
    write_bucket_store,
)
from .distest import HybridEstimator, train_estimator

# Bucketization
from .bucketize import (
    HpbParams,
    FsbParams,
    BucketInterval,
    hpb_bucket,
    idb_bucket,
    fsb_interval,
    pick_bucket,
    bw_bound,
)
from .interval_store import (
    IntervalStore,
    build_interval_store,
    fsb_bucket_contents,
    naive_bucket_contents,
)

# Private set intersection
from .psi import (
    SlowHash,
    OprfSuite,
    ServerKey,
    PsiBucketStore,
    psi_bucket,
    oprf,
    blind,
    server_eval,
    unblind,
    check_membership,
    precompute_psi_store,
    rotate_store,
)

# Service
from .settings import ServiceConfig
from .server import C3Service, TokenBucketLimiter, create_app, serve, build_stores
from .client import (
    Transport,
    RequestsTransport,
    HttpResponse,
    ClientState,
    CheckResult,
    C3Client,
    locked_state,
)

__all__ = [
    # Errors
    "C3Error",
    "ConfigurationError",
    "MalformedInputError",
    "AlgorithmMismatchError",
    "EmptyInputError",
    "ArtifactError",
    "EstimatorMismatchError",
    "ProtocolError",
    "StoreUnavailableError",
    "WorldTooLargeError",
    "TheoremViolation",
    "UnknownProtocolError",
    "TransportError",
    # Enums
    "HashAlgorithm",
    "DatasetMode",
    "Scheme",
    "Protocol",
    "PsiMode",
    "SelectionMode",
    "Game",
    "SlowHashProfile",
    # Data model
    "PasswordHash",
    "HashPrefix",
    "Credential",
    "LeakDataset",
    "hash_password",
    "similar_prefix",
    "truncate",
    "prefix_bits",
    # Pipeline
    "SortedHashStream",
    "BucketStats",
    "preprocess",
    "min_prefix_length",
    "iter_buckets",
    "populate_buckets",
    "bucket_stats",
    "bucket_stats_from_store",
    "write_bucket_files",
    "write_bucket_store",
    "HybridEstimator",
    "train_estimator",
    # Bucketization
    "HpbParams",
    "FsbParams",
    "BucketInterval",
    "hpb_bucket",
    "idb_bucket",
    "fsb_interval",
    "pick_bucket",
    "bw_bound",
    "IntervalStore",
    "build_interval_store",
    "fsb_bucket_contents",
    "naive_bucket_contents",
    # PSI
    "SlowHash",
    "OprfSuite",
    "ServerKey",
    "PsiBucketStore",
    "psi_bucket",
    "oprf",
    "blind",
    "server_eval",
    "unblind",
    "check_membership",
    "precompute_psi_store",
    "rotate_store",
    # Service
    "ServiceConfig",
    "C3Service",
    "TokenBucketLimiter",
    "create_app",
    "serve",
    "build_stores",
    "Transport",
    "RequestsTransport",
    "HttpResponse",
    "ClientState",
    "CheckResult",
    "C3Client",
    "locked_state",
]
