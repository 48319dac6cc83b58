"""
c3py - compromised-credential checking.

Servers hold leaked credentials bucketed so that a client can ask whether
its password (or username/password pair) leaked while revealing only a
bucket id. Four protocols: hash-prefix range queries, frequency-smoothing
buckets, and two PSI variants over a shared OPRF.

Example:
    from c3py import ServiceConfig, build_stores, C3Client, RequestsTransport

    # Build every enabled store once
    config = ServiceConfig.from_file("c3.ini")
    build_stores(config)

    # Ask a running server
    client = C3Client(RequestsTransport("http://127.0.0.1:8080"))
    result = client.check("fsb", "hunter2")
    if result.leaked:
        print("change it")

Security evaluation lives in c3py.api.simlab.
"""

# Exceptions first; every other module raises them
from .api.errors import (
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

# Enums
from .api.enums import (
    HashAlgorithm,
    DatasetMode,
    Scheme,
    Protocol,
    PsiMode,
    SelectionMode,
    Game,
    SlowHashProfile,
)

from .api import (
    # Data model
    PasswordHash,
    HashPrefix,
    Credential,
    LeakDataset,
    hash_password,
    truncate,
    # Pipeline
    preprocess,
    min_prefix_length,
    populate_buckets,
    bucket_stats,
    HybridEstimator,
    train_estimator,
    # Bucketization
    HpbParams,
    FsbParams,
    hpb_bucket,
    idb_bucket,
    fsb_interval,
    pick_bucket,
    build_interval_store,
    # PSI
    ServerKey,
    OprfSuite,
    precompute_psi_store,
    # Service
    ServiceConfig,
    C3Service,
    create_app,
    build_stores,
    C3Client,
    RequestsTransport,
    CheckResult,
)

__version__ = "0.1.0"

__all__ = [
    # Core classes
    "PasswordHash",
    "HashPrefix",
    "Credential",
    "LeakDataset",
    "HybridEstimator",
    "HpbParams",
    "FsbParams",
    "ServerKey",
    "OprfSuite",
    "ServiceConfig",
    "C3Service",
    "C3Client",
    "RequestsTransport",
    "CheckResult",
    # Functions
    "hash_password",
    "truncate",
    "preprocess",
    "min_prefix_length",
    "populate_buckets",
    "bucket_stats",
    "train_estimator",
    "hpb_bucket",
    "idb_bucket",
    "fsb_interval",
    "pick_bucket",
    "build_interval_store",
    "precompute_psi_store",
    "create_app",
    "build_stores",
    # Enums
    "HashAlgorithm",
    "DatasetMode",
    "Scheme",
    "Protocol",
    "PsiMode",
    "SelectionMode",
    "Game",
    "SlowHashProfile",
    # Exceptions
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
]
