"""
C3 query service.

C3Service answers the four protocols from immutable on-disk stores named by
the build manifest; create_app wraps it in a Flask application:

    GET  /range/<PREFIX>     hash suffixes (or full digests) sharing PREFIX
    GET  /fsb/<BUCKET_ID>    salted digests covering the FSB bucket
    POST /psi/<gpc|idb>      form x=<hex element>&b=<bucket id> -> {"y", "z"}
    GET  /meta               public manifest

build_stores runs the precomputation for every enabled protocol and writes
the manifest last.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from flask import Flask, Response, jsonify, request

from .._io.kvstore import SqliteStore
from .._io.manifest import Manifest
from .bucketize import FsbParams, check_bucket_id
from .core import HEX_DIGITS, LeakDataset, hash_password
from .distest import train_estimator
from .enums import Protocol, PsiMode
from .errors import (
    C3Error,
    ConfigurationError,
    MalformedInputError,
    ProtocolError,
    StoreUnavailableError,
    UnknownProtocolError,
)
from .interval_store import IntervalStore, build_interval_store, fsb_bucket_contents
from .pipeline import iter_buckets, min_prefix_length, preprocess, write_bucket_store
from .psi import ELEMENT_ENCODING, OprfSuite, PsiBucketStore, ServerKey, precompute_psi_store, server_eval
from .settings import ServiceConfig

logger = logging.getLogger(__name__)


RANGE_STORE = "range.sqlite"
FSB_STORE = "fsb.bin"
ESTIMATOR_FILE = "estimator.bin"
PSI_STORES = {PsiMode.GPC: "gpc.bin", PsiMode.IDB: "idb.bin"}
REFILL_PERIOD = 60.0
IMMUTABLE_CACHE = "public, max-age=86400, immutable"

_STATUS = {
    MalformedInputError: 400,
    ProtocolError: 400,
    UnknownProtocolError: 404,
    StoreUnavailableError: 503,
}


def status_for(error: C3Error) -> int:
    """HTTP status of a service error."""
    for cls, status in _STATUS.items():
        if isinstance(error, cls):
            return status
    return 500


# =============================================================================
# Rate Limiting
# =============================================================================

class TokenBucketLimiter:
    """
    Per-address token bucket: `rate` requests per minute, bursts up to `rate`.

    A rate of 0 disables limiting. An address idle for a full refill period
    holds a full bucket and is dropped; the sweep runs at most once per period.
    """

    def __init__(self, rate: int, clock: Callable[[], float] = time.monotonic):
        self.rate = rate
        self.clock = clock
        self._buckets: Dict[str, List[float]] = {}
        self._lock = threading.Lock()
        self._last_sweep = clock()

    def __len__(self) -> int:
        return len(self._buckets)

    def _sweep(self, now: float) -> None:
        idle = [a for a, (_, last) in self._buckets.items() if now - last >= REFILL_PERIOD]
        for address in idle:
            del self._buckets[address]
        self._last_sweep = now
        if idle:
            logger.debug("rate limiter dropped %d idle addresses", len(idle))

    def allow(self, address: str) -> bool:
        if self.rate <= 0:
            return True
        now = self.clock()
        with self._lock:
            if now - self._last_sweep >= REFILL_PERIOD:
                self._sweep(now)
            tokens, last = self._buckets.get(address, (float(self.rate), now))
            tokens = min(float(self.rate), tokens + (now - last) * self.rate / REFILL_PERIOD)
            allowed = tokens >= 1.0
            if allowed:
                tokens -= 1.0
            self._buckets[address] = [tokens, now]
        return allowed


# =============================================================================
# Service
# =============================================================================

class C3Service:
    """
    Read-only protocol handlers over the stores of one build.

    A store that fails to load leaves its protocol unavailable (503) rather
    than failing the whole service.
    """

    def __init__(self, config: ServiceConfig, manifest: Optional[Manifest] = None):
        self.config = config
        if manifest is None:
            try:
                manifest = Manifest.from_file(config.manifest_path)
            except OSError as e:
                raise ConfigurationError(f"no build manifest at {config.manifest_path}: {e}") from None
        self.manifest = manifest
        self.range_store: Optional[SqliteStore] = None
        self.fsb_store: Optional[IntervalStore] = None
        self.psi_stores: Dict[PsiMode, PsiBucketStore] = {}
        self.psi_suites: Dict[PsiMode, OprfSuite] = {}
        self.key: Optional[ServerKey] = None
        self._load()

    def _store_path(self, name: str) -> Path:
        return self.config.store_dir / name

    def _load(self) -> None:
        protocols = self.manifest.protocols
        for protocol in self.config.protocols:
            if protocol.value not in protocols:
                raise ConfigurationError(f"{protocol.value} is enabled but the build has no store for it")

        if self.config.enabled(Protocol.HIBP):
            try:
                self.range_store = SqliteStore(self._store_path(protocols["hibp"]["store"]), readonly=True)
            except (OSError, C3Error) as e:
                logger.error("range store unavailable: %s", e)

        if self.config.enabled(Protocol.FSB):
            try:
                self.fsb_store = IntervalStore.from_file(self._store_path(protocols["fsb"]["store"]))
            except (OSError, C3Error) as e:
                logger.error("fsb store unavailable: %s", e)

        psi_modes = [m for m in PsiMode if self.config.enabled(m.value)]
        if psi_modes:
            try:
                self.key = ServerKey.load(self.config.server_key_path, OprfSuite.for_profile(self.config.slow_hash))
            except (OSError, C3Error) as e:
                logger.error("server key unavailable: %s", e)
        for mode in psi_modes:
            if self.key is None:
                break
            try:
                store = PsiBucketStore.from_file(self._store_path(protocols[mode.value]["store"]))
                if store.key_id != self.key.key_id:
                    raise ConfigurationError(f"{mode.value} store is keyed by {store.key_id}, server key is {self.key.key_id}")
                self.psi_stores[mode] = store
                self.psi_suites[mode] = OprfSuite(slow_hash=store.slow_hash)
            except (OSError, C3Error) as e:
                logger.error("%s store unavailable: %s", mode.value, e)

        logger.info("service ready: %s", ", ".join(self.available()) or "no protocols")

    def available(self) -> List[str]:
        names = []
        if self.range_store is not None:
            names.append("hibp")
        if self.fsb_store is not None:
            names.append("fsb")
        names.extend(m.value for m in self.psi_stores)
        return names

    # === Handlers ===

    def handle_range(self, prefix: str) -> str:
        """
        Newline-separated suffixes of every stored digest starting with prefix.

        Raises:
            MalformedInputError: non-hex prefix or length other than the store's L
            StoreUnavailableError: range store not loaded
        """
        if self.range_store is None:
            raise StoreUnavailableError("range store is not available")
        info = self.manifest.protocols["hibp"]
        L = int(info["prefix_length"])
        prefix = prefix.strip().upper()
        if len(prefix) != L:
            raise MalformedInputError(f"prefix must be {L} hex characters, got {len(prefix)}")
        if not set(prefix) <= HEX_DIGITS:
            raise MalformedInputError("prefix must be hexadecimal")
        full = self.config.range_full_hash
        lines = [key if full else key[L:] for key, _ in self.range_store.scan_prefix(prefix)]
        logger.debug("range %s: %d entries", prefix, len(lines))
        return "".join(line + "\n" for line in lines)

    def handle_fsb(self, bucket_id: Union[int, str]) -> str:
        """
        Newline-separated salted digests of the passwords covering the bucket.

        Raises:
            MalformedInputError: non-integer or out-of-range bucket id
            StoreUnavailableError: FSB store not loaded
        """
        if self.fsb_store is None:
            raise StoreUnavailableError("fsb store is not available")
        b = _parse_bucket_id(bucket_id)
        check_bucket_id(b, self.fsb_store.num_buckets)
        digests = sorted(fsb_bucket_contents(self.fsb_store, b))
        logger.debug("fsb bucket %d: %d entries", b, len(digests))
        return "".join(d + "\n" for d in digests)

    def handle_psi(self, mode: str, x: str, b: Union[int, str]) -> Dict[str, object]:
        """
        One PSI round: y = x^key and the stored bucket z_b.

        Raises:
            UnknownProtocolError: mode is not gpc/idb or is not enabled
            StoreUnavailableError: the mode's store is not loaded
            ProtocolError: invalid element encoding or bucket id
        """
        try:
            psi_mode = PsiMode.parse(mode)
        except ConfigurationError:
            raise UnknownProtocolError(f"unknown PSI mode {mode!r}") from None
        if not self.config.enabled(psi_mode.value):
            raise UnknownProtocolError(f"{psi_mode.value} is not served")
        store = self.psi_stores.get(psi_mode)
        if store is None or self.key is None:
            raise StoreUnavailableError(f"{psi_mode.value} store is not available")
        try:
            bucket = _parse_bucket_id(b)
        except MalformedInputError as e:
            raise ProtocolError(str(e)) from None
        y, z = server_eval(self.key, x, bucket, store, self.psi_suites[psi_mode])
        logger.debug("%s bucket %d: %d elements", psi_mode.value, bucket, len(z))
        return {"y": y.hex(), "z": [element.hex() for element in z]}

    def meta(self) -> Dict[str, object]:
        view = self.manifest.public_view()
        view["available"] = self.available()
        return view

    def close(self) -> None:
        if self.range_store is not None:
            self.range_store.close()


def _parse_bucket_id(value: Union[int, str]) -> int:
    if isinstance(value, int):
        return value
    text = str(value).strip()
    if not text.isdigit():
        raise MalformedInputError(f"bucket id must be a non-negative integer, got {text!r}")
    return int(text)


# =============================================================================
# HTTP
# =============================================================================

def create_app(service: C3Service, limiter: Optional[TokenBucketLimiter] = None) -> Flask:
    """Flask application exposing `service`."""
    app = Flask("c3py")
    if limiter is None:
        limiter = TokenBucketLimiter(service.config.rate_limit)
    app.config["C3_SERVICE"] = service

    def text(body: str) -> Response:
        response = Response(body, mimetype="text/plain")
        response.headers["Cache-Control"] = IMMUTABLE_CACHE
        return response

    @app.before_request
    def throttle():
        if not limiter.allow(request.remote_addr or "unknown"):
            response = jsonify({"error": "rate limit exceeded"})
            response.status_code = 429
            response.headers["Retry-After"] = "60"
            return response
        return None

    @app.errorhandler(C3Error)
    def on_error(error: C3Error):
        status = status_for(error)
        if status == 500:
            logger.error("request failed: %s", error)
        response = jsonify({"error": str(error)})
        response.status_code = status
        return response

    @app.get("/range/<prefix>")
    def range_query(prefix: str):
        return text(service.handle_range(prefix))

    @app.get("/fsb/<bucket_id>")
    def fsb_query(bucket_id: str):
        return text(service.handle_fsb(bucket_id))

    @app.post("/psi/<mode>")
    def psi_query(mode: str):
        x = request.form.get("x")
        b = request.form.get("b")
        if x is None or b is None:
            raise ProtocolError("PSI request needs form fields x and b")
        return jsonify(service.handle_psi(mode, x, b))

    @app.get("/meta")
    def meta():
        return jsonify(service.meta())

    return app


def serve(config: ServiceConfig) -> None:
    """Run the development server on config.host:config.port."""
    service = C3Service(config)
    app = create_app(service)
    logger.info("serving %s on %s:%d", ", ".join(service.available()), config.host, config.port)
    try:
        app.run(host=config.host, port=config.port, threaded=True)
    finally:
        service.close()


# =============================================================================
# Build
# =============================================================================

def _require(path: Optional[Path], name: str) -> Path:
    if path is None:
        raise ConfigurationError(f"[build] {name} is required by the enabled protocols")
    return path


def _build_range(config: ServiceConfig, out: Path) -> Dict[str, object]:
    if config.digests is not None:
        stream = preprocess(config.digests)
    else:
        dataset = LeakDataset.load_passwords(_require(config.passwords, "passwords"))
        dataset.require_nonempty()
        stream = preprocess(hash_password(w, config.hash_algorithm).digest for w in dataset.passwords())
    try:
        algorithm = stream.algorithm or config.hash_algorithm
        if algorithm is not config.hash_algorithm:
            raise ConfigurationError(
                f"digest corpus is {algorithm.value}, config says {config.hash_algorithm.value}"
            )
        L = config.range_prefix if config.range_prefix is not None else min_prefix_length(stream)
        if L < 1:
            raise ConfigurationError(
                "corpus is too small for an automatic prefix length; set [build] range_prefix"
            )
        with SqliteStore(out) as store:
            count = write_bucket_store(iter_buckets(stream, L), store, algorithm)
    finally:
        stream.close()
    logger.info("range store: %d digests at prefix length %d", count, L)
    return {
        "algorithm": algorithm.value,
        "prefix_length": L,
        "full_hash": config.range_full_hash,
        "count": count,
        "store": RANGE_STORE,
    }


def _load_or_create_key(config: ServiceConfig, suite: OprfSuite) -> ServerKey:
    path = config.server_key_path
    if path.exists():
        return ServerKey.load(path, suite)
    key = ServerKey.generate(suite)
    path.parent.mkdir(parents=True, exist_ok=True)
    key.save(path, suite)
    logger.info("generated server key %s at %s", key.key_id, path)
    return key


def build_stores(config: ServiceConfig, built_at: Optional[str] = None) -> Manifest:
    """
    Precompute every enabled protocol's store and write the manifest.

    Artifacts are written under temporary names and renamed into place only
    after every stage succeeds; the manifest goes last. Apart from the
    timestamp the output is a function of the corpora, the config and the
    PSI key file (reused when it exists).

    Raises:
        ConfigurationError: missing corpus for an enabled protocol
        EmptyInputError, MalformedInputError: corpus problems
    """
    out = config.store_dir
    out.mkdir(parents=True, exist_ok=True)
    staged: Dict[str, Path] = {}

    def stage(name: str) -> Path:
        path = out / f".{name}.building"
        if path.exists():
            path.unlink()
        staged[name] = path
        return path

    protocols: Dict[str, Dict[str, object]] = {}
    estimator_info = None
    try:
        if config.enabled(Protocol.HIBP):
            protocols["hibp"] = _build_range(config, stage(RANGE_STORE))

        if config.enabled(Protocol.FSB):
            dataset = LeakDataset.load_passwords(_require(config.passwords, "passwords"))
            dataset.require_nonempty()
            estimator = train_estimator(dataset, t=config.histogram_size, smoothing=config.smoothing)
            estimator.save(stage(ESTIMATOR_FILE))
            params = FsbParams(config.fsb_buckets, config.fsb_qbar, estimator, config.fsb_salt)
            store = build_interval_store(dataset, params, config.fsb_shards, estimator.digest)
            store.to_file(stage(FSB_STORE))
            protocols["fsb"] = {
                "num_buckets": params.num_buckets,
                "q_bar": params.q_bar,
                "p_qbar": params.p_qbar,
                "salt": params.salt.hex(),
                "shards": store.r,
                "estimator_digest": estimator.digest,
                "store": FSB_STORE,
            }
            estimator_info = {"digest": estimator.digest, "path": ESTIMATOR_FILE}

        psi_modes = [m for m in PsiMode if config.enabled(m.value)]
        if psi_modes:
            pairs = LeakDataset.load_pairs(_require(config.pairs, "pairs"))
            pairs.require_nonempty()
            suite = OprfSuite.for_profile(config.slow_hash)
            key = _load_or_create_key(config, suite)
            n, r, p, salt = suite.slow_hash.params
            for mode in psi_modes:
                store = precompute_psi_store(pairs, key, config.psi_bits, mode, suite)
                store.to_file(stage(PSI_STORES[mode]), suite.group.name)
                protocols[mode.value] = {
                    "bits": config.psi_bits,
                    "key_id": key.key_id,
                    "group": suite.group.name,
                    "encoding": ELEMENT_ENCODING,
                    "slow_hash": {"n": n, "r": r, "p": p, "salt": salt.hex()},
                    "count": len(store),
                    "store": PSI_STORES[mode],
                }
    except BaseException:
        for path in staged.values():
            if path.exists():
                path.unlink()
        logger.error("build failed; no manifest written")
        raise

    for name, path in staged.items():
        os.replace(path, out / name)
    manifest = Manifest(
        built_at=built_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        protocols=protocols,
        estimator=estimator_info,
    )
    manifest.to_file(config.manifest_path)
    logger.info("build complete: %s", ", ".join(protocols))
    return manifest
