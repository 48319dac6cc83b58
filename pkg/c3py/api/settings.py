"""
Service configuration.

ServiceConfig is read from an INI file:

    [service]
    host = 127.0.0.1
    port = 8080
    protocols = hibp, fsb, gpc, idb
    store_dir = stores
    rate_limit = 100            ; requests per address per minute, 0 disables
    range_full_hash = false

    [build]
    passwords = corpus/passwords.txt      ; one password per line
    pairs = corpus/pairs.txt              ; username<TAB>password
    digests =                             ; optional pre-hashed corpus for hibp
    hash_algorithm = sha1
    range_prefix = 5                      ; hex characters, or auto
    histogram_size = 1000000
    smoothing = 0.01
    fsb_buckets = 1073741824
    fsb_qbar = 1000
    fsb_shards = auto
    fsb_salt =                            ; hex
    psi_bits = 16
    slow_hash = production
    key_file = server.key

Relative paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Optional, Tuple, Union

from .._io.manifest import MANIFEST_NAME
from .bucketize import DEFAULT_FSB_BUCKETS, DEFAULT_FSB_QBAR, DEFAULT_HPB_BITS, DEFAULT_PSI_BITS
from .distest import DEFAULT_HEAD_SIZE, DEFAULT_SMOOTHING
from .enums import HashAlgorithm, Protocol, SlowHashProfile
from .errors import ConfigurationError


DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8080
DEFAULT_RATE_LIMIT = 100
DEFAULT_RANGE_PREFIX = DEFAULT_HPB_BITS // 4
ALL_PROTOCOLS = (Protocol.HIBP, Protocol.FSB, Protocol.GPC, Protocol.IDB)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


@dataclass
class ServiceConfig:
    """
    Deployment parameters for `c3 build` and `c3 serve`.

    Attributes:
        range_prefix: HIBP prefix length in hex characters; None computes
            the minimum k-anonymous length from the corpus at build time
        fsb_shards: FSB shard count; None picks one from the corpus size
        key_file: PSI server key; store_dir/server.key when None
    """
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT
    protocols: Tuple[Protocol, ...] = ALL_PROTOCOLS
    store_dir: Path = Path("stores")
    rate_limit: int = DEFAULT_RATE_LIMIT
    range_full_hash: bool = False

    passwords: Optional[Path] = None
    pairs: Optional[Path] = None
    digests: Optional[Path] = None
    hash_algorithm: HashAlgorithm = HashAlgorithm.SHA1
    range_prefix: Optional[int] = DEFAULT_RANGE_PREFIX
    histogram_size: int = DEFAULT_HEAD_SIZE
    smoothing: float = DEFAULT_SMOOTHING
    fsb_buckets: int = DEFAULT_FSB_BUCKETS
    fsb_qbar: int = DEFAULT_FSB_QBAR
    fsb_shards: Optional[int] = None
    fsb_salt: bytes = b""
    psi_bits: int = DEFAULT_PSI_BITS
    slow_hash: SlowHashProfile = SlowHashProfile.PRODUCTION
    key_file: Optional[Path] = None

    source: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self):
        self.store_dir = Path(self.store_dir)
        self.protocols = tuple(Protocol.parse(p) for p in self.protocols)
        self.hash_algorithm = HashAlgorithm.parse(self.hash_algorithm)
        self.slow_hash = SlowHashProfile.parse(self.slow_hash)
        if not 0 < self.port < 65536:
            raise ValueError(f"port must be in [1, 65535], got {self.port}")
        if self.rate_limit < 0:
            raise ValueError(f"rate_limit must be >= 0, got {self.rate_limit}")
        if not self.protocols:
            raise ValueError("at least one protocol must be enabled")
        if self.range_prefix is not None and not 1 <= self.range_prefix <= self.hash_algorithm.hex_length:
            raise ValueError(
                f"range_prefix must be in [1, {self.hash_algorithm.hex_length}], got {self.range_prefix}"
            )
        if not 1 <= self.psi_bits <= 32:
            raise ValueError(f"psi_bits must be in [1, 32], got {self.psi_bits}")
        if self.histogram_size < 1:
            raise ValueError(f"histogram_size must be >= 1, got {self.histogram_size}")
        if self.fsb_buckets < 1 or self.fsb_qbar < 1:
            raise ValueError(f"fsb_buckets and fsb_qbar must be >= 1, got {self.fsb_buckets}, {self.fsb_qbar}")

    # === Derived ===

    def enabled(self, protocol: Union[Protocol, str]) -> bool:
        return Protocol.parse(protocol) in self.protocols

    @property
    def manifest_path(self) -> Path:
        return self.store_dir / MANIFEST_NAME

    @property
    def server_key_path(self) -> Path:
        return self.key_file if self.key_file is not None else self.store_dir / "server.key"

    # === INI ===

    @classmethod
    def from_string(cls, text: str, base_dir: Optional[Path] = None) -> "ServiceConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigurationError(f"cannot parse config: {e}") from None
        return cls._from_parser(parser, Path(base_dir) if base_dir else Path.cwd())

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from None
        config = cls.from_string(text, path.resolve().parent)
        config.source = path
        return config

    @classmethod
    def _from_parser(cls, parser: configparser.ConfigParser, base: Path) -> "ServiceConfig":
        service = parser["service"] if parser.has_section("service") else {}
        build = parser["build"] if parser.has_section("build") else {}

        def path_of(section, name: str) -> Optional[Path]:
            value = section.get(name, "").strip()
            if not value:
                return None
            p = Path(value).expanduser()
            return p if p.is_absolute() else base / p

        def int_of(section, name: str, default: int) -> int:
            value = section.get(name, "").strip()
            if not value:
                return default
            try:
                return int(value, 0)
            except ValueError:
                raise ConfigurationError(f"{name} must be an integer, got {value!r}") from None

        def auto_int(section, name: str, default: Optional[int]) -> Optional[int]:
            value = section.get(name, "").strip().lower()
            if value == "auto":
                return None
            return int_of(section, name, default) if value else default

        def bool_of(section, name: str) -> bool:
            value = section.get(name, "").strip().lower()
            if value in _TRUE:
                return True
            if value in _FALSE:
                return False
            raise ConfigurationError(f"{name} must be a boolean, got {value!r}")

        protocols_text = service.get("protocols", "").strip()
        protocols = (
            tuple(Protocol.parse(p.strip()) for p in protocols_text.replace(",", " ").split())
            if protocols_text else ALL_PROTOCOLS
        )

        smoothing_text = build.get("smoothing", "").strip()
        salt_text = build.get("fsb_salt", "").strip()
        try:
            smoothing = float(smoothing_text) if smoothing_text else DEFAULT_SMOOTHING
            salt = bytes.fromhex(salt_text)
        except ValueError as e:
            raise ConfigurationError(f"bad [build] value: {e}") from None

        try:
            return cls(
                host=service.get("host", DEFAULT_HOST).strip() or DEFAULT_HOST,
                port=int_of(service, "port", DEFAULT_PORT),
                protocols=protocols,
                store_dir=path_of(service, "store_dir") or base / "stores",
                rate_limit=int_of(service, "rate_limit", DEFAULT_RATE_LIMIT),
                range_full_hash=bool_of(service, "range_full_hash"),
                passwords=path_of(build, "passwords"),
                pairs=path_of(build, "pairs"),
                digests=path_of(build, "digests"),
                hash_algorithm=HashAlgorithm.parse(build.get("hash_algorithm", "sha1").strip() or "sha1"),
                range_prefix=auto_int(build, "range_prefix", DEFAULT_RANGE_PREFIX),
                histogram_size=int_of(build, "histogram_size", DEFAULT_HEAD_SIZE),
                smoothing=smoothing,
                fsb_buckets=int_of(build, "fsb_buckets", DEFAULT_FSB_BUCKETS),
                fsb_qbar=int_of(build, "fsb_qbar", DEFAULT_FSB_QBAR),
                fsb_shards=auto_int(build, "fsb_shards", None),
                fsb_salt=salt,
                psi_bits=int_of(build, "psi_bits", DEFAULT_PSI_BITS),
                slow_hash=SlowHashProfile.parse(build.get("slow_hash", "production").strip() or "production"),
                key_file=path_of(build, "key_file"),
            )
        except ValueError as e:
            raise ConfigurationError(str(e)) from None

    def to_string(self) -> str:
        """INI text that from_string reads back to an equal config (absolute paths)."""
        parser = configparser.ConfigParser()
        parser["service"] = {
            "host": self.host,
            "port": str(self.port),
            "protocols": ", ".join(p.value for p in self.protocols),
            "store_dir": str(self.store_dir),
            "rate_limit": str(self.rate_limit),
            "range_full_hash": "true" if self.range_full_hash else "false",
        }

        def opt(value) -> str:
            return "" if value is None else str(value)

        parser["build"] = {
            "passwords": opt(self.passwords),
            "pairs": opt(self.pairs),
            "digests": opt(self.digests),
            "hash_algorithm": self.hash_algorithm.value,
            "range_prefix": "auto" if self.range_prefix is None else str(self.range_prefix),
            "histogram_size": str(self.histogram_size),
            "smoothing": repr(self.smoothing),
            "fsb_buckets": str(self.fsb_buckets),
            "fsb_qbar": str(self.fsb_qbar),
            "fsb_shards": "auto" if self.fsb_shards is None else str(self.fsb_shards),
            "fsb_salt": self.fsb_salt.hex(),
            "psi_bits": str(self.psi_bits),
            "slow_hash": self.slow_hash.value,
            "key_file": opt(self.key_file),
        }
        buf = StringIO()
        parser.write(buf)
        return buf.getvalue()
