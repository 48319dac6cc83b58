"""
Checking client.

C3Client runs one protocol end to end against a service and reports whether
the credential is in the leak. Only bucket identifiers and blinded group
elements leave the machine.

Example:
    >>> client = C3Client(RequestsTransport("http://127.0.0.1:8080"))
    >>> client.check_hibp("test").leaked
    True
"""

from __future__ import annotations

import json
import logging
import os
import secrets
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

import requests

from .bucketize import FsbParams, pick_bucket
from .core import Credential, hash_password, truncate
from .distest import HybridEstimator
from .enums import Protocol, PsiMode, SelectionMode
from .errors import (
    ConfigurationError,
    EstimatorMismatchError,
    ProtocolError,
    StoreUnavailableError,
    TransportError,
)
from .psi import OprfSuite, SlowHash, blind, check_membership, psi_bucket, unblind

try:
    import fcntl
except ImportError:  # pragma: no cover - non-POSIX
    fcntl = None

logger = logging.getLogger(__name__)


DEFAULT_SERVER_URL = "http://127.0.0.1:8080"
DEFAULT_STATE_PATH = Path("~/.c3py/state.json")
COOKIE_SIZE = 32
DEFAULT_TIMEOUT = 30.0


# =============================================================================
# Transport
# =============================================================================

@dataclass
class HttpResponse:
    status: int
    body: bytes

    @property
    def text(self) -> str:
        return self.body.decode("utf-8")

    def json(self) -> Any:
        try:
            return json.loads(self.body)
        except ValueError:
            raise ProtocolError("server response is not JSON") from None


class Transport(ABC):
    """How the client reaches the service."""

    @abstractmethod
    def get(self, path: str) -> HttpResponse:
        """GET path relative to the service root."""

    @abstractmethod
    def post(self, path: str, form: Dict[str, str]) -> HttpResponse:
        """POST a url-encoded form."""


class RequestsTransport(Transport):
    """HTTP transport over a requests.Session."""

    def __init__(self, base_url: str = DEFAULT_SERVER_URL, timeout: float = DEFAULT_TIMEOUT,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def _send(self, method: str, path: str, **kwargs) -> HttpResponse:
        try:
            r = self.session.request(method, self.base_url + path, timeout=self.timeout, **kwargs)
        except requests.RequestException as e:
            raise TransportError(f"cannot reach {self.base_url}: {e}") from None
        return HttpResponse(r.status_code, r.content)

    def get(self, path: str) -> HttpResponse:
        return self._send("GET", path)

    def post(self, path: str, form: Dict[str, str]) -> HttpResponse:
        return self._send("POST", path, data=form)


def _checked(response: HttpResponse, what: str) -> HttpResponse:
    if response.status != 200:
        detail = ""
        try:
            detail = response.json().get("error", "")
        except (ProtocolError, AttributeError):
            pass
        raise TransportError(f"{what} failed with HTTP {response.status} {detail}".rstrip(), response.status)
    return response


# =============================================================================
# State
# =============================================================================

@dataclass
class ClientState:
    """
    Local client secrets and bookkeeping.

    Attributes:
        cookie: derandomization secret; generated once, never sent
        server_url: service base address
        estimator_path: local copy of the published estimator artifact
        estimator_digest: last estimator digest seen in the service manifest
    """
    cookie: bytes
    server_url: str = DEFAULT_SERVER_URL
    estimator_path: Optional[str] = None
    estimator_digest: Optional[str] = None

    def __post_init__(self):
        if len(self.cookie) != COOKIE_SIZE:
            raise ValueError(f"cookie must be {COOKIE_SIZE} bytes, got {len(self.cookie)}")

    @classmethod
    def create(cls, server_url: str = DEFAULT_SERVER_URL) -> "ClientState":
        return cls(secrets.token_bytes(COOKIE_SIZE), server_url)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cookie": self.cookie.hex(),
            "server_url": self.server_url,
            "estimator_path": self.estimator_path,
            "estimator_digest": self.estimator_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClientState":
        try:
            return cls(
                cookie=bytes.fromhex(data["cookie"]),
                server_url=data.get("server_url") or DEFAULT_SERVER_URL,
                estimator_path=data.get("estimator_path"),
                estimator_digest=data.get("estimator_digest"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"malformed client state: {e}") from None

    @classmethod
    def load(cls, path: Path) -> "ClientState":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"client state {path} is not JSON: {e}") from None

    def save(self, path: Path) -> None:
        """Owner-only permissions; replaced atomically."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        fd = os.open(str(tmp), os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
        os.replace(tmp, path)


@contextmanager
def locked_state(path: Path, server_url: Optional[str] = None) -> Iterator[ClientState]:
    """
    Exclusive access to the state file; created with a fresh cookie when
    missing and saved back on clean exit.
    """
    path = Path(path).expanduser()
    path.parent.mkdir(mode=0o700, parents=True, exist_ok=True)
    lock_path = path.with_name(path.name + ".lock")
    with open(lock_path, "a") as lock:
        if fcntl is not None:
            fcntl.flock(lock.fileno(), fcntl.LOCK_EX)
        try:
            if path.exists():
                state = ClientState.load(path)
            else:
                state = ClientState.create(server_url or DEFAULT_SERVER_URL)
                logger.info("created client state at %s", path)
            if server_url:
                state.server_url = server_url
            yield state
            state.save(path)
        finally:
            if fcntl is not None:
                fcntl.flock(lock.fileno(), fcntl.LOCK_UN)


# =============================================================================
# Client
# =============================================================================

@dataclass(frozen=True)
class CheckResult:
    """Verdict of one check; truthy when leaked."""
    protocol: Protocol
    leaked: bool
    bucket: Union[int, str, None] = None
    estimator_changed: bool = False

    def __bool__(self) -> bool:
        return self.leaked

    def to_dict(self) -> Dict[str, Any]:
        return {
            "protocol": self.protocol.value,
            "leaked": self.leaked,
            "bucket": self.bucket,
            "estimator_changed": self.estimator_changed,
        }


class C3Client:
    """
    One client instance runs one query at a time.

    Args:
        transport: how to reach the service
        state_path: persisted state file; an in-memory state with a fresh
            cookie is used when None
        estimator: FSB estimator; loaded from the state's estimator_path
            when None
        selection: FSB bucket selection mode
        rng: seed or Generator for random FSB selection (OS randomness when None)
    """

    def __init__(
        self,
        transport: Transport,
        state_path: Optional[Path] = None,
        estimator: Optional[HybridEstimator] = None,
        selection: Union[SelectionMode, str] = SelectionMode.RANDOM,
        rng=None,
    ):
        self.transport = transport
        self.state_path = state_path
        self.estimator = estimator
        self.selection = SelectionMode.parse(selection)
        self.rng = rng
        self._memory_state = ClientState.create() if state_path is None else None
        self._meta: Optional[Dict[str, Any]] = None

    @contextmanager
    def _state(self) -> Iterator[ClientState]:
        if self._memory_state is not None:
            yield self._memory_state
        else:
            with locked_state(self.state_path) as state:
                yield state

    def meta(self, refresh: bool = False) -> Dict[str, Any]:
        """Public manifest of the service."""
        if self._meta is None or refresh:
            data = _checked(self.transport.get("/meta"), "manifest request").json()
            if not isinstance(data, dict) or "protocols" not in data:
                raise ProtocolError("manifest response has no protocols")
            self._meta = data
        return self._meta

    def _protocol(self, name: str) -> Dict[str, Any]:
        meta = self.meta()
        info = meta["protocols"].get(name)
        if info is None or name not in meta.get("available", [name]):
            raise StoreUnavailableError(f"service does not offer {name}")
        return info

    # === Protocols ===

    def check_hibp(self, password: str) -> CheckResult:
        """Range query on the hash prefix; compares suffixes locally."""
        info = self._protocol("hibp")
        h = hash_password(password, info["algorithm"])
        prefix = truncate(h, int(info["prefix_length"])).prefix
        body = _checked(self.transport.get(f"/range/{prefix}"), "range query").text
        suffix = h.digest[len(prefix):]
        leaked = any(line in (suffix, h.digest) for line in body.split())
        return CheckResult(Protocol.HIBP, leaked, prefix)

    def _fsb_estimator(self, state: ClientState) -> HybridEstimator:
        if self.estimator is None:
            if not state.estimator_path:
                raise ConfigurationError("FSB checks need the service's estimator artifact (--estimator)")
            self.estimator = HybridEstimator.load(Path(state.estimator_path).expanduser())
        return self.estimator

    def check_fsb(self, password: str, mode: Union[SelectionMode, str, None] = None) -> CheckResult:
        """
        Query one bucket of the password's run and look for its salted digest.

        Raises:
            EstimatorMismatchError: local estimator differs from the published one
        """
        info = self._protocol("fsb")
        mode = self.selection if mode is None else SelectionMode.parse(mode)
        with self._state() as state:
            estimator = self._fsb_estimator(state)
            published = info["estimator_digest"]
            if estimator.digest != published:
                raise EstimatorMismatchError(
                    f"local estimator {estimator.digest[:12]} differs from the service's {published[:12]}"
                )
            changed = state.estimator_digest is not None and state.estimator_digest != published
            if changed:
                logger.warning("service estimator changed since the last check; bucket runs have moved")
            state.estimator_digest = published
            params = FsbParams(
                int(info["num_buckets"]), int(info["q_bar"]), estimator,
                bytes.fromhex(info["salt"]), float(info["p_qbar"]),
            )
            b = pick_bucket(password, params, mode, self.rng, state.cookie)
        body = _checked(self.transport.get(f"/fsb/{b}"), "fsb query").text
        leaked = params.salted_hex(password) in body.split()
        return CheckResult(Protocol.FSB, leaked, b, changed)

    def check_psi(self, username: str, password: str, mode: Union[PsiMode, str] = PsiMode.GPC) -> CheckResult:
        """
        Blind, query, unblind, compare: one round trip.

        Credentials that fail the ingest cleaning filter cannot be in the
        leak and are answered locally.

        Raises:
            ProtocolError: invalid element in the response
        """
        mode = PsiMode.parse(mode)
        protocol = Protocol.parse(mode.value)
        info = self._protocol(mode.value)
        credential = Credential.clean(username, password)
        if credential is None:
            logger.info("credential fails the cleaning filter; not queried")
            return CheckResult(protocol, False)
        slow = info["slow_hash"]
        suite = OprfSuite(slow_hash=SlowHash(int(slow["n"]), int(slow["r"]), int(slow["p"]), bytes.fromhex(slow["salt"])))
        if info.get("group", suite.group.name) != suite.group.name:
            raise ConfigurationError(f"service uses group {info['group']}, client supports {suite.group.name}")

        b = psi_bucket(credential, int(info["bits"]), mode)
        r, x = blind(credential.username, credential.password, suite=suite)
        response = _checked(self.transport.post(f"/psi/{mode.value}", {"x": x.hex(), "b": str(b)}), "psi query")
        data = response.json()
        try:
            y = data["y"]
            z = list(data["z"])
        except (KeyError, TypeError):
            raise ProtocolError("psi response needs fields y and z") from None
        x_tilde = unblind(y, r, suite)
        return CheckResult(protocol, check_membership(x_tilde, z), b)

    def check(self, protocol: Union[Protocol, str], password: str, username: Optional[str] = None) -> CheckResult:
        """Dispatch to the named protocol."""
        protocol = Protocol.parse(protocol)
        if protocol is Protocol.HIBP:
            return self.check_hibp(password)
        if protocol is Protocol.FSB:
            return self.check_fsb(password)
        if not username:
            raise ConfigurationError(f"{protocol.value} checks need a username")
        return self.check_psi(username, password, protocol.value)
