"""
Pytest fixtures for c3py tests.
"""

import tempfile
from pathlib import Path
from typing import Dict, List, Tuple

import pytest

from c3py import C3Service, LeakDataset, OprfSuite, ServiceConfig, build_stores, create_app
from c3py.api.client import HttpResponse, Transport
from c3py.api.enums import SlowHashProfile


LEAKED_PASSWORDS = (
    ["123456"] * 40 + ["password"] * 25 + ["qwerty"] * 12 + ["letmein"] * 6
    + ["dragon"] * 4 + ["monkey"] * 3 + ["sunshine"] * 2
    + ["hunter2", "correcthorse", "Tr0ub4dor&3", "zxcvbnm", "iloveyou"]
)

LEAKED_PAIRS = [
    ("alice", "123456"),
    ("alice", "password"),
    ("bob", "hunter2"),
    ("carol", "qwerty"),
    ("dave", "letmein"),
    ("erin", "Tr0ub4dor&3"),
    ("frank", "123456"),
    ("grace", "dragon"),
]


def pytest_addoption(parser):
    """Add --slow option to run slow tests."""
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="Run slow tests (desk-scale acceptance experiments)",
    )


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless --slow is passed."""
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="use --slow to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def temp_dir():
    """Provide a temporary directory that's cleaned up after the test."""
    with tempfile.TemporaryDirectory() as tmp:
        yield Path(tmp)


@pytest.fixture(scope="session")
def test_suite():
    """OPRF suite with the cheap slow-hash profile."""
    return OprfSuite.for_profile(SlowHashProfile.TEST)


@pytest.fixture
def password_leak():
    """Small password leak with Zipf-like multiplicities."""
    return LeakDataset.from_passwords(LEAKED_PASSWORDS)


@pytest.fixture
def pair_leak():
    """Small username-password leak."""
    return LeakDataset.from_pairs(LEAKED_PAIRS)


class FlaskTransport(Transport):
    """Client transport over a Flask test client; records every request."""

    def __init__(self, app):
        self.client = app.test_client()
        self.requests: List[Tuple[str, str, Dict[str, str]]] = []

    def get(self, path: str) -> HttpResponse:
        self.requests.append(("GET", path, {}))
        r = self.client.get(path)
        return HttpResponse(r.status_code, r.get_data())

    def post(self, path: str, form: Dict[str, str]) -> HttpResponse:
        self.requests.append(("POST", path, dict(form)))
        r = self.client.post(path, data=form)
        return HttpResponse(r.status_code, r.get_data())

    def transcript(self) -> str:
        """Every path and form value sent, as one string."""
        parts = []
        for method, path, form in self.requests:
            parts.append(f"{method} {path}")
            parts.extend(f"{k}={v}" for k, v in form.items())
        return "\n".join(parts)


def write_corpora(directory: Path) -> Tuple[Path, Path]:
    """Write the password and pair corpora; returns their paths."""
    passwords = directory / "passwords.txt"
    passwords.write_text("".join(w + "\n" for w in LEAKED_PASSWORDS), encoding="utf-8")
    pairs = directory / "pairs.txt"
    pairs.write_text("".join(f"{u}\t{w}\n" for u, w in LEAKED_PAIRS), encoding="utf-8")
    return passwords, pairs


def small_config(directory: Path, **overrides) -> ServiceConfig:
    """Config over the small corpora with test-sized parameters."""
    passwords, pairs = write_corpora(directory)
    values = dict(
        store_dir=directory / "stores",
        passwords=passwords,
        pairs=pairs,
        range_prefix=1,
        histogram_size=5,
        fsb_buckets=64,
        fsb_qbar=3,
        fsb_salt=bytes.fromhex("c3c3"),
        psi_bits=4,
        slow_hash=SlowHashProfile.TEST,
        rate_limit=0,
    )
    values.update(overrides)
    return ServiceConfig(**values)


@pytest.fixture(scope="module")
def built_stores(tmp_path_factory):
    """One build of every protocol's store; returns (config, manifest)."""
    directory = tmp_path_factory.mktemp("build")
    config = small_config(directory)
    manifest = build_stores(config, built_at="2024-01-01T00:00:00+00:00")
    return config, manifest


@pytest.fixture
def service(built_stores):
    """Service over the module's build."""
    config, manifest = built_stores
    svc = C3Service(config, manifest)
    yield svc
    svc.close()


@pytest.fixture
def transport(service):
    """Recording transport to a Flask app over `service`."""
    return FlaskTransport(create_app(service))
