"""
Tests for the store build and the HTTP query service.
"""

import pytest

from c3py import (
    C3Service,
    ConfigurationError,
    Credential,
    FsbParams,
    HybridEstimator,
    build_stores,
    create_app,
    fsb_interval,
    hash_password,
)
from c3py._io.manifest import Manifest
from c3py.api.client import Transport
from c3py.api.psi import PsiBucketStore, ServerKey, blind, psi_bucket
from c3py.api.server import TokenBucketLimiter

from .conftest import LEAKED_PASSWORDS, small_config


@pytest.fixture
def client(service):
    return create_app(service).test_client()


class TestBuild:
    """Tests for build_stores and the manifest."""

    def test_manifest_lists_every_protocol(self, built_stores):
        """Test one manifest section per enabled protocol."""
        config, manifest = built_stores
        assert set(manifest.protocols) == {"hibp", "fsb", "gpc", "idb"}
        assert manifest.built_at == "2024-01-01T00:00:00+00:00"
        assert Manifest.from_file(config.manifest_path) == manifest

    def test_range_section(self, built_stores):
        """Test the range store's recorded parameters."""
        _, manifest = built_stores
        hibp = manifest.protocols["hibp"]
        assert hibp["prefix_length"] == 1
        assert hibp["algorithm"] == "sha1"
        assert hibp["count"] == len(set(LEAKED_PASSWORDS))

    def test_fsb_section_matches_estimator(self, built_stores):
        """Test that the published digest is the saved estimator's."""
        config, manifest = built_stores
        estimator = HybridEstimator.load(config.store_dir / "estimator.bin")
        assert manifest.protocols["fsb"]["estimator_digest"] == estimator.digest
        assert manifest.estimator["digest"] == estimator.digest
        assert manifest.protocols["fsb"]["salt"] == "c3c3"

    def test_psi_sections_share_key(self, built_stores):
        """Test that both PSI stores name the server key."""
        config, manifest = built_stores
        key_ids = {manifest.protocols[m]["key_id"] for m in ("gpc", "idb")}
        assert len(key_ids) == 1
        assert config.server_key_path.exists()
        assert manifest.protocols["gpc"]["count"] == 8

    def test_no_staging_files_left(self, built_stores):
        """Test that every staged artifact was renamed into place."""
        config, _ = built_stores
        assert not list(config.store_dir.glob(".*.building"))

    def test_rebuild_reuses_key(self, temp_dir):
        """Test that a second build keeps the key and reproduces the stores."""
        config = small_config(temp_dir, protocols=("gpc",))
        first = build_stores(config, built_at="t")
        gpc = PsiBucketStore.from_file(config.store_dir / "gpc.bin")
        second = build_stores(config, built_at="t")
        assert first == second
        assert PsiBucketStore.from_file(config.store_dir / "gpc.bin").buckets == gpc.buckets

    def test_missing_corpus(self, temp_dir):
        """Test that a failed build writes no manifest."""
        config = small_config(temp_dir, protocols=("gpc",), pairs=None)
        with pytest.raises(ConfigurationError):
            build_stores(config)
        assert not config.manifest_path.exists()

    def test_auto_prefix_too_small(self, temp_dir):
        """Test that a zero automatic prefix length is refused."""
        config = small_config(temp_dir, protocols=("hibp",), range_prefix=None)
        (temp_dir / "passwords.txt").write_text("a\nb\nc\n")
        with pytest.raises(ConfigurationError):
            build_stores(config)

    def test_service_refuses_missing_protocol(self, temp_dir):
        """Test that enabling a protocol the build lacks is a config error."""
        config = small_config(temp_dir, protocols=("hibp",))
        manifest = build_stores(config, built_at="t")
        wider = small_config(temp_dir, protocols=("hibp", "fsb"))
        with pytest.raises(ConfigurationError):
            C3Service(wider, manifest)


class TestRangeRoute:
    """Tests for GET /range/<prefix>."""

    def test_suffixes(self, client):
        """Test that the bucket holds the suffix of a leaked digest."""
        digest = hash_password("123456").digest
        r = client.get(f"/range/{digest[0]}")
        assert r.status_code == 200
        assert r.mimetype == "text/plain"
        assert "immutable" in r.headers["Cache-Control"]
        assert digest[1:] in r.get_data(as_text=True).split()

    def test_lowercase_prefix(self, client):
        """Test that prefixes are case-insensitive."""
        digest = hash_password("qwerty").digest
        upper = client.get(f"/range/{digest[0]}").get_data()
        assert client.get(f"/range/{digest[0].lower()}").get_data() == upper

    def test_bad_prefix(self, client):
        """Test wrong-length and non-hex prefixes."""
        assert client.get("/range/AB").status_code == 400
        assert client.get("/range/Z").status_code == 400

    def test_full_hash_mode(self, built_stores):
        """Test that full-hash mode returns whole digests."""
        config, manifest = built_stores
        service = C3Service(small_config(config.store_dir.parent, range_full_hash=True), manifest)
        try:
            digest = hash_password("dragon").digest
            assert digest in service.handle_range(digest[0]).split()
        finally:
            service.close()


class TestFsbRoute:
    """Tests for GET /fsb/<bucket>."""

    def test_leaked_in_its_run(self, built_stores, client):
        """Test that a leaked password's salted digest is in every bucket of its run."""
        config, manifest = built_stores
        info = manifest.protocols["fsb"]
        estimator = HybridEstimator.load(config.store_dir / "estimator.bin")
        params = FsbParams(info["num_buckets"], info["q_bar"], estimator, bytes.fromhex(info["salt"]))
        interval = fsb_interval("letmein", params)
        for b in interval.covered():
            body = client.get(f"/fsb/{b}").get_data(as_text=True)
            assert params.salted_hex("letmein") in body.split()

    def test_bad_bucket(self, client):
        """Test non-integer and out-of-range bucket ids."""
        assert client.get("/fsb/x1").status_code == 400
        assert client.get("/fsb/64").status_code == 400
        assert client.get("/fsb/-1").status_code == 400


class TestPsiRoute:
    """Tests for POST /psi/<mode>."""

    def test_round(self, client, test_suite):
        """Test a response of one element and its bucket."""
        credential = Credential("bob", "hunter2")
        _, x = blind("bob", "hunter2", suite=test_suite)
        b = psi_bucket(credential, 4, "gpc")
        r = client.post("/psi/gpc", data={"x": x.hex(), "b": str(b)})
        assert r.status_code == 200
        data = r.get_json()
        assert len(bytes.fromhex(data["y"])) == 33
        assert all(len(bytes.fromhex(z)) == 33 for z in data["z"])
        assert data["z"] == sorted(data["z"])

    def test_invalid_element(self, client):
        """Test that a non-curve element is a 400."""
        r = client.post("/psi/gpc", data={"x": "02" + "ff" * 32, "b": "0"})
        assert r.status_code == 400
        assert "error" in r.get_json()

    def test_missing_fields(self, client):
        """Test that x and b are required."""
        assert client.post("/psi/idb", data={"b": "0"}).status_code == 400

    def test_unknown_mode(self, client):
        """Test that an unknown mode is a 404."""
        assert client.post("/psi/xyz", data={"x": "00", "b": "0"}).status_code == 404


class TestMetaRoute:
    """Tests for GET /meta."""

    def test_public_view(self, client):
        """Test that store file names are not published."""
        data = client.get("/meta").get_json()
        assert set(data["available"]) == {"hibp", "fsb", "gpc", "idb"}
        assert all("store" not in section for section in data["protocols"].values())
        assert "path" not in data["estimator"]


class TestAvailability:
    """Tests for degraded service and limits."""

    def test_missing_store_is_503(self, temp_dir):
        """Test that a deleted store leaves its protocol unavailable."""
        config = small_config(temp_dir, protocols=("hibp", "fsb"))
        manifest = build_stores(config, built_at="t")
        (config.store_dir / "fsb.bin").unlink()
        service = C3Service(config, manifest)
        try:
            client = create_app(service).test_client()
            assert client.get("/fsb/0").status_code == 503
            digest = hash_password("123456").digest
            assert client.get(f"/range/{digest[0]}").status_code == 200
            assert client.get("/meta").get_json()["available"] == ["hibp"]
        finally:
            service.close()

    def test_disabled_psi_mode_is_404(self, temp_dir):
        """Test that a build without idb answers 404 for it."""
        config = small_config(temp_dir, protocols=("gpc",))
        service = C3Service(config, build_stores(config, built_at="t"))
        client = create_app(service).test_client()
        assert client.post("/psi/idb", data={"x": "00", "b": "0"}).status_code == 404

    def test_rate_limit(self, service):
        """Test 429 once the per-address budget is spent."""
        now = [0.0]
        limiter = TokenBucketLimiter(3, clock=lambda: now[0])
        client = create_app(service, limiter).test_client()
        assert [client.get("/meta").status_code for _ in range(4)] == [200, 200, 200, 429]
        now[0] += 20.0
        assert client.get("/meta").status_code == 200

    def test_limiter_disabled(self):
        """Test that a rate of zero never limits."""
        limiter = TokenBucketLimiter(0)
        assert all(limiter.allow("a") for _ in range(1000))

    def test_limiter_forgets_idle_addresses(self):
        """Test that addresses idle for a refill period are dropped."""
        now = [0.0]
        limiter = TokenBucketLimiter(5, clock=lambda: now[0])
        for i in range(1000):
            assert limiter.allow(f"10.0.{i // 256}.{i % 256}")
        assert len(limiter) == 1000
        now[0] += 30.0
        limiter.allow("10.9.9.9")
        assert len(limiter) == 1001
        now[0] += 60.0
        assert limiter.allow("10.9.9.9")
        assert len(limiter) == 1

    def test_limiter_keeps_active_addresses(self):
        """Test that a sweep does not refill a busy address."""
        now = [0.0]
        limiter = TokenBucketLimiter(2, clock=lambda: now[0])
        assert limiter.allow("a") and limiter.allow("a")
        now[0] += 50.0
        assert limiter.allow("a")
        now[0] += 11.0
        assert limiter.allow("a")
        assert not limiter.allow("a")
        assert len(limiter) == 1

    def test_key_mismatch(self, temp_dir, test_suite):
        """Test that a store under another key is not served."""
        config = small_config(temp_dir, protocols=("gpc",))
        manifest = build_stores(config, built_at="t")
        ServerKey.generate(test_suite).save(config.server_key_path, test_suite)
        service = C3Service(config, manifest)
        assert service.available() == []


def test_transport_is_abstract():
    """Test that Transport cannot be instantiated."""
    with pytest.raises(TypeError):
        Transport()
