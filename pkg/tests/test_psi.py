"""
Tests for the OPRF-based private set-membership protocol.
"""

import pytest

from c3py import ConfigurationError, Credential, LeakDataset, ProtocolError, PsiMode
from c3py.api.psi import (
    PsiBucketStore,
    ServerKey,
    SlowHash,
    blind,
    check_membership,
    oprf,
    precompute_psi_store,
    psi_bucket,
    rotate_store,
    server_eval,
    unblind,
)


def run_protocol(u, w, key, store, suite, r=None):
    """Client and server halves in one process; returns the verdict and x~."""
    credential = Credential(u, w)
    b = psi_bucket(credential, store.bits, store.mode)
    r, x = blind(credential.username, credential.password, r, suite)
    y, z = server_eval(key, x, b, store, suite)
    x_tilde = unblind(y, r, suite)
    return check_membership(x_tilde, z), x_tilde


@pytest.fixture(scope="module")
def psi_key(test_suite):
    return ServerKey.from_scalar(0x1234567890ABCDEF, test_suite)


class TestOprf:
    """Tests for the group-level primitives."""

    def test_deterministic(self, test_suite):
        """Test that F_a(x) is a function of a and x."""
        assert oprf(7, b"x", test_suite) == oprf(7, b"x", test_suite)
        assert oprf(7, b"x", test_suite) != oprf(8, b"x", test_suite)
        assert oprf(7, b"x", test_suite) != oprf(7, b"y", test_suite)

    def test_compressed_encoding(self, test_suite):
        """Test 33-byte SEC1 compressed elements."""
        element = oprf(3, b"x", test_suite)
        assert len(element) == 33
        assert element[0] in (2, 3)

    def test_zero_key_rejected(self, test_suite):
        """Test that a zero exponent is refused."""
        with pytest.raises(ProtocolError):
            oprf(0, b"x", test_suite)
        with pytest.raises(ProtocolError):
            oprf(test_suite.group.order, b"x", test_suite)

    def test_blinding_invariance(self, test_suite, psi_key):
        """Test that unblinded values agree across blinding scalars."""
        store = PsiBucketStore(PsiMode.GPC, 1, psi_key.key_id, test_suite.slow_hash)
        results = set()
        for r in range(2, 12):
            r_used, x = blind("alice", "pw", r * 7919, test_suite)
            y, _ = server_eval(psi_key, x, 0, store, test_suite)
            results.add(unblind(y, r_used, test_suite))
        assert results == {oprf(psi_key.scalar, Credential("alice", "pw").serialize(), test_suite)}

    def test_blinded_element_hides_input(self, test_suite):
        """Test that fresh blinding gives unrelated x for the same credential."""
        _, x1 = blind("alice", "pw", suite=test_suite)
        _, x2 = blind("alice", "pw", suite=test_suite)
        assert x1 != x2

    def test_invalid_element_rejected(self, test_suite, psi_key):
        """Test that non-curve encodings are refused by the server."""
        store = PsiBucketStore(PsiMode.GPC, 1, psi_key.key_id, test_suite.slow_hash)
        for bad in ["zz", "04" + "00" * 64, "02" + "ff" * 32, "05" + "11" * 32]:
            with pytest.raises(ProtocolError):
                server_eval(psi_key, bad, 0, store, test_suite)

    def test_bucket_out_of_range(self, test_suite, psi_key):
        """Test that bucket ids beyond 2^l are refused."""
        store = PsiBucketStore(PsiMode.GPC, 2, psi_key.key_id, test_suite.slow_hash)
        _, x = blind("a", "b", suite=test_suite)
        with pytest.raises(ProtocolError):
            server_eval(psi_key, x, 4, store, test_suite)


class TestSlowHash:
    """Tests for the memory-hard preimage hash."""

    def test_profiles(self):
        """Test production and test cost parameters."""
        assert SlowHash.from_profile("production").params[:3] == (2 ** 18, 8, 1)
        assert SlowHash.from_profile("test").params[:3] == (16, 1, 1)

    def test_n_power_of_two(self):
        """Test that n must be a power of two."""
        with pytest.raises(ValueError):
            SlowHash(1000, 1, 1)


class TestPsiBuckets:
    """Tests for credential and username bucketing."""

    def test_idb_depends_on_username(self):
        """Test that idb buckets ignore the password."""
        assert psi_bucket(Credential("alice", "a"), 16, "idb") == psi_bucket(Credential("Alice", "b"), 16, "idb")

    def test_gpc_depends_on_pair(self):
        """Test that gpc buckets use u || w."""
        buckets = {psi_bucket(Credential("alice", f"pw{i}"), 16, "gpc") for i in range(20)}
        assert len(buckets) > 1


class TestEndToEnd:
    """Tests for client verdicts against plaintext membership."""

    @pytest.mark.parametrize("mode", ["gpc", "idb"])
    def test_verdicts(self, mode, pair_leak, psi_key, test_suite):
        """Test every leaked pair is found and absent pairs are not."""
        store = precompute_psi_store(pair_leak, psi_key, 4, mode, test_suite)
        assert len(store) == pair_leak.N
        for credential in pair_leak.credentials():
            found, _ = run_protocol(credential.username, credential.password, psi_key, store, test_suite)
            assert found
        absent = [("alice", "hunter2"), ("zed", "123456"), ("bob", "Hunter2"), ("mallory", "x")]
        for u, w in absent:
            found, _ = run_protocol(u, w, psi_key, store, test_suite)
            assert not found

    def test_username_case_folded(self, pair_leak, psi_key, test_suite):
        """Test that a differently cased username still matches."""
        store = precompute_psi_store(pair_leak, psi_key, 4, "gpc", test_suite)
        assert run_protocol("ALICE", "123456", psi_key, store, test_suite)[0]

    def test_password_leak_rejected(self, password_leak, psi_key, test_suite):
        """Test that PSI stores need username-password pairs."""
        with pytest.raises(ConfigurationError):
            precompute_psi_store(password_leak, psi_key, 4, "gpc", test_suite)

    @pytest.mark.slow
    def test_verdicts_toy_corpus(self, psi_key, test_suite):
        """Test 500 leaked and 500 absent pairs in both modes."""
        leaked = [(f"user{i}", f"pass{i * 7}") for i in range(500)]
        absent = [(f"user{i}", f"pass{i * 7 + 1}") for i in range(500)]
        leak = LeakDataset.from_pairs(leaked)
        for mode in ("gpc", "idb"):
            store = precompute_psi_store(leak, psi_key, 8, mode, test_suite)
            assert all(run_protocol(u, w, psi_key, store, test_suite)[0] for u, w in leaked)
            assert not any(run_protocol(u, w, psi_key, store, test_suite)[0] for u, w in absent)


class TestKeys:
    """Tests for key persistence and rotation."""

    def test_save_load(self, temp_dir, test_suite):
        """Test that a saved key reloads with the same id."""
        key = ServerKey.generate(test_suite)
        path = temp_dir / "server.key"
        key.save(path, test_suite)
        loaded = ServerKey.load(path, test_suite)
        assert loaded.key_id == key.key_id
        assert loaded.scalar == key.scalar

    def test_scalar_range(self, test_suite):
        """Test that zero and the group order are not keys."""
        with pytest.raises(ProtocolError):
            ServerKey.from_scalar(0, test_suite)
        with pytest.raises(ProtocolError):
            ServerKey.from_scalar(test_suite.group.order, test_suite)

    def test_rotation(self, pair_leak, psi_key, test_suite):
        """Test that a rotated store equals one built under the new key."""
        new_key = ServerKey.from_scalar(0xFEEDFACE, test_suite)
        store = precompute_psi_store(pair_leak, psi_key, 4, "gpc", test_suite)
        rotated = rotate_store(store, psi_key, new_key, test_suite)
        rebuilt = precompute_psi_store(pair_leak, new_key, 4, "gpc", test_suite)
        assert rotated.key_id == new_key.key_id
        assert rotated.buckets == rebuilt.buckets
        assert run_protocol("bob", "hunter2", new_key, rotated, test_suite)[0]

    def test_rotation_wrong_key(self, pair_leak, psi_key, test_suite):
        """Test that rotation checks the store's key id."""
        store = precompute_psi_store(pair_leak, psi_key, 4, "gpc", test_suite)
        other = ServerKey.from_scalar(99, test_suite)
        with pytest.raises(ConfigurationError):
            rotate_store(store, other, other, test_suite)

    def test_store_file(self, temp_dir, pair_leak, psi_key, test_suite):
        """Test that a saved store reloads with its parameters."""
        store = precompute_psi_store(pair_leak, psi_key, 4, "idb", test_suite)
        path = temp_dir / "idb.bin"
        store.to_file(path)
        loaded = PsiBucketStore.from_file(path)
        assert loaded.mode is PsiMode.IDB
        assert loaded.key_id == psi_key.key_id
        assert loaded.slow_hash == test_suite.slow_hash
        assert loaded.buckets == store.buckets
