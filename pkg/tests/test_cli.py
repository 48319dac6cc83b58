"""
Tests for the `c3` command line.
"""

import csv
import io
import json
import random

import pytest

from c3py import C3Service, ServiceConfig, create_app, hash_password
from c3py import cli
from c3py.cli import EXIT_ERROR, EXIT_FOUND, EXIT_OK, main

from .conftest import FlaskTransport, small_config


def write_digests(path, n=200, seed=1):
    rng = random.Random(seed)
    digests = [f"{rng.getrandbits(160):040X}" for _ in range(n)]
    path.write_text("\n".join(digests + digests[:10]) + "\n")
    return sorted(set(digests))


class TestPipelineCommands:
    """Tests for ingest, prefixlen, bucketize and stats."""

    def test_ingest(self, temp_dir, capsys):
        """Test that ingest writes the sorted unique corpus."""
        expected = write_digests(temp_dir / "raw.txt")
        assert main(["ingest", str(temp_dir / "raw.txt"), str(temp_dir / "sorted.txt")]) == EXIT_OK
        assert (temp_dir / "sorted.txt").read_text().split() == expected
        assert f"{len(expected)} unique sha1 digests" in capsys.readouterr().out

    def test_ingest_malformed(self, temp_dir, capsys):
        """Test exit status 2 and a line-numbered message on bad input."""
        (temp_dir / "raw.txt").write_text("A" * 40 + "\nnot-a-digest\n")
        assert main(["ingest", str(temp_dir / "raw.txt"), str(temp_dir / "out.txt")]) == EXIT_ERROR
        assert capsys.readouterr().err.startswith("c3 ingest:")

    def test_ingest_lenient(self, temp_dir, capsys):
        """Test that --lenient skips and reports bad lines."""
        (temp_dir / "raw.txt").write_text("A" * 40 + "\nnot-a-digest\n" + "B" * 40 + "\n")
        assert main(["ingest", "--lenient", str(temp_dir / "raw.txt"), str(temp_dir / "out.txt")]) == EXIT_OK
        assert "skipped 1" in capsys.readouterr().err

    def test_prefixlen_and_bucketize(self, temp_dir, capsys):
        """Test the computed length and both bucket formats."""
        digests = write_digests(temp_dir / "raw.txt", n=2000, seed=2)
        sorted_path = temp_dir / "sorted.txt"
        main(["ingest", str(temp_dir / "raw.txt"), str(sorted_path)])
        capsys.readouterr()

        assert main(["prefixlen", str(sorted_path)]) == EXIT_OK
        L = int(capsys.readouterr().out.strip())
        assert L >= 1

        assert main(["bucketize", "--format", "files", str(sorted_path), str(temp_dir / "files")]) == EXIT_OK
        assert main(["bucketize", "--len", "2", str(sorted_path), str(temp_dir / "range.sqlite")]) == EXIT_OK
        capsys.readouterr()

        assert main(["stats", "--json", str(temp_dir / "files")]) == EXIT_OK
        stats = json.loads(capsys.readouterr().out)
        assert stats["total"] == len(digests)
        assert stats["min_size"] >= 2
        assert stats["prefix_length"] == L

        assert main(["stats", "--json", str(temp_dir / "range.sqlite")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["prefix_length"] == 2

    def test_stats_table(self, temp_dir, capsys):
        """Test the rich table output."""
        write_digests(temp_dir / "raw.txt", n=50)
        sorted_path = temp_dir / "sorted.txt"
        main(["ingest", str(temp_dir / "raw.txt"), str(sorted_path)])
        main(["bucketize", "--len", "1", str(sorted_path), str(temp_dir / "range.sqlite")])
        capsys.readouterr()
        assert main(["stats", str(temp_dir / "range.sqlite")]) == EXIT_OK
        assert "max size" in capsys.readouterr().out

    def test_stats_missing_store(self, temp_dir):
        """Test that a missing store is an error exit."""
        assert main(["stats", str(temp_dir / "missing.sqlite")]) == EXIT_ERROR


@pytest.fixture
def deployment(temp_dir, monkeypatch):
    """Built stores plus a `c3 check` wired to an in-process service."""
    config_path = temp_dir / "c3.ini"
    config_path.write_text(small_config(temp_dir).to_string())
    assert main(["build", "--config", str(config_path)]) == EXIT_OK
    service = C3Service(ServiceConfig.from_file(config_path))
    monkeypatch.setattr(cli, "RequestsTransport", lambda url: FlaskTransport(create_app(service)))
    yield config_path
    service.close()


def run_check(monkeypatch, password, *args):
    monkeypatch.setattr("sys.stdin", io.StringIO(password + "\n"))
    return main(["check", *args])


class TestServiceCommands:
    """Tests for build and check."""

    def test_build_output(self, deployment, capsys):
        """Test that build wrote the manifest next to the stores."""
        assert (deployment.parent / "stores" / "manifest.json").exists()

    def test_check_hibp(self, deployment, monkeypatch, temp_dir, capsys):
        """Test exit 10 for a leaked password and 0 otherwise."""
        state = ["--state", str(temp_dir / "state.json")]
        assert run_check(monkeypatch, "123456", "--proto", "hibp", *state) == EXIT_FOUND
        assert "FOUND" in capsys.readouterr().out
        assert run_check(monkeypatch, "not-leaked-at-all", "--proto", "hibp", *state) == EXIT_OK

    def test_check_fsb_json(self, deployment, monkeypatch, temp_dir, capsys):
        """Test an FSB check with the published estimator and JSON output."""
        estimator = deployment.parent / "stores" / "estimator.bin"
        args = ["--proto", "fsb", "--estimator", str(estimator), "--state", str(temp_dir / "state.json"), "--json"]
        assert run_check(monkeypatch, "letmein", *args, "--derandomize") == EXIT_FOUND
        result = json.loads(capsys.readouterr().out)
        assert result["protocol"] == "fsb" and result["leaked"] is True

    def test_check_psi(self, deployment, monkeypatch, temp_dir):
        """Test gpc and idb checks with a username."""
        state = ["--state", str(temp_dir / "state.json")]
        assert run_check(monkeypatch, "hunter2", "--proto", "gpc", "--user", "bob", *state) == EXIT_FOUND
        assert run_check(monkeypatch, "hunter2", "--proto", "idb", "--user", "alice", *state) == EXIT_OK

    def test_check_empty_password(self, deployment, monkeypatch, temp_dir, capsys):
        """Test that an empty stdin is an error exit."""
        assert run_check(monkeypatch, "", "--proto", "hibp", "--state", str(temp_dir / "s.json")) == EXIT_ERROR
        assert "no password" in capsys.readouterr().err

    def test_build_bad_config(self, temp_dir):
        """Test that a missing config file is an error exit."""
        assert main(["build", "--config", str(temp_dir / "none.ini")]) == EXIT_ERROR


class TestSimulate:
    """Tests for the simulate command."""

    def rows(self, capsys):
        return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

    def test_fsb_csv(self, capsys):
        """Test one CSV row per q with passing bounds."""
        argv = ["simulate", "--scheme", "fsb", "--q", "1", "2", "6", "--qbar", "2",
                "--buckets", "8", "--random", "15", "--seed", "1", "--csv"]
        assert main(argv) == EXIT_OK
        rows = self.rows(capsys)
        assert [r["q"] for r in rows] == ["1", "2", "6"]
        assert all(r["bounds"] == "pass" for r in rows)
        assert float(rows[0]["delta"]) == pytest.approx(0.0, abs=1e-9)

    def test_hpb_monte_carlo(self, capsys):
        """Test the Monte-Carlo column."""
        argv = ["simulate", "--scheme", "hpb", "--q", "1", "--bits", "2", "--random", "12",
                "--seed", "2", "--trials", "2000", "--csv"]
        assert main(argv) == EXIT_OK
        row = self.rows(capsys)[0]
        assert 0.0 <= float(row["monte_carlo"]) <= 1.0
        assert float(row["delta"]) >= 0.0

    def test_correlated_columns(self, capsys):
        """Test the two-query columns."""
        argv = ["simulate", "--scheme", "fsb", "--q", "1", "--qbar", "1", "--buckets", "4",
                "--random", "10", "--seed", "3", "--correlated", "--trials", "500", "--csv"]
        assert main(argv) == EXIT_OK
        row = self.rows(capsys)[0]
        assert "correlated" in row and "second_only" in row

    def test_policy(self, temp_dir, capsys):
        """Test a world file under a length policy."""
        world = temp_dir / "world.json"
        world.write_text(json.dumps({
            "users": ["u"],
            "passwords": ["abc", "abcdefgh", "password1", "qwertyuiop"],
            "p_user": [1],
            "p_password": [5, 3, 2, 1],
        }))
        policy = temp_dir / "policy.ini"
        policy.write_text("[policy]\nmin_length = 8\n")
        argv = ["simulate", "--scheme", "fsb", "--q", "1", "--qbar", "1", "--buckets", "4",
                "--world", str(world), "--policy", str(policy)]
        assert main(argv) == EXIT_OK
        assert "policy.ini" in capsys.readouterr().out

    def test_needs_world(self, capsys):
        """Test that a missing world is an error exit."""
        assert main(["simulate", "--scheme", "hpb", "--q", "1"]) == EXIT_ERROR
        assert "--world" in capsys.readouterr().err
