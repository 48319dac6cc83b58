"""
The `c3` command.

Usage:
    c3 ingest raw.txt sorted.txt                 # sort + de-duplicate digests
    c3 prefixlen sorted.txt                      # minimal prefix length
    c3 bucketize --len 5 --format store sorted.txt range.sqlite
    c3 stats range.sqlite
    c3 build --config c3.ini
    c3 serve --config c3.ini
    c3 check --proto fsb --estimator estimator.bin < password.txt
    c3 simulate --scheme fsb --q 1 5 10 --qbar 3 --buckets 16 --random 40 --seed 1

Exit status: 0 success (`check`: not found), 10 `check` found, 2 error.
"""

from __future__ import annotations

import argparse
import csv
import getpass
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ._io.kvstore import SqliteStore
from .api.client import DEFAULT_STATE_PATH, C3Client, RequestsTransport, locked_state
from .api.enums import Game, Scheme, SelectionMode
from .api.errors import C3Error, ConfigurationError
from .api.pipeline import (
    BucketStats,
    SortedHashStream,
    bucket_stats,
    bucket_stats_from_store,
    iter_buckets,
    min_prefix_length,
    preprocess,
    write_bucket_files,
    write_bucket_store,
)
from .api.server import build_stores, serve
from .api.settings import ServiceConfig
from .api.simlab import (
    AttackerModel,
    PasswordPolicy,
    SyntheticWorld,
    TweakKernel,
    attack_success,
    make_bucketizer,
    policy_filter,
    run_correlated_game,
    run_game,
    theorem_check,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FOUND = 10
EXIT_ERROR = 2

DEFAULT_SIM_BITS = 2
DEFAULT_SIM_BUCKETS = 8
DEFAULT_CORRELATED_TRIALS = 10_000


def _console() -> Console:
    return Console()


# =============================================================================
# Offline pipeline
# =============================================================================

def cmd_ingest(args) -> int:
    stream = preprocess(Path(args.input), strict=not args.lenient)
    try:
        count = stream.to_file(Path(args.output))
    finally:
        stream.close()
    if stream.skipped:
        print(f"skipped {stream.skipped} malformed lines", file=sys.stderr)
    print(f"{count} unique {stream.algorithm or 'no'} digests -> {args.output}")
    return EXIT_OK


def cmd_prefixlen(args) -> int:
    print(min_prefix_length(SortedHashStream.from_sorted_file(Path(args.input))))
    return EXIT_OK


def cmd_bucketize(args) -> int:
    stream = SortedHashStream.from_sorted_file(Path(args.input))
    L = args.len if args.len is not None else min_prefix_length(stream)
    if L < 1:
        raise ConfigurationError(f"prefix length must be >= 1, got {L}; pass --len")
    buckets = iter_buckets(stream, L)
    if args.format == "files":
        count = write_bucket_files(buckets, Path(args.output))
        print(f"{count} bucket files at prefix length {L} -> {args.output}")
    else:
        with SqliteStore(Path(args.output)) as store:
            count = write_bucket_store(buckets, store, stream.algorithm)
        print(f"{count} digests at prefix length {L} -> {args.output}")
    return EXIT_OK


def _stats_of(path: Path) -> BucketStats:
    if path.is_dir():
        buckets: Dict[str, List[str]] = {}
        for f in sorted(path.glob("*.txt")):
            buckets[f.stem] = f.read_text(encoding="ascii").split()
        return bucket_stats(buckets)
    with SqliteStore(path, readonly=True) as store:
        return bucket_stats_from_store(store)


def cmd_stats(args) -> int:
    stats = _stats_of(Path(args.store))
    if args.json:
        print(json.dumps(stats.to_dict(), indent=2))
        return EXIT_OK
    table = Table(title=f"Buckets in {args.store}")
    table.add_column("Statistic", style="cyan")
    table.add_column("Value", justify="right")
    for name, value in stats.to_dict().items():
        table.add_row(name.replace("_", " "), f"{value:.2f}" if isinstance(value, float) else str(value))
    _console().print(table)
    return EXIT_OK


# =============================================================================
# Service
# =============================================================================

def cmd_build(args) -> int:
    config = ServiceConfig.from_file(Path(args.config))
    manifest = build_stores(config)
    for name, info in manifest.protocols.items():
        print(f"{name}: {info.get('count', '-')} entries -> {config.store_dir / str(info['store'])}")
    return EXIT_OK


def cmd_serve(args) -> int:
    serve(ServiceConfig.from_file(Path(args.config)))
    return EXIT_OK


def _read_secret(prompt: str) -> str:
    if sys.stdin.isatty():
        return getpass.getpass(prompt)
    return sys.stdin.readline().rstrip("\r\n")


def cmd_check(args) -> int:
    state_path = Path(args.state).expanduser()
    with locked_state(state_path, args.server) as state:
        if args.estimator:
            state.estimator_path = str(Path(args.estimator).expanduser().resolve())
        server = state.server_url

    password = _read_secret("Password: ")
    if not password:
        raise ConfigurationError("no password given on stdin")
    selection = SelectionMode.DERANDOMIZED if args.derandomize else SelectionMode.RANDOM
    client = C3Client(RequestsTransport(server), state_path, selection=selection)
    result = client.check(args.proto, password, args.user)

    if args.json:
        print(json.dumps(result.to_dict()))
    else:
        print("FOUND in leak data" if result.leaked else "not found")
    return EXIT_FOUND if result.leaked else EXIT_OK


# =============================================================================
# Simulation
# =============================================================================

_COLUMNS = ["q", "baseline", "bucketed", "delta", "bounds"]


def _world(args) -> SyntheticWorld:
    if args.world:
        return SyntheticWorld.from_file(Path(args.world))
    if args.random:
        return SyntheticWorld.random(args.random, num_users=args.users, seed=args.seed)
    raise ConfigurationError("simulate needs --world FILE or --random N")


def _simulate_rows(args, world: SyntheticWorld) -> List[Dict[str, object]]:
    scheme = Scheme.parse(args.scheme)
    estimator = world.distribution()
    target = world
    if args.policy:
        # users obey the policy, the estimator and attacker still model the unrestricted world
        target = policy_filter(world, PasswordPolicy.from_file(Path(args.policy)))
    bucketizer = make_bucketizer(
        scheme, bits=args.bits, num_buckets=args.buckets, q_bar=args.qbar, estimator=estimator,
    )

    rows = []
    for q in args.q:
        report = theorem_check(
            target, scheme, q, q_bar=args.qbar, estimator=estimator, bucketizer=bucketizer, strict=False,
        )
        row: Dict[str, object] = {"q": q}
        if args.policy:
            attacker = AttackerModel(world.passwords, world.prob, q)
            row["baseline"] = attack_success(target, attacker)
            row["bucketed"] = attack_success(target, attacker, bucketizer)
        else:
            row["baseline"] = report.adv_guess
            row["bucketed"] = report.adv_bucket
        row["delta"] = float(row["bucketed"]) - float(row["baseline"])
        row["bounds"] = report.verdict()
        if args.trials:
            result = run_game(
                target, Game.BUCKET_GUESS, AttackerModel.optimal(target, q), args.trials, args.seed, bucketizer,
            )
            row["monte_carlo"] = result.rate
        if args.correlated:
            outcome = run_correlated_game(
                target, TweakKernel(), bucketizer, q, args.trials or DEFAULT_CORRELATED_TRIALS, args.seed,
            )
            row["correlated"] = outcome.correlated.rate
            row["second_only"] = outcome.baseline.rate
        for check in report.failures():
            logger.warning("q=%d: %s", q, check.line().strip())
        rows.append(row)
    return rows


def _format(value: object) -> str:
    return f"{value:.6f}" if isinstance(value, float) else str(value)


def cmd_simulate(args) -> int:
    world = _world(args)
    rows = _simulate_rows(args, world)
    columns = _COLUMNS + [c for c in ("monte_carlo", "correlated", "second_only") if c in rows[0]]

    if args.csv:
        writer = csv.DictWriter(sys.stdout, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _format(row[c]) for c in columns})
        return EXIT_OK

    title = f"{args.scheme} on {len(world.users)}x{len(world.passwords)} world"
    if args.policy:
        title += f" under policy {Path(args.policy).name}"
    table = Table(title=title)
    for c in columns:
        table.add_column(c.replace("_", " "), justify="right" if c != "bounds" else "center")
    for row in rows:
        cells = [_format(row[c]) for c in columns]
        if row["bounds"] != "pass":
            cells[columns.index("bounds")] = f"[red]{row['bounds']}[/red]"
        table.add_row(*cells)
    _console().print(table)
    return EXIT_OK


# =============================================================================
# Entry point
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="c3", description="Compromised-credential checking toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="sort and de-duplicate a digest corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--lenient", action="store_true", help="skip malformed lines instead of failing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prefixlen", help="minimal prefix length of a sorted corpus")
    p.add_argument("input")
    p.set_defaults(func=cmd_prefixlen)

    p = sub.add_parser("bucketize", help="write hash-prefix buckets")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--len", type=int, help="prefix length (minimal when omitted)")
    p.add_argument("--format", choices=("files", "store"), default="store")
    p.set_defaults(func=cmd_bucketize)

    p = sub.add_parser("stats", help="bucket size statistics")
    p.add_argument("store", help="bucket store file or bucket-file directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("build", help="precompute every enabled protocol's store")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("serve", help="run the checking service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("check", help="check a password read from stdin")
    p.add_argument("--proto", choices=("hibp", "fsb", "gpc", "idb"), required=True)
    p.add_argument("--user", help="username (gpc, idb)")
    p.add_argument("--server", default=os.environ.get("C3_SERVER"),
                   help="service URL, remembered in the state file (default: $C3_SERVER)")
    p.add_argument("--derandomize", action="store_true", help="same FSB bucket on every query")
    p.add_argument("--json", action="store_true")
    p.add_argument("--state", default=str(DEFAULT_STATE_PATH))
    p.add_argument("--estimator", help="published estimator artifact (fsb)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="attack success with and without bucket ids")
    p.add_argument("--scheme", choices=("hpb", "fsb", "idb"), required=True)
    p.add_argument("--q", type=int, nargs="+", required=True)
    p.add_argument("--qbar", type=int)
    p.add_argument("--bits", type=int, default=DEFAULT_SIM_BITS, help="hpb/idb bucket-id bits")
    p.add_argument("--buckets", type=int, default=DEFAULT_SIM_BUCKETS, help="fsb bucket count")
    p.add_argument("--world", help="world JSON file")
    p.add_argument("--random", type=int, metavar="N", help="random world over N passwords")
    p.add_argument("--users", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.add_argument("--policy", help="password-policy INI file")
    p.add_argument("--correlated", action="store_true", help="also play the two-query game")
    p.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials per q (0 = exact only)")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except C3Error as e:
        print(f"c3 {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"c3 {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
