"""
Streaming corpus pipeline: preprocessing, prefix-length computation, bucket
population and bucket statistics.

Digests travel through the pipeline as canonical uppercase hex strings; the
PasswordHash type is reserved for the API surface where validation matters
more than throughput.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import os
import queue
import re
import tempfile
import threading
import weakref
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .._io.kvstore import KeyValueStore
from .core import common_prefix_length
from .enums import HashAlgorithm
from .errors import EmptyInputError, MalformedInputError

logger = logging.getLogger(__name__)


# =============================================================================
# Constants
# =============================================================================

DEFAULT_CHUNK_SIZE = 1_000_000      # digests per in-memory sort run
DEFAULT_QUEUE_DEPTH = 10_000        # digests buffered between reader and scanner
_BATCH = 256                        # digests per queue item

_HEX_RE = re.compile(r"[0-9A-F]+")


# =============================================================================
# Sorted Streams
# =============================================================================

class SortedHashStream:
    """
    Re-iterable sequence of digests in ascending order.

    Attributes:
        algorithm: digest algorithm, None for an empty stream
        sorted_unique: every yielded digest is strictly greater than the last
        skipped: malformed lines dropped in lenient mode
    """

    def __init__(
        self,
        source: Callable[[], Iterator[str]],
        algorithm: Optional[HashAlgorithm],
        sorted_unique: bool = True,
        verify: bool = False,
        skipped: int = 0,
        owned_file: Optional[Path] = None,
    ):
        self._source = source
        self.algorithm = algorithm
        self.sorted_unique = sorted_unique
        self.skipped = skipped
        self._verify = verify
        self._owned_file = owned_file
        if owned_file is not None:
            self._finalizer = weakref.finalize(self, _unlink_quietly, owned_file)

    @classmethod
    def from_digests(cls, digests: Sequence[str]) -> "SortedHashStream":
        """Wrap an in-memory list that is already sorted and unique (verified)."""
        digests = list(digests)
        algorithm = HashAlgorithm.from_hex_length(len(digests[0])) if digests else None
        return cls(lambda: iter(digests), algorithm, verify=True)

    @classmethod
    def from_sorted_file(cls, path: Path) -> "SortedHashStream":
        """
        Stream an already sorted file, verifying order while reading.

        Raises:
            MalformedInputError: on the first malformed or out-of-order line
        """
        path = Path(path)
        algorithm = None
        with open(path, "r", encoding="ascii", errors="replace") as f:
            for n, line in enumerate(f, 1):
                text = line.strip()
                if text:
                    algorithm = _detect_algorithm(text.upper(), n)
                    break

        def source() -> Iterator[str]:
            with open(path, "r", encoding="ascii", errors="replace") as f:
                for n, line in enumerate(f, 1):
                    text = line.strip()
                    if not text:
                        continue
                    yield _check_digest(text.upper(), n, algorithm)

        return cls(source, algorithm, verify=True)

    def __iter__(self) -> Iterator[str]:
        if not self._verify:
            yield from self._source()
            return
        previous = None
        for index, digest in enumerate(self._source(), 1):
            if previous is not None and digest <= previous:
                raise MalformedInputError(
                    f"stream not strictly ascending ({digest} after {previous})", index
                )
            previous = digest
            yield digest

    def to_file(self, path: Path) -> int:
        """Write digests one per line; returns the count."""
        count = 0
        with open(path, "w", encoding="ascii", newline="\n") as f:
            for digest in self:
                f.write(digest)
                f.write("\n")
                count += 1
        return count

    def close(self) -> None:
        """Delete the backing temporary file, if the stream owns one."""
        if self._owned_file is not None:
            self._finalizer()


def _unlink_quietly(path: Path) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass


def _detect_algorithm(text: str, line_number: int) -> HashAlgorithm:
    if not _HEX_RE.fullmatch(text):
        raise MalformedInputError(f"not a hex digest: {text[:16]!r}", line_number)
    try:
        return HashAlgorithm.from_hex_length(len(text))
    except Exception:
        raise MalformedInputError(f"unsupported digest width {len(text)}", line_number) from None


def _check_digest(text: str, line_number: int, algorithm: HashAlgorithm) -> str:
    if len(text) != algorithm.hex_length or not _HEX_RE.fullmatch(text):
        raise MalformedInputError(
            f"expected a {algorithm.hex_length}-character hex digest", line_number
        )
    return text


# =============================================================================
# Preprocessing
# =============================================================================

def _iter_lines(raw: Union[Iterable[str], str, Path]) -> Iterator[str]:
    if isinstance(raw, (str, Path)):
        with open(raw, "r", encoding="ascii", errors="replace") as f:
            yield from f
    else:
        yield from raw


def _write_run(digests: List[str], tmp_dir: Optional[Path]) -> Path:
    fd, name = tempfile.mkstemp(prefix="c3run-", suffix=".txt", dir=tmp_dir)
    with os.fdopen(fd, "w", encoding="ascii", newline="\n") as f:
        for digest in digests:
            f.write(digest)
            f.write("\n")
    return Path(name)


def _read_run(path: Path) -> Iterator[str]:
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            yield line.rstrip("\n")


def _unique(sorted_digests: Iterable[str]) -> Iterator[str]:
    previous = None
    for digest in sorted_digests:
        if digest != previous:
            yield digest
            previous = digest


def preprocess(
    raw: Union[Iterable[str], str, Path],
    strict: bool = True,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    tmp_dir: Optional[Path] = None,
    output: Optional[Path] = None,
) -> SortedHashStream:
    """
    Sort and de-duplicate digest lines with bounded memory.

    Up to `chunk_size` unique digests are sorted in memory; larger corpora are
    split into sorted runs on disk and merged with a k-way heap merge.

    Args:
        raw: iterable of lines, or a path to a newline-separated file
        strict: raise on the first malformed line; otherwise skip and count
        chunk_size: in-memory threshold per run
        tmp_dir: directory for sort runs (system default when None)
        output: write the merged result here instead of a temporary file

    Returns:
        SortedHashStream with sorted_unique set

    Raises:
        MalformedInputError: malformed line in strict mode (with line number)
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")

    algorithm: Optional[HashAlgorithm] = None
    skipped = 0
    runs: List[Path] = []
    chunk: set = set()

    try:
        for n, line in enumerate(_iter_lines(raw), 1):
            text = line.strip().upper()
            if not text:
                continue
            try:
                if algorithm is None:
                    algorithm = _detect_algorithm(text, n)
                digest = _check_digest(text, n, algorithm)
            except MalformedInputError:
                if strict:
                    raise
                skipped += 1
                continue
            chunk.add(digest)
            if len(chunk) >= chunk_size:
                runs.append(_write_run(sorted(chunk), tmp_dir))
                chunk = set()
    except BaseException:
        for run in runs:
            _unlink_quietly(run)
        raise

    if skipped:
        logger.warning("skipped %d malformed digest lines", skipped)

    if not runs:
        digests = sorted(chunk)
        if output is not None:
            SortedHashStream(lambda: iter(digests), algorithm).to_file(output)
        return SortedHashStream(lambda: iter(digests), algorithm, skipped=skipped)

    runs.append(_write_run(sorted(chunk), tmp_dir))
    logger.info("merging %d sorted runs", len(runs))
    owned = output is None
    if owned:
        fd, name = tempfile.mkstemp(prefix="c3sorted-", suffix=".txt", dir=tmp_dir)
        os.close(fd)
        target = Path(name)
    else:
        target = Path(output)
    try:
        merged = heapq.merge(*(_read_run(run) for run in runs))
        with open(target, "w", encoding="ascii", newline="\n") as f:
            for digest in _unique(merged):
                f.write(digest)
                f.write("\n")
    finally:
        for run in runs:
            _unlink_quietly(run)

    return SortedHashStream(
        lambda: _read_run(target),
        algorithm,
        skipped=skipped,
        owned_file=target if owned else None,
    )


# =============================================================================
# Reader/Scanner Channel
# =============================================================================

class _Failed:
    def __init__(self, error: BaseException):
        self.error = error


_END = object()


def _channel(items: Iterable[str], depth: int) -> Iterator[str]:
    """
    Hand items from a reader thread to the caller through a bounded queue.

    Items travel in batches; at most `depth` digests are buffered.
    """
    q: queue.Queue = queue.Queue(maxsize=max(1, depth // _BATCH))
    stop = threading.Event()

    def put(item) -> bool:
        while not stop.is_set():
            try:
                q.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def produce() -> None:
        try:
            batch = []
            for item in items:
                batch.append(item)
                if len(batch) >= _BATCH:
                    if not put(batch):
                        return
                    batch = []
            if batch and not put(batch):
                return
            put(_END)
        except BaseException as e:
            put(_Failed(e))

    reader = threading.Thread(target=produce, name="c3-reader", daemon=True)
    reader.start()
    try:
        while True:
            item = q.get()
            if item is _END:
                return
            if isinstance(item, _Failed):
                raise item.error
            yield from item
    finally:
        stop.set()


# =============================================================================
# Prefix Length
# =============================================================================

def min_prefix_length(
    hashes: Iterable[str],
    queue_depth: int = DEFAULT_QUEUE_DEPTH,
) -> int:
    """
    Shortest prefix length at which every bucket holds at least two digests.

    Slides a three-digest window over the sorted stream. The middle digest's
    longest shared prefix with any other digest is the larger of its LCPs
    with its two neighbours; the first and last digests have one neighbour
    each. The answer is the minimum over all digests.

    Args:
        hashes: sorted, unique digests (SortedHashStream or strings)
        queue_depth: digests buffered between reader and scanner

    Returns:
        Prefix length L in hex characters

    Raises:
        EmptyInputError: fewer than 3 digests
        MalformedInputError: stream not strictly ascending
    """
    best: Optional[int] = None
    previous: Optional[str] = None
    left: Optional[int] = None
    count = 0

    for digest in _channel(hashes, queue_depth):
        count += 1
        if previous is None:
            previous = digest
            best = len(digest)
            continue
        if digest <= previous:
            raise MalformedInputError(
                f"stream not strictly ascending ({digest} after {previous})", count
            )
        right = common_prefix_length(previous, digest)
        if left is None:
            best = min(best, right)
        else:
            best = min(best, max(left, right))
        left = right
        previous = digest

    if count < 3:
        raise EmptyInputError(f"need at least 3 digests, got {count}")
    best = min(best, left)
    logger.info("minimum prefix length %d over %d digests", best, count)
    return best


# =============================================================================
# Buckets
# =============================================================================

def iter_buckets(hashes: Iterable[str], L: int) -> Iterator[Tuple[str, List[str]]]:
    """
    Yield (prefix, digests) groups in prefix order.

    Sorted input keeps each bucket contiguous, so only one bucket is held in
    memory at a time.
    """
    if L < 1:
        raise ValueError(f"prefix length must be >= 1, got {L}")
    for prefix, group in itertools.groupby(hashes, key=lambda d: d[:L]):
        digests = list(group)
        if L > len(digests[0]):
            raise ValueError(f"prefix length {L} exceeds digest length {len(digests[0])}")
        yield prefix, digests


def populate_buckets(hashes: Iterable[str], L: int) -> Dict[str, List[str]]:
    """
    Group sorted digests by their L-character prefix.

    Returns:
        Ordered dict prefix -> sorted list of full digests
    """
    return dict(iter_buckets(hashes, L))


@dataclass(frozen=True)
class BucketStats:
    """Size statistics over a bucket map."""
    prefix_length: int
    bucket_count: int
    total: int
    min_size: int
    max_size: int
    mean_size: float
    median_size: float
    argmin: str
    argmax: str

    def to_dict(self) -> dict:
        return {
            "prefix_length": self.prefix_length,
            "bucket_count": self.bucket_count,
            "total": self.total,
            "min_size": self.min_size,
            "max_size": self.max_size,
            "mean_size": self.mean_size,
            "median_size": self.median_size,
            "argmin": self.argmin,
            "argmax": self.argmax,
        }


def _stats_from_sizes(prefixes: List[str], sizes: List[int]) -> BucketStats:
    if not prefixes:
        raise EmptyInputError("bucket map is empty")
    lengths = {len(p) for p in prefixes}
    if len(lengths) != 1:
        raise ValueError(f"bucket prefixes have mixed lengths {sorted(lengths)}")
    order = sorted(range(len(prefixes)), key=prefixes.__getitem__)
    prefixes = [prefixes[i] for i in order]
    values = np.asarray([sizes[i] for i in order], dtype=np.int64)
    return BucketStats(
        prefix_length=lengths.pop(),
        bucket_count=len(prefixes),
        total=int(values.sum()),
        min_size=int(values.min()),
        max_size=int(values.max()),
        mean_size=float(values.mean()),
        median_size=float(np.median(values)),
        argmin=prefixes[int(np.argmin(values))],
        argmax=prefixes[int(np.argmax(values))],
    )


def bucket_stats(buckets: Mapping[str, Sequence]) -> BucketStats:
    """
    Exact min/max/mean/median of bucket sizes.

    Ties for argmin/argmax resolve to the lexicographically first prefix.

    Raises:
        EmptyInputError: empty bucket map
    """
    prefixes = list(buckets)
    return _stats_from_sizes(prefixes, [len(buckets[p]) for p in prefixes])


def bucket_stats_from_store(store: KeyValueStore) -> BucketStats:
    """Statistics over a format-B store (key = digest, value = prefix)."""
    prefixes: List[str] = []
    sizes: List[int] = []
    for prefix, group in itertools.groupby(store.items(), key=lambda kv: kv[1]):
        prefixes.append(prefix)
        sizes.append(sum(1 for _ in group))
    return _stats_from_sizes(prefixes, sizes)


# =============================================================================
# Export
# =============================================================================

def write_bucket_files(buckets: Iterable[Tuple[str, List[str]]], out_dir: Path) -> int:
    """
    Format A: one `<PREFIX>.txt` per bucket holding its full digests.

    Returns:
        Number of files written
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for prefix, digests in buckets:
        (out_dir / f"{prefix}.txt").write_text("".join(d + "\n" for d in digests), encoding="ascii")
        count += 1
    logger.info("wrote %d bucket files to %s", count, out_dir)
    return count


def write_bucket_store(
    buckets: Iterable[Tuple[str, List[str]]],
    store: KeyValueStore,
    algorithm: Optional[HashAlgorithm] = None,
) -> int:
    """
    Format B: (prefix, hash) rows with hash unique and prefix indexed.

    Returns:
        Number of digests written
    """
    written = 0
    prefix_length = None
    for prefix, digests in buckets:
        prefix_length = len(prefix)
        written += store.put_many((digest, prefix) for digest in digests)
    if prefix_length is not None:
        store.set_meta("prefix_length", str(prefix_length))
    if algorithm is not None:
        store.set_meta("algorithm", algorithm.value)
    store.set_meta("count", str(len(store)))
    logger.info("wrote %d digests to bucket store", written)
    return written
