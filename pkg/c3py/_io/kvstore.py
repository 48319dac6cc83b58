"""
Ordered key-value persistence.

KeyValueStore is the abstraction the range service reads through; SqliteStore
is the single-file default engine. The HPB export writes key = full digest,
value = prefix. The primary key keeps digests unique and ordered, so a
prefix bucket is one key-range scan.

File layout (SQLite):
- kv(key TEXT PRIMARY KEY, value TEXT NOT NULL)   ordered by key
- meta(name TEXT PRIMARY KEY, value TEXT NOT NULL)
"""

from __future__ import annotations

import logging
import sqlite3
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Iterable, Iterator, Optional, Tuple

logger = logging.getLogger(__name__)


# =============================================================================
# Abstraction
# =============================================================================

class KeyValueStore(ABC):
    """Ordered string key -> string value map with prefix scans."""

    @abstractmethod
    def put_many(self, items: Iterable[Tuple[str, str]]) -> int:
        """Insert items, returning the number written."""

    @abstractmethod
    def scan_prefix(self, prefix: str) -> Iterator[Tuple[str, str]]:
        """All (key, value) whose key starts with prefix, in key order."""

    @abstractmethod
    def items(self) -> Iterator[Tuple[str, str]]:
        """All entries in key order."""

    @abstractmethod
    def get_meta(self, name: str) -> Optional[str]:
        """Store-level metadata value."""

    @abstractmethod
    def set_meta(self, name: str, value: str) -> None:
        """Set store-level metadata."""

    @abstractmethod
    def __len__(self) -> int:
        """Entry count."""

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _prefix_upper_bound(prefix: str) -> Optional[str]:
    """Smallest string greater than every string starting with prefix."""
    if not prefix:
        return None
    return prefix[:-1] + chr(ord(prefix[-1]) + 1)


# =============================================================================
# SQLite Engine
# =============================================================================

class SqliteStore(KeyValueStore):
    """
    File-backed store.

    Opened read-only for serving (`readonly=True`); a connection per thread
    keeps concurrent request handlers independent.
    """

    def __init__(self, path: Path, readonly: bool = False):
        self.path = Path(path)
        self.readonly = readonly
        self._local = threading.local()
        if not readonly:
            conn = self._conn()
            conn.execute(
                "CREATE TABLE IF NOT EXISTS kv (key TEXT PRIMARY KEY, value TEXT NOT NULL)"
            )
            conn.execute(
                "CREATE TABLE IF NOT EXISTS meta (name TEXT PRIMARY KEY, value TEXT NOT NULL)"
            )
            conn.commit()
        elif not self.path.exists():
            raise FileNotFoundError(f"store not found: {self.path}")

    def _conn(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            if self.readonly:
                conn = sqlite3.connect(f"file:{self.path}?mode=ro", uri=True)
            else:
                conn = sqlite3.connect(str(self.path))
            self._local.conn = conn
        return conn

    def put_many(self, items: Iterable[Tuple[str, str]]) -> int:
        conn = self._conn()
        before = conn.total_changes
        conn.executemany("INSERT OR IGNORE INTO kv (key, value) VALUES (?, ?)", items)
        conn.commit()
        written = conn.total_changes - before
        logger.debug("wrote %d entries to %s", written, self.path)
        return written

    def scan_prefix(self, prefix: str) -> Iterator[Tuple[str, str]]:
        upper = _prefix_upper_bound(prefix)
        if upper is None:
            yield from self.items()
            return
        cursor = self._conn().execute(
            "SELECT key, value FROM kv WHERE key >= ? AND key < ? ORDER BY key",
            (prefix, upper),
        )
        yield from cursor

    def items(self) -> Iterator[Tuple[str, str]]:
        yield from self._conn().execute("SELECT key, value FROM kv ORDER BY key")

    def get_meta(self, name: str) -> Optional[str]:
        row = self._conn().execute("SELECT value FROM meta WHERE name = ?", (name,)).fetchone()
        return row[0] if row else None

    def set_meta(self, name: str, value: str) -> None:
        conn = self._conn()
        conn.execute(
            "INSERT OR REPLACE INTO meta (name, value) VALUES (?, ?)", (name, str(value))
        )
        conn.commit()

    def __len__(self) -> int:
        return self._conn().execute("SELECT COUNT(*) FROM kv").fetchone()[0]

    def close(self) -> None:
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None
