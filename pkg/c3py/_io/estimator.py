"""
Estimator artifact I/O.

File layout (big-endian):
- Magic: 8 bytes ("C3ESTIM\\0")
- Version: u16 (1)
- Digest: 32 bytes, SHA-256 of everything after the digest
- Parameters:
    n            u16     n-gram order
    smoothing    f64     additive smoothing constant
    tail_scale   f64     tail normalisation factor
    t            u32     requested head size
    alphabet     u16 length + UTF-8
- Histogram section:
    total        u64     raw corpus size
    entries      u32 count, then per entry: u16 length + password, u64 count
- N-gram section:
    contexts     u32 count, then per context (sorted):
                 u16 length + context, u16 symbol count,
                 per symbol (sorted): u8 code point, u64 count

Start and end markers are the code points 0x02 and 0x03.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from .base import ByteWriter, C3Block


ESTIMATOR_MAGIC = b"C3ESTIM\x00"
ESTIMATOR_FILE_VERSION = 1


@dataclass
class EstimatorSections:
    """Decoded estimator artifact content."""
    n: int
    smoothing: float
    tail_scale: float
    t: int
    alphabet: str
    total: int
    head: List[Tuple[str, int]]
    contexts: Dict[str, Dict[str, int]]


class EstimatorFile(C3Block):
    """Estimator artifact block."""

    MAGIC = ESTIMATOR_MAGIC
    VERSION = ESTIMATOR_FILE_VERSION

    @classmethod
    def build(cls, sections: EstimatorSections) -> "EstimatorFile":
        w = ByteWriter()
        w.u16(sections.n).f64(sections.smoothing).f64(sections.tail_scale)
        w.u32(sections.t).text(sections.alphabet)

        w.u64(sections.total).u32(len(sections.head))
        for password, count in sections.head:
            w.text(password).u64(count)

        w.u32(len(sections.contexts))
        for context in sorted(sections.contexts):
            symbols = sections.contexts[context]
            w.text(context).u16(len(symbols))
            for symbol in sorted(symbols):
                w.u8(ord(symbol)).u64(symbols[symbol])
        return cls.wrap(w.getvalue())

    def sections(self) -> EstimatorSections:
        r = self.reader()
        n = r.u16()
        smoothing = r.f64()
        tail_scale = r.f64()
        t = r.u32()
        alphabet = r.text()

        total = r.u64()
        head = [(r.text(), r.u64()) for _ in range(r.u32())]

        contexts: Dict[str, Dict[str, int]] = {}
        for _ in range(r.u32()):
            context = r.text()
            symbols = {}
            for _ in range(r.u16()):
                symbol = chr(r.u8())
                symbols[symbol] = r.u64()
            contexts[context] = symbols
        return EstimatorSections(n, smoothing, tail_scale, t, alphabet, total, head, contexts)

    # === File I/O ===

    @classmethod
    def from_file(cls, path: Path) -> "EstimatorFile":
        return cls.read(Path(path).read_bytes())

    def to_file(self, path: Path) -> None:
        Path(path).write_bytes(self.write())
