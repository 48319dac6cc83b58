"""
c3py._io - byte layouts and persistence (internal).

    from c3py._io import C3Block, EstimatorFile, IntervalStoreFile, PsiStoreFile
"""

from .base import (
    read_u16_be,
    write_u16_be,
    read_u32_be,
    write_u32_be,
    read_u64_be,
    write_u64_be,
    ByteReader,
    ByteWriter,
    C3Block,
)
from .estimator import EstimatorFile, EstimatorSections
from .intervals import IntervalStoreFile, IntervalSections, ShardSection
from .psi import PsiStoreFile, PsiStoreSections, ServerKeyFile, ELEMENT_SIZE
from .manifest import Manifest, MANIFEST_NAME
from .kvstore import KeyValueStore, SqliteStore

__all__ = [
    "read_u16_be",
    "write_u16_be",
    "read_u32_be",
    "write_u32_be",
    "read_u64_be",
    "write_u64_be",
    "ByteReader",
    "ByteWriter",
    "C3Block",
    "EstimatorFile",
    "EstimatorSections",
    "IntervalStoreFile",
    "IntervalSections",
    "ShardSection",
    "PsiStoreFile",
    "PsiStoreSections",
    "ServerKeyFile",
    "ELEMENT_SIZE",
    "Manifest",
    "MANIFEST_NAME",
    "KeyValueStore",
    "SqliteStore",
]
