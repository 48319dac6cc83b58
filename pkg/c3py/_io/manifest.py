"""
Build manifest I/O.

The manifest is a JSON document written last by a build, through a
temporary file in the same directory and os.replace, so readers see either
the previous manifest or the complete new one.

    {
      "format": 1,
      "built_at": "2026-01-01T00:00:00+00:00",
      "protocols": {"hibp": {...}, "fsb": {...}, "gpc": {...}, "idb": {...}},
      "estimator": {"path": "estimator.bin", "digest": "..."}
    }

Entries named "path" or "store" are server-local and stripped from the
public view served at /meta.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from ..api.errors import ArtifactError


MANIFEST_FORMAT = 1
MANIFEST_NAME = "manifest.json"
_LOCAL_KEYS = ("path", "store")


@dataclass
class Manifest:
    """Parameters, salts and digests of one build."""
    built_at: str
    protocols: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    estimator: Optional[Dict[str, Any]] = None
    format: int = MANIFEST_FORMAT

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "format": self.format,
            "built_at": self.built_at,
            "protocols": self.protocols,
        }
        if self.estimator is not None:
            data["estimator"] = self.estimator
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Manifest":
        try:
            manifest = cls(
                built_at=data["built_at"],
                protocols=dict(data.get("protocols", {})),
                estimator=data.get("estimator"),
                format=int(data.get("format", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"malformed manifest: {e}") from None
        if manifest.format != MANIFEST_FORMAT:
            raise ArtifactError(f"unsupported manifest format {manifest.format}")
        return manifest

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ArtifactError(f"manifest is not JSON: {e}") from None

    def public_view(self) -> Dict[str, Any]:
        """Manifest without server-local file names."""
        def strip(section: Dict[str, Any]) -> Dict[str, Any]:
            return {k: v for k, v in section.items() if k not in _LOCAL_KEYS}

        data = self.to_dict()
        data["protocols"] = {name: strip(p) for name, p in self.protocols.items()}
        if self.estimator is not None:
            data["estimator"] = strip(self.estimator)
        return data

    # === File I/O ===

    @classmethod
    def from_file(cls, path: Path) -> "Manifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_file(self, path: Path) -> None:
        """Atomic replace of `path`."""
        path = Path(path)
        fd, tmp = tempfile.mkstemp(prefix=".manifest-", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(self.to_json())
                f.write("\n")
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
