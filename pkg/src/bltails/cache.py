"""Content-addressed on-disk cache for lifted solves.

Entries are ``<key>.npz`` files with a ``<key>.sha256`` sidecar. A checksum
mismatch or unreadable archive evicts the entry.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import warnings
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

ENV_VAR = "BLTAILS_CACHE_DIR"


def default_dir() -> Path:
    return Path(os.environ.get(ENV_VAR, Path.home() / ".cache" / "bltails"))


def make_key(**parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [repr(float(v)) for v in obj.ravel()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot hash {type(obj).__name__}")


class DiskCache:
    def __init__(self, root: str | Path | None = None, enabled: bool = True):
        self.root = Path(root) if root is not None else default_dir()
        self.enabled = enabled
        self.hits = 0
        self.misses = 0
        if enabled:
            self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, key: str) -> tuple[Path, Path]:
        return self.root / f"{key}.npz", self.root / f"{key}.sha256"

    def get(self, key: str) -> dict | None:
        if not self.enabled:
            return None
        data, digest = self._paths(key)
        if not data.exists():
            self.misses += 1
            return None
        raw = data.read_bytes()
        ok = digest.exists() and digest.read_text().strip() == hashlib.sha256(raw).hexdigest()
        if ok:
            try:
                with np.load(io.BytesIO(raw), allow_pickle=False) as z:
                    out = {k: z[k] for k in z.files}
            except (OSError, ValueError):
                ok = False
        if not ok:
            warnings.warn(f"corrupt cache entry {key} evicted")
            self.evict(key)
            self.misses += 1
            return None
        self.hits += 1
        return out

    def put(self, key: str, arrays: dict) -> None:
        if not self.enabled:
            return
        buf = io.BytesIO()
        np.savez(buf, **arrays)
        raw = buf.getvalue()
        data, digest = self._paths(key)
        tmp = data.with_suffix(".tmp")
        tmp.write_bytes(raw)
        tmp.replace(data)
        digest.write_text(hashlib.sha256(raw).hexdigest())

    def evict(self, key: str) -> None:
        for p in self._paths(key):
            p.unlink(missing_ok=True)

    def clear(self) -> None:
        if self.root.exists():
            for p in self.root.glob("*.npz"):
                p.unlink()
            for p in self.root.glob("*.sha256"):
                p.unlink()

    def stats(self) -> dict:
        return {"hits": self.hits, "misses": self.misses}
