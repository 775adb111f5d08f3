"""JSON configuration loading with field-level errors, and run manifests."""

from __future__ import annotations

import hashlib
import json
import platform
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found", field="$") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", field="$") from None


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


class RunManifest:
    def __init__(self, command: str, config: dict, coeff_hash: str | None = None):
        self.command = command
        self.config = config
        self.coeff_hash = coeff_hash
        self.stages: dict[str, float] = {}
        self.cache: dict = {}
        self.tolerances: dict = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0

    def to_json(self) -> dict:
        return {
            "tool": "bltails",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "command": self.command,
            "config_hash": config_hash(self.config),
            "config": self.config,
            "coefficient_hash": self.coeff_hash,
            "tolerances": self.tolerances,
            "wall_clock": self.stages,
            "cache": self.cache,
        }

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / "manifest.json"
        dump_json(self.to_json(), path)
        return path
