"""
Deterministic artifact emission: CSV tables with `#` header metadata and a
JSON run manifest written last as the completion marker.

CSV bodies are byte-identical across reruns of the same configuration: floats
are rendered with repr-faithful %.12g, rows are emitted in a deterministic
order, and timestamps appear only in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


def config_hash(config: dict) -> str:
    canon = "\n".join(f"{k} = {config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path, columns, rows, meta: dict) -> int:
    """Write one table; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}: {v}" for k, v in sorted(meta.items())]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n")
    return len(rows)


class RunWriter:
    """Collects emitted files and finalizes the manifest atomically last."""

    def __init__(self, out_dir, config: dict, tool_version: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config = dict(config)
        self.hash = config_hash(self.config)
        self.tool_version = tool_version
        self.files = {}
        self.flags = {}
        self._t0 = time.time()

    def meta(self, **extra) -> dict:
        base = {"config-hash": self.hash, "tool-version": self.tool_version,
                "units": "hbar = m = omega_c = 1 unless overridden"}
        base.update(extra)
        return base

    def table(self, name: str, columns, rows, **extra):
        n = write_csv(self.out_dir / name, columns, rows, self.meta(**extra))
        self.files[name] = n

    def json_file(self, name: str, payload: dict):
        path = self.out_dir / name
        path.write_text(json.dumps(payload, sort_keys=True, indent=1,
                                   default=_json_default) + "\n")
        self.files[name] = 1

    def flag(self, key: str, value):
        self.flags[key] = value

    def finalize(self) -> Path:
        manifest = {
            "config_hash": self.hash,
            "tool_version": self.tool_version,
            "config": {k: _json_default(v) if not isinstance(v, (str, int, float, bool))
                       else v for k, v in self.config.items()},
            "files": self.files,
            "convergence_flags": self.flags,
            "wall_clock_s": round(time.time() - self._t0, 3),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
        return path


def _json_default(x):
    import numpy as np
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def is_complete(out_dir) -> bool:
    """Crash safety: partial outputs without a manifest are incomplete."""
    return (Path(out_dir) / "manifest.json").exists()
