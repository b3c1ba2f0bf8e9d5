"""CSV and manifest writers. CSV files follow RFC 4180 (CRLF line ends)."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .._kernels import BACKEND


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def versions():
    return {
        "qamem": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "backend": BACKEND,
    }


def write_manifest(out_dir, command, cfg, seed, wall_time, outputs, extra=None):
    """Run manifest: command, config hash, versions, seed, wall time, outputs."""
    man = {
        "command": command,
        "config_hash": cfg.hash,
        "config": cfg.raw,
        "seed": seed,
        "versions": versions(),
        "wall_time_s": wall_time,
        "outputs": sorted(str(Path(p).name) for p in outputs),
    }
    if extra:
        man["derived"] = extra
    path = Path(out_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return path
