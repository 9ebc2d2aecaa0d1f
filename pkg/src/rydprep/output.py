"""Artifact writers: CSV tables, JSON manifests and binary state dumps.

State dump layout (little-endian): two uint32 words ``N`` and
``sample_count``, then ``sample_count`` snapshots of ``2**N`` complex
amplitudes, each stored as interleaved float64 (re, im), snapshot-major.
"""

from __future__ import annotations

import csv
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import DomainError

HEADER_DTYPE = np.dtype("<u4")
PAYLOAD_DTYPE = np.dtype("<c16")
MAX_DUMP_SITES = 15


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v) + 0.0, ".12g")  # no "-0"
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Comma-separated, '.' decimal point, one header row; floats to 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a numeric CSV written by ``write_csv``."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("numpy", "scipy", "artifact"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def write_manifest(path: Path, *, command: str, config: dict, outputs: Sequence[Path],
                   wall_time_s: float, extra: dict | None = None) -> Path:
    path = Path(path)
    payload = {
        "command": command,
        "config": config,
        "versions": versions(),
        "wall_time_s": round(wall_time_s, 3),
        "outputs": sorted(Path(p).name for p in outputs),
    }
    if extra:
        payload["results"] = extra
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def dump_states(path: Path, n_sites: int, states: np.ndarray) -> Path:
    states = np.asarray(states)
    if n_sites > MAX_DUMP_SITES:
        raise DomainError(f"state dumps are limited to N <= {MAX_DUMP_SITES}")
    if states.ndim != 2 or states.shape[1] != 1 << n_sites:
        raise DomainError(f"expected (samples, {1 << n_sites}) amplitudes, got {states.shape}")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(np.array([n_sites, states.shape[0]], dtype=HEADER_DTYPE).tobytes())
        fh.write(np.ascontiguousarray(states, dtype=PAYLOAD_DTYPE).tobytes())
    return path


def load_states(path: Path) -> tuple[int, np.ndarray]:
    """Inverse of ``dump_states``: (N, amplitudes of shape (samples, 2^N))."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise DomainError("state dump too short for its header")
    n_sites, samples = (int(x) for x in np.frombuffer(raw[:8], dtype=HEADER_DTYPE))
    payload = np.frombuffer(raw[8:], dtype=PAYLOAD_DTYPE)
    if payload.size != samples << n_sites:
        raise DomainError(f"payload holds {payload.size} amplitudes, header promises {samples << n_sites}")
    return n_sites, payload.reshape(samples, 1 << n_sites).astype(complex)
