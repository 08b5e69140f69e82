"""Deterministic report emission: CSV tables, JSON documents, run manifest."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

FLOAT_FMT = "{:.8e}"  # 9 significant digits


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def csv_text(columns, rows, meta: dict | None = None) -> str:
    """CSV body with optional ``# key = value`` header lines before the column row."""
    lines = [f"# {k} = {format_value(v)}" for k, v in (meta or {}).items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    atomic_write_text(path, csv_text(columns, rows, meta))
    return Path(path)


def write_json(path, doc) -> Path:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return Path(path)


def read_csv(path):
    """Parse a file written by :func:`write_csv` into (meta, columns, rows of str)."""
    meta, rows, columns = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, columns, rows


def peak_decimate(f: np.ndarray, p: np.ndarray, max_points: int):
    """Keep the largest value of each block so narrow spurs survive thinning."""
    n = f.size
    if n <= max_points:
        return f, p
    block = -(-n // max_points)
    m = n // block * block
    idx = p[:m].reshape(-1, block).argmax(axis=1) + np.arange(0, m, block)
    if m < n:
        idx = np.append(idx, m + int(p[m:].argmax()))
    return f[idx], p[idx]


def write_spectrum_csv(path, spectrum, meta: dict | None = None, max_points: int | None = 16384) -> Path:
    f, p = spectrum.bin_frequencies, spectrum.power
    if max_points:
        f, p = peak_decimate(f, p, max_points)
    meta = {"reference": spectrum.reference, "bin_width_Hz": spectrum.bin_width,
            "enbw_bins": float(spectrum.enbw_bins), **(meta or {})}
    return write_csv(path, ("f_Hz", "p_dB"), zip(f, p), meta)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode()).hexdigest()


def build_timestamp() -> str:
    """UTC time from SOURCE_DATE_EPOCH (0 when unset) so reruns are byte-identical."""
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_manifest(out_dir, command: str, config_text: str, artifacts) -> Path:
    """List every emitted file with its checksum; ``artifacts`` is (path, kind) pairs."""
    out_dir = Path(out_dir)
    listed = []
    for path, kind in artifacts:
        path = Path(path)
        listed.append({"file": path.relative_to(out_dir).as_posix(), "kind": kind,
                       "sha256": sha256_file(path)})
    doc = {
        "tool": "uwb-chainlab",
        "version": __version__,
        "command": command,
        "config_hash": config_hash(config_text),
        "timestamp": build_timestamp(),
        "artifacts": listed,
    }
    return write_json(out_dir / "manifest.json", doc)
