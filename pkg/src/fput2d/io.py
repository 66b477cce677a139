"""Snapshot and diagnostic file formats.

Binary snapshot: little-endian header

    magic   7 bytes  b"FPUT2D\\0"
    version u32      format version (currently 1)
    form    u8       0 = displacement, 1 = strain, 2 = envelope
    N       u32      grid side
    time    f64      simulation time (slow time for envelopes)

followed by row-major f64 payload arrays: (q, w) for displacement,
(u, v, ut, vt) for strain, and re/im interleaved samples for an envelope.
Envelope box length is not part of the header; it travels in the run manifest.

Diagnostics are plain CSV streams: lattice (t, energy, compat_defect,
max_amp) and envelope (T, mass, h4proxy, max_amp).
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .lattice import LatticeState
from .nls import EnvelopeField

MAGIC = b"FPUT2D\x00"
VERSION = 1
_FORM_CODE = {"displacement": 0, "strain": 1, "envelope": 2}
_FORM_NAME = {v: k for k, v in _FORM_CODE.items()}


def write_snapshot(path, obj) -> None:
    """Write a LatticeState or EnvelopeField snapshot."""
    if isinstance(obj, LatticeState):
        form = obj.form
        n = obj.n_side
        t = obj.time
        payload = [np.ascontiguousarray(a, dtype="<f8") for a in obj.arrays()]
    elif isinstance(obj, EnvelopeField):
        form = "envelope"
        n = obj.grid_side
        t = obj.slow_time
        inter = np.empty((n, n, 2))
        inter[:, :, 0] = obj.a.real
        inter[:, :, 1] = obj.a.imag
        payload = [np.ascontiguousarray(inter, dtype="<f8")]
    else:
        raise TypeError(f"cannot snapshot {type(obj)!r}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBId", VERSION, _FORM_CODE[form], n, t))
        for a in payload:
            fh.write(a.tobytes())


def read_snapshot(path):
    """Read a snapshot back into a LatticeState or EnvelopeField.

    Envelopes are returned with box_length = nan (recover it from the run
    manifest) unless passed via the keyword-free convention of the caller.
    """
    with open(path, "rb") as fh:
        magic = fh.read(7)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a FPUT2D snapshot")
        version, form_code, n, t = struct.unpack("<IBId", fh.read(struct.calcsize("<IBId")))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        form = _FORM_NAME[form_code]
        count = {"displacement": 2, "strain": 4, "envelope": 1}[form]
        per = n * n * (2 if form == "envelope" else 1)
        raw = np.frombuffer(fh.read(count * per * 8), dtype="<f8")
    if form == "envelope":
        inter = raw.reshape(n, n, 2)
        return EnvelopeField(float("nan"), inter[:, :, 0] + 1j * inter[:, :, 1], t)
    arrays = [raw[i * per:(i + 1) * per].reshape(n, n).copy() for i in range(count)]
    if form == "displacement":
        return LatticeState("displacement", t, q=arrays[0], w=arrays[1])
    return LatticeState("strain", t, u=arrays[0], v=arrays[1], ut=arrays[2], vt=arrays[3])


class DiagnosticsCsv:
    """Append-only CSV stream with a fixed header."""

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(self.columns)

    def write(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("column count mismatch")
        self._writer.writerow([repr(float(v)) if v is not None else "" for v in values])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_manifest(out_dir, command: str, config_hash: str, files) -> Path:
    path = Path(out_dir) / "manifest.json"
    manifest = {
        "command": command,
        "config_hash": config_hash,
        "files": sorted(str(f) for f in files),
    }
    path.write_text(json.dumps(manifest, indent=2))
    return path
