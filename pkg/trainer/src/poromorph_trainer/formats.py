"""File-format shims: VVOL dataset reading and WB1 weight export.

These are independent implementations of the two on-disk interfaces shared
with the analysis toolkit, so a bundle written here round-trips bit-exactly
through the toolkit's loader (CRC32 verified per tensor).
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

VVOL_MAGIC = b"VVOL1\n"
WB1_MAGIC = b"WB1\n"


class DatasetEmptyError(Exception):
    """No usable VVOL volumes found in the dataset directory."""


def read_vvol(path) -> tuple[np.ndarray, float]:
    """Read one VVOL file; returns (data indexed [x, y, z], voxel_size_um).

    Binary payloads come back as uint8 {0, 1}; f32 payloads as float32.
    """
    blob = Path(path).read_bytes()
    if not blob.startswith(VVOL_MAGIC):
        raise ValueError(f"{path}: not a VVOL file")
    body = blob[len(VVOL_MAGIC):]
    nl = body.index(b"\n")
    header = json.loads(body[:nl].decode("utf-8"))
    dims = tuple(int(d) for d in header["dims"])
    n = dims[0] * dims[1] * dims[2]
    payload = body[nl + 1:]
    if header["dtype"] == "u8":
        if len(payload) != n:
            raise ValueError(f"{path}: payload size mismatch")
        flat = np.frombuffer(payload, dtype=np.uint8).copy()
        flat[flat == 255] = 1
    elif header["dtype"] == "f32":
        if len(payload) != 4 * n:
            raise ValueError(f"{path}: payload size mismatch")
        flat = np.frombuffer(payload, dtype="<f4")
    else:
        raise ValueError(f"{path}: unsupported dtype {header['dtype']!r}")
    return flat.reshape(dims, order="F"), float(header["voxel_size_um"])


def load_dataset(directory) -> np.ndarray:
    """Stack every .vvol volume in ``directory`` into (N, 1, nx, ny, nz)
    float32 with phases mapped to {-1, +1} (pore positive)."""
    files = sorted(Path(directory).glob("*.vvol"))
    volumes = []
    for f in files:
        data, _ = read_vvol(f)
        volumes.append(data.astype(np.float32) * 2.0 - 1.0)
    if not volumes:
        raise DatasetEmptyError(f"no .vvol volumes in {directory}")
    return np.stack(volumes)[:, None]


@dataclass(frozen=True)
class TensorSpec:
    name: str
    array: np.ndarray


def write_wb1(path, layers: list[tuple[str, str, list[TensorSpec]]],
              role: str = "generator", metadata: dict | None = None) -> None:
    """Write a WB1 bundle: magic, one-line JSON manifest with per-tensor
    CRC32, then little-endian float32 payloads in manifest order. The write
    is atomic (temp file + rename)."""
    manifest_layers = []
    blobs = []
    for name, kind, tensors in layers:
        entries = []
        for spec in tensors:
            arr = np.ascontiguousarray(spec.array, dtype="<f4")
            blob = arr.tobytes()
            blobs.append(blob)
            entries.append({"name": spec.name, "shape": list(arr.shape),
                            "crc32": zlib.crc32(blob) & 0xFFFFFFFF})
        manifest_layers.append({"name": name, "kind": kind, "tensors": entries})
    manifest = {
        "format_version": 1,
        "role": role,
        "metadata": metadata or {},
        "layers": manifest_layers,
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(WB1_MAGIC)
        fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)
    os.replace(tmp, path)
