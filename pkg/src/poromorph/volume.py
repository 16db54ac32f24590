"""Voxel-volume data model, VVOL container I/O, and subvolume cropping.

A :class:`VoxelVolume` is a dense 3D grid with a physical voxel edge length
in micrometers. Three encodings exist:

``binary``
    phase labels, 0 = solid and 1 = pore (uint8)
``continuous``
    values in [-1, 1] (float32), e.g. raw generator output
``scalar``
    any finite values (float64), e.g. distance maps

The VVOL container is a single self-describing file: the magic line
``VVOL1\\n``, one JSON header line ``{"dims": [nx, ny, nz],
"voxel_size_um": ..., "dtype": "u8"|"f32", "encoding": "raw"}``, then the
raw little-endian payload in x-fastest order. Binary payloads store pore
voxels as 255; they are normalized to 1 on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    IoFailureError,
    MalformedHeaderError,
    SizeMismatchError,
    SpecTooLargeError,
    UnsupportedDtypeError,
)

VVOL_MAGIC = b"VVOL1\n"

#: Voxel edge of the reference Berea scan, micrometers.
DEFAULT_VOXEL_SIZE_UM = 2.25

BINARY = "binary"
CONTINUOUS = "continuous"
SCALAR = "scalar"


@dataclass(frozen=True)
class VoxelVolume:
    """Immutable 3D scalar field with physical voxel size.

    Parameters
    ----------
    data : ndarray, shape (nx, ny, nz)
        Voxel values; dtype is normalized per encoding.
    voxel_size_um : float
        Edge length of one voxel in micrometers, > 0.
    encoding : str
        One of ``binary``, ``continuous``, ``scalar``.
    """

    data: np.ndarray
    voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM
    encoding: str = BINARY

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"volume data must be 3D and non-empty, got shape {arr.shape}")
        if not (np.isfinite(self.voxel_size_um) and self.voxel_size_um > 0):
            raise ValueError(f"voxel_size_um must be positive, got {self.voxel_size_um}")
        if self.encoding == BINARY:
            arr = arr.astype(np.uint8, copy=not arr.flags.owndata) if arr.dtype != np.uint8 else arr
            bad = (arr != 0) & (arr != 1)
            if bad.any():
                raise ValueError("binary volume contains values other than 0 and 1")
        elif self.encoding == CONTINUOUS:
            arr = arr.astype(np.float32) if arr.dtype != np.float32 else arr
            if not np.isfinite(arr).all():
                raise ValueError("continuous volume contains non-finite values")
            if arr.min() < -1.0 or arr.max() > 1.0:
                raise ValueError("continuous volume has values outside [-1, 1]")
        elif self.encoding == SCALAR:
            arr = arr.astype(np.float64) if arr.dtype != np.float64 else arr
            if not np.isfinite(arr).all():
                raise ValueError("scalar volume contains non-finite values")
        else:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)

    @property
    def voxel_size_m(self) -> float:
        return self.voxel_size_um * 1e-6

    @property
    def voxel_count(self) -> int:
        return int(self.data.size)

    @property
    def pore_voxel_count(self) -> int:
        if self.encoding != BINARY:
            raise ValueError("pore_voxel_count requires a binary volume")
        return int(self.data.sum())

    @classmethod
    def binary(cls, data, voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM) -> "VoxelVolume":
        return cls(np.asarray(data), voxel_size_um, BINARY)

    @classmethod
    def continuous(cls, data, voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM) -> "VoxelVolume":
        return cls(np.asarray(data), voxel_size_um, CONTINUOUS)

    @classmethod
    def scalar(cls, data, voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM) -> "VoxelVolume":
        return cls(np.asarray(data), voxel_size_um, SCALAR)


@dataclass(frozen=True)
class SubvolumeSpec:
    """Edge length and stride, in voxels, for overlapping subvolume cropping."""

    size: int
    stride: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"size must be >= 1, got {self.size}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


def save_volume(vol: VoxelVolume, path) -> None:
    """Write ``vol`` to ``path`` in the VVOL container format.

    Round-trips bit-exactly through :func:`load_volume`. Only binary and
    continuous volumes are storable; scalar fields (distance maps) are
    in-process intermediates outside the container's dtype contract.
    """
    if vol.encoding == SCALAR:
        raise ValueError("scalar volumes cannot be stored in a VVOL container")
    if vol.encoding == BINARY:
        dtype = "u8"
        payload = (vol.data * np.uint8(255)).ravel(order="F").tobytes()
    else:
        dtype = "f32"
        payload = vol.data.astype("<f4").ravel(order="F").tobytes()
    header = {
        "dims": list(vol.dims),
        "voxel_size_um": float(vol.voxel_size_um),
        "dtype": dtype,
        "encoding": "raw",
    }
    try:
        with open(path, "wb") as fh:
            fh.write(VVOL_MAGIC)
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def load_volume(path, format_hint: str | None = None, *,
                dims: tuple[int, int, int] | None = None,
                voxel_size_um: float | None = None) -> VoxelVolume:
    """Read a volume from a VVOL container or a headerless raw u8 file.

    Parameters
    ----------
    path : path-like
        File to read.
    format_hint : {"vvol", "raw_u8"}, optional
        Force a format. Default sniffs the VVOL magic.
    dims, voxel_size_um :
        Required for raw u8 ingest, ignored for VVOL.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if format_hint not in (None, "vvol", "raw_u8"):
        raise ValueError(f"unknown format hint {format_hint!r}")
    is_vvol = blob.startswith(VVOL_MAGIC) if format_hint is None else format_hint == "vvol"
    if is_vvol:
        return _decode_vvol(blob, path)
    if dims is None or voxel_size_um is None:
        raise MalformedHeaderError(
            f"{path}: no VVOL magic; raw ingest needs explicit dims and voxel_size_um")
    return _decode_raw_u8(blob, dims, voxel_size_um, path)


def _decode_vvol(blob: bytes, path) -> VoxelVolume:
    if not blob.startswith(VVOL_MAGIC):
        raise MalformedHeaderError(f"{path}: missing VVOL1 magic")
    body = blob[len(VVOL_MAGIC):]
    nl = body.find(b"\n")
    if nl < 0:
        raise MalformedHeaderError(f"{path}: header line is unterminated")
    try:
        header = json.loads(body[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"{path}: bad JSON header: {exc}") from exc
    try:
        dims = tuple(int(d) for d in header["dims"])
        voxel_size_um = float(header["voxel_size_um"])
        dtype = header["dtype"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedHeaderError(f"{path}: header missing or malformed field: {exc}") from exc
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise MalformedHeaderError(f"{path}: dims must be three positive integers, got {dims}")
    payload = body[nl + 1:]
    n = dims[0] * dims[1] * dims[2]
    if dtype == "u8":
        if len(payload) != n:
            raise SizeMismatchError(f"{path}: expected {n} bytes of u8, got {len(payload)}")
        flat = np.frombuffer(payload, dtype=np.uint8).copy()
        bad = ~np.isin(flat, (0, 1, 255))
        if bad.any():
            raise MalformedHeaderError(f"{path}: u8 payload has values outside {{0, 1, 255}}")
        flat[flat == 255] = 1
        data = flat.reshape(dims, order="F")
        return VoxelVolume(data, voxel_size_um, BINARY)
    if dtype == "f32":
        if len(payload) != 4 * n:
            raise SizeMismatchError(f"{path}: expected {4 * n} bytes of f32, got {len(payload)}")
        data = np.frombuffer(payload, dtype="<f4").reshape(dims, order="F")
        return VoxelVolume(data, voxel_size_um, CONTINUOUS)
    raise UnsupportedDtypeError(f"{path}: dtype {dtype!r} not in {{u8, f32}}")


def _decode_raw_u8(blob: bytes, dims, voxel_size_um: float, path) -> VoxelVolume:
    dims = tuple(int(d) for d in dims)
    n = dims[0] * dims[1] * dims[2]
    if len(blob) != n:
        raise SizeMismatchError(f"{path}: expected {n} raw u8 bytes, got {len(blob)}")
    flat = np.frombuffer(blob, dtype=np.uint8).copy()
    bad = ~np.isin(flat, (0, 1, 255))
    if bad.any():
        raise MalformedHeaderError(f"{path}: raw u8 payload has values outside {{0, 1, 255}}")
    flat[flat == 255] = 1
    return VoxelVolume(flat.reshape(dims, order="F"), voxel_size_um, BINARY)


def crop_subvolumes(vol: VoxelVolume, spec: SubvolumeSpec) -> list[VoxelVolume]:
    """Crop overlapping cubic subvolumes.

    Origins run over ``range(0, dim - size + 1, stride)`` per axis, in
    lexicographic (ix, iy, iz) order, so the per-axis count is
    ``floor((dim - size) / stride) + 1``.
    """
    nx, ny, nz = vol.dims
    s = spec.size
    if s > min(nx, ny, nz):
        raise SpecTooLargeError(f"subvolume size {s} exceeds dims {vol.dims}")
    starts = [range(0, d - s + 1, spec.stride) for d in vol.dims]
    out = []
    for ix, iy, iz in product(*starts):
        chunk = vol.data[ix:ix + s, iy:iy + s, iz:iz + s]
        out.append(VoxelVolume(chunk.copy(), vol.voxel_size_um, vol.encoding))
    return out


def subvolume_count(dims, spec: SubvolumeSpec) -> int:
    """Number of subvolumes :func:`crop_subvolumes` will produce."""
    if spec.size > min(dims):
        raise SpecTooLargeError(f"subvolume size {spec.size} exceeds dims {tuple(dims)}")
    counts = [(d - spec.size) // spec.stride + 1 for d in dims]
    return counts[0] * counts[1] * counts[2]
