"""3D image processing: median filter, multi-Otsu thresholding, connected
components, and the exact Euclidean distance transform.

All operations are pure functions of their inputs and return freshly
allocated volumes. Border handling is clamp-replicate for filtering; the
distance transform treats the domain exterior as solid by default so
distances stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import ndimage as ndi

from .errors import (
    AllPoreError,
    DegenerateHistogramError,
    WindowTooLargeError,
)
from .volume import BINARY, SCALAR, VoxelVolume

FACE6 = "face6"
FULL26 = "full26"


@dataclass(frozen=True)
class Histogram:
    """Value histogram of a volume: ascending bin edges and per-bin counts."""

    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.size != edges.size - 1:
            raise ValueError("counts length must be len(bin_edges) - 1")
        if np.any(np.diff(edges) < 0):
            raise ValueError("bin edges must be ascending")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def compute_histogram(vol: VoxelVolume, bins: int) -> Histogram:
    """Histogram raw voxel values over [min, max] with equal-width bins."""
    counts, edges = np.histogram(vol.data, bins=bins)
    return Histogram(edges, counts)


def median_filter_3d(vol: VoxelVolume, radius: int = 1) -> VoxelVolume:
    """Median filter with a cubic (2*radius+1)^3 window.

    Borders are clamp-replicated. Encoding, dims and voxel size are
    preserved.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    size = 2 * radius + 1
    if size > min(vol.dims):
        raise WindowTooLargeError(
            f"window edge {size} exceeds smallest dimension {min(vol.dims)}")
    filtered = ndi.median_filter(vol.data, size=size, mode="nearest")
    return VoxelVolume(filtered, vol.voxel_size_um, vol.encoding)


def otsu_thresholds_from_histogram(hist: Histogram, classes: int = 2) -> list[float]:
    """Exhaustive between-class-variance maximization over bin boundaries.

    Returns ``classes - 1`` ascending thresholds, each the upper edge of the
    last bin assigned to the lower class. Ties resolve to the first
    (lowest-index) maximizer.
    """
    if classes not in (2, 3):
        raise ValueError(f"classes must be 2 or 3, got {classes}")
    counts = hist.counts.astype(np.float64)
    centers = hist.centers
    if np.count_nonzero(counts) < classes:
        raise DegenerateHistogramError(
            f"histogram has fewer than {classes} occupied bins; no threshold exists")
    nbins = counts.size
    # prefix sums make each candidate cut O(1)
    cum_w = np.concatenate(([0.0], np.cumsum(counts)))
    cum_m = np.concatenate(([0.0], np.cumsum(counts * centers)))
    total = cum_w[-1]
    mean = cum_m[-1] / total

    def class_term(lo: int, hi: int) -> float:
        w = cum_w[hi] - cum_w[lo]
        if w == 0.0:
            return 0.0
        mu = (cum_m[hi] - cum_m[lo]) / w
        return (w / total) * (mu - mean) ** 2

    best_var = -1.0
    best_cuts: tuple[int, ...] | None = None
    for cuts in combinations(range(nbins - 1), classes - 1):
        bounds = (0, *[c + 1 for c in cuts], nbins)
        var = sum(class_term(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]))
        if var > best_var:
            best_var = var
            best_cuts = cuts
    assert best_cuts is not None
    return [float(hist.bin_edges[c + 1]) for c in best_cuts]


def multi_otsu_threshold(vol: VoxelVolume, classes: int = 2,
                         bins: int = 256) -> tuple[list[float], VoxelVolume]:
    """Threshold a continuous volume by maximizing between-class variance.

    Voxels strictly above the top threshold are labeled pore (1). Returns the
    ascending thresholds and the binary volume.
    """
    if bins < 8:
        raise ValueError(f"bins must be >= 8, got {bins}")
    hist = compute_histogram(vol, bins)
    thresholds = otsu_thresholds_from_histogram(hist, classes)
    binary = (vol.data > thresholds[-1]).astype(np.uint8)
    return thresholds, VoxelVolume(binary, vol.voxel_size_um, BINARY)


def connected_components(vol: VoxelVolume,
                         connectivity: str = FACE6) -> tuple[np.ndarray, int]:
    """Label connected pore components.

    Labels 1..K mark pore voxels, 0 marks solid. ``face6`` uses face
    adjacency, ``full26`` also joins edge and corner neighbors.
    """
    if vol.encoding != BINARY:
        raise ValueError("connected_components requires a binary volume")
    if connectivity == FACE6:
        structure = ndi.generate_binary_structure(3, 1)
    elif connectivity == FULL26:
        structure = ndi.generate_binary_structure(3, 3)
    else:
        raise ValueError(f"connectivity must be {FACE6!r} or {FULL26!r}")
    labels, count = ndi.label(vol.data, structure=structure)
    return labels.astype(np.int32), int(count)


def distance_transform_edt(vol: VoxelVolume, exterior: str = "solid") -> VoxelVolume:
    """Exact Euclidean distance (in voxel units) from each pore voxel to the
    nearest solid voxel center. Solid voxels hold 0.

    ``exterior`` controls voxels beyond the domain: ``"solid"`` (default)
    pads a virtual solid shell so distances stay finite; ``"ignore"``
    measures against in-domain solid only and raises :class:`AllPoreError`
    when none exists.
    """
    if vol.encoding != BINARY:
        raise ValueError("distance transform requires a binary volume")
    if exterior not in ("solid", "ignore"):
        raise ValueError(f"exterior must be 'solid' or 'ignore', got {exterior!r}")
    pore = vol.data.astype(bool)
    if exterior == "solid":
        padded = np.pad(pore, 1, mode="constant", constant_values=False)
        dist = ndi.distance_transform_edt(padded)[1:-1, 1:-1, 1:-1]
    else:
        if pore.all():
            raise AllPoreError("no solid voxel in domain and exterior is ignored")
        dist = ndi.distance_transform_edt(pore)
    return VoxelVolume(np.ascontiguousarray(dist), vol.voxel_size_um, SCALAR)
