"""Latent-to-volume generation.

The Gaussian-random-field backend maps a latent vector to a thresholded
spectral field. Latent components are the coefficients of a fixed set of
low-frequency Fourier modes, in (cosine, sine) pairs with Gaussian spectral
weights, so the map is exactly linear in the latent and a standard-normal
latent yields an exactly unit-variance field at every voxel. That makes the
backend a drop-in stand-in for a trained neural generator: gradual Gaussian
deformation of the latent walks through statistically identical fields.

Any generator backend is a deterministic pure function from a latent vector
to a binary volume, exposed as a callable with a ``latent_dim`` attribute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError
from .imageops import median_filter_3d, multi_otsu_threshold
from .volume import BINARY, CONTINUOUS, DEFAULT_VOXEL_SIZE_UM, VoxelVolume


@dataclass(frozen=True)
class GrfConfig:
    """Spectral-synthesis settings for the random-field backend.

    ``mode_count`` equals the latent dimension and must be even: latent
    components pair up as cosine/sine coefficients per frequency.
    ``seed_spectrum`` deterministically fixes the mode phases, so one config
    describes one fixed generator.
    """

    size: int = 64
    correlation_length: float = 16.0
    threshold: float = 0.77
    mode_count: int = 20
    seed_spectrum: int = 0
    voxel_size_um: float = DEFAULT_VOXEL_SIZE_UM

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("size must be >= 2")
        if self.correlation_length <= 0:
            raise ValueError("correlation_length must be > 0")
        if self.mode_count < 2 or self.mode_count % 2:
            raise ValueError("mode_count must be an even integer >= 2")


def _lowest_frequencies(n_pairs: int) -> np.ndarray:
    """The ``n_pairs`` lowest nonzero integer frequency triples, one per
    +/- pair (first nonzero component positive), sorted by (|m|^2, lex)."""
    radius = 1
    while True:
        rng_axis = np.arange(-radius, radius + 1)
        grid = np.stack(np.meshgrid(rng_axis, rng_axis, rng_axis, indexing="ij"),
                        axis=-1).reshape(-1, 3)
        norms = (grid ** 2).sum(axis=1)
        keep = norms > 0
        grid, norms = grid[keep], norms[keep]
        canonical = []
        for m, n2 in zip(grid, norms):
            first = next(v for v in m if v != 0)
            if first > 0:
                canonical.append((n2, m[0], m[1], m[2]))
        canonical.sort()
        # the first n_pairs entries are final once their norms fit inside
        # the enumerated cube
        if len(canonical) >= n_pairs and canonical[n_pairs - 1][0] <= radius ** 2:
            return np.array([c[1:] for c in canonical[:n_pairs]], dtype=np.int64)
        radius += 1


class GrfGenerator:
    """Deterministic Gaussian-random-field generator.

    ``generator(z)`` thresholds the synthesized field at the configured
    level: pore where field > threshold. ``field_of(z)`` exposes the raw
    field; it is exactly linear in ``z``.
    """

    def __init__(self, config: GrfConfig | None = None):
        self.config = config or GrfConfig()
        cfg = self.config
        n_pairs = cfg.mode_count // 2
        freqs = _lowest_frequencies(n_pairs)
        rng = np.random.default_rng(cfg.seed_spectrum)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n_pairs)

        # Gaussian spectrum: amplitude exp(-(pi |m| L / size)^2)
        weights = np.exp(-(np.pi * np.sqrt((freqs ** 2).sum(axis=1))
                           * cfg.correlation_length / cfg.size) ** 2)
        norm = np.sqrt(2.0 * (weights ** 2).sum())

        axes = [np.arange(cfg.size, dtype=np.float64) * (2.0 * np.pi / cfg.size)
                for _ in range(3)]
        basis = np.empty((cfg.mode_count, cfg.size ** 3), dtype=np.float64)
        for i, (m, phi, w) in enumerate(zip(freqs, phases, weights)):
            theta = (m[0] * axes[0][:, None, None]
                     + m[1] * axes[1][None, :, None]
                     + m[2] * axes[2][None, None, :]) + phi
            amp = np.sqrt(2.0) * w / norm
            basis[2 * i] = (amp * np.cos(theta)).ravel()
            basis[2 * i + 1] = (amp * np.sin(theta)).ravel()
        self._basis = basis
        self._shape = (cfg.size,) * 3

    @property
    def latent_dim(self) -> int:
        return self.config.mode_count

    def field_of(self, z: np.ndarray) -> np.ndarray:
        """Raw scalar field for latent ``z``; linear in ``z``."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.latent_dim,):
            raise DimMismatchError(
                f"latent has shape {z.shape}, generator expects ({self.latent_dim},)")
        return (z @ self._basis).reshape(self._shape)

    def __call__(self, z: np.ndarray) -> VoxelVolume:
        field = self.field_of(z)
        binary = (field > self.config.threshold).astype(np.uint8)
        return VoxelVolume(binary, self.config.voxel_size_um, BINARY)


def postprocess(vol: VoxelVolume) -> VoxelVolume:
    """Median filter (radius 1) then two-class Otsu threshold.

    Converts raw continuous generator output to the binary phase volume
    used by the analysis and simulation stack.
    """
    if vol.encoding != CONTINUOUS:
        raise ValueError("postprocess expects a continuous volume")
    smoothed = median_filter_3d(vol, radius=1)
    _, binary = multi_otsu_threshold(smoothed, classes=2, bins=256)
    return binary


def draw_latent(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Standard-normal latent vector of length ``dim``."""
    return rng.standard_normal(dim)
