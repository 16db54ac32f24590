import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from poromorph import VoxelVolume
from poromorph.pnm import INLET, INTERIOR, OUTLET, Pore, PoreNetwork, Throat


def sphere_volume(n: int, radius: float, center=None, voxel_size_um: float = 1.0,
                  pore_inside: bool = True) -> VoxelVolume:
    """Rasterized sphere: pore inside (void in solid) by default."""
    if center is None:
        center = ((n - 1) / 2.0,) * 3
    X, Y, Z = np.indices((n, n, n))
    inside = ((X - center[0]) ** 2 + (Y - center[1]) ** 2
              + (Z - center[2]) ** 2) <= radius * radius
    data = inside if pore_inside else ~inside
    return VoxelVolume(data.astype(np.uint8), voxel_size_um)


def two_sphere_volume(voxel_size_um: float = 1.0) -> VoxelVolume:
    """Two r=6 spherical voids, centers 16 voxels apart, joined by an r=2
    cylindrical neck. Extracts to exactly 2 pores and 1 throat."""
    n, dist = 36, 16
    X, Y, Z = np.indices((n, n, 20))
    x1 = (n - dist) / 2.0
    c1, c2 = (x1, 18.0, 9.5), (x1 + dist, 18.0, 9.5)
    s1 = (X - c1[0]) ** 2 + (Y - c1[1]) ** 2 + (Z - c1[2]) ** 2 <= 36
    s2 = (X - c2[0]) ** 2 + (Y - c2[1]) ** 2 + (Z - c2[2]) ** 2 <= 36
    neck = ((Y - 18.0) ** 2 + (Z - 9.5) ** 2 <= 4.0) & (X >= c1[0]) & (X <= c2[0])
    return VoxelVolume((s1 | s2 | neck).astype(np.uint8), voxel_size_um)


def tube_network(diameter_m: float = 1.0e-5, length_m: float = 1.0e-4) -> PoreNetwork:
    """One inlet pore, one outlet pore, a single throat spanning the domain."""
    pores = (
        Pore(0, (0.0, 0.0, 0.0), 2.0e-5, 1.0e-15, INLET),
        Pore(1, (0.0, 0.0, length_m), 2.0e-5, 1.0e-15, OUTLET),
    )
    throats = (Throat(0, 1, diameter_m, length_m),)
    return PoreNetwork(pores, throats)


def chain_network(n_pores: int, diameter_m: float = 1.0e-5,
                  spacing_m: float = 1.0e-5) -> PoreNetwork:
    """Linear chain: inlet, n-2 interior pores, outlet."""
    pores = []
    for i in range(n_pores):
        boundary = INLET if i == 0 else OUTLET if i == n_pores - 1 else INTERIOR
        pores.append(Pore(i, (0.0, 0.0, i * spacing_m), 2.0e-5, 1.0e-15, boundary))
    throats = tuple(Throat(i, i + 1, diameter_m, spacing_m)
                    for i in range(n_pores - 1))
    return PoreNetwork(tuple(pores), throats)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
