import json

import numpy as np
import pytest

from poromorph import (
    VoxelVolume,
    euler_characteristic,
    minkowski_report,
    porosity,
    specific_surface_area,
)

from conftest import sphere_volume
from oracles import enumerate_cubical_complex_chi


def test_porosity_all_pore():
    assert porosity(VoxelVolume(np.ones((4, 4, 4), np.uint8), 1.0)) == 1.0


def test_porosity_single_voxel_in_2cubed():
    data = np.zeros((2, 2, 2), np.uint8)
    data[0, 0, 0] = 1
    assert porosity(VoxelVolume(data, 1.0)) == 0.125


def test_porosity_independent_of_voxel_size(rng):
    data = (rng.random((6, 6, 6)) < 0.3).astype(np.uint8)
    assert porosity(VoxelVolume(data, 1.0)) == porosity(VoxelVolume(data, 7.5))


def test_porosity_complement(rng):
    data = (rng.random((6, 6, 6)) < 0.4).astype(np.uint8)
    phi = porosity(VoxelVolume(data, 1.0))
    assert porosity(VoxelVolume(1 - data, 1.0)) == pytest.approx(1.0 - phi)


def test_specific_area_single_pore_voxel():
    n = 6
    data = np.zeros((n, n, n), np.uint8)
    data[3, 3, 3] = 1
    vol = VoxelVolume(data, voxel_size_um=1.0)
    a = vol.voxel_size_m
    expected = 6 * a * a / (n ** 3 * a ** 3)
    assert specific_surface_area(vol) == pytest.approx(expected)


def test_specific_area_all_solid_is_zero():
    assert specific_surface_area(VoxelVolume(np.zeros((4, 4, 4), np.uint8), 1.0)) == 0.0


def test_specific_area_boundary_pore_exposes_faces():
    # a pore voxel in the corner still has 6 exposed faces (exterior solid)
    data = np.zeros((3, 3, 3), np.uint8)
    data[0, 0, 0] = 1
    vol = VoxelVolume(data, 1.0)
    a = vol.voxel_size_m
    assert specific_surface_area(vol) == pytest.approx(6 * a * a / (27 * a ** 3))


def test_specific_area_sphere_staircase_factor():
    # voxel-face counting overestimates a smooth sphere by ~1.5
    vol = sphere_volume(32, 10.0, center=(15.5, 15.5, 15.5))
    a = vol.voxel_size_m
    total_area = specific_surface_area(vol) * vol.voxel_count * a ** 3
    smooth = 4.0 * np.pi * (10.0 * a) ** 2
    assert total_area / smooth == pytest.approx(1.5, rel=0.05)


def test_chi_single_voxel():
    data = np.zeros((3, 3, 3), np.uint8)
    data[1, 1, 1] = 1
    assert euler_characteristic(VoxelVolume(data, 1.0)) == 1


def test_chi_closed_ring_is_zero():
    # 8-voxel face-connected ring around a hole: one object, one loop
    ring = np.ones((3, 3, 1), np.uint8)
    ring[1, 1, 0] = 0
    assert euler_characteristic(VoxelVolume(ring, 1.0)) == 0


def test_chi_hollow_shell_is_two():
    shell = np.ones((3, 3, 3), np.uint8)
    shell[1, 1, 1] = 0
    assert euler_characteristic(VoxelVolume(shell, 1.0)) == 2


def test_chi_empty_pore_phase():
    assert euler_characteristic(VoxelVolume(np.zeros((3, 3, 3), np.uint8), 1.0)) == 0


def test_chi_connectivity_conventions_on_diagonal_pair():
    data = np.zeros((2, 2, 1), np.uint8)
    data[0, 0, 0] = data[1, 1, 0] = 1
    vol = VoxelVolume(data, 1.0)
    assert euler_characteristic(vol, connectivity=6) == 2
    assert euler_characteristic(vol, connectivity=26) == 1


def test_chi_additive_over_separated_components(rng):
    a = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
    b = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
    combined = np.zeros((10, 4, 4), np.uint8)
    combined[:4] = a
    combined[6:] = b  # two solid planes between the blocks
    chi_a = euler_characteristic(VoxelVolume(a, 1.0))
    chi_b = euler_characteristic(VoxelVolume(b, 1.0))
    assert euler_characteristic(VoxelVolume(combined, 1.0)) == chi_a + chi_b


def test_chi_invariant_under_permutation_and_mirror(rng):
    data = (rng.random((5, 5, 5)) < 0.45).astype(np.uint8)
    chi = euler_characteristic(VoxelVolume(data, 1.0))
    for perm in ((1, 2, 0), (2, 1, 0), (0, 2, 1)):
        assert euler_characteristic(
            VoxelVolume(np.transpose(data, perm), 1.0)) == chi
    for axis in range(3):
        assert euler_characteristic(
            VoxelVolume(np.flip(data, axis).copy(), 1.0)) == chi


def test_chi_matches_complex_enumeration_exhaustive_2cubed():
    for code in range(256):
        data = np.array([(code >> b) & 1 for b in range(8)],
                        np.uint8).reshape(2, 2, 2)
        vol = VoxelVolume(data, 1.0)
        for conn in (6, 26):
            assert euler_characteristic(vol, conn) == \
                enumerate_cubical_complex_chi(data, conn), (code, conn)


def test_chi_matches_complex_enumeration_random_4cubed(rng):
    for _ in range(100):
        data = (rng.random((4, 4, 4)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        vol = VoxelVolume(data, 1.0)
        for conn in (6, 26):
            assert euler_characteristic(vol, conn) == \
                enumerate_cubical_complex_chi(data, conn)


def test_report_all_solid():
    report = minkowski_report(VoxelVolume(np.zeros((3, 3, 3), np.uint8), 1.0))
    assert (report.phi, report.specific_area_per_m, report.euler_chi) == (0.0, 0.0, 0)


def test_report_single_pore_voxel_in_4cubed():
    data = np.zeros((4, 4, 4), np.uint8)
    data[1, 2, 0] = 1
    vol = VoxelVolume(data, 1.0)
    report = minkowski_report(vol)
    a = vol.voxel_size_m
    assert report.phi == pytest.approx(1 / 64)
    assert report.specific_area_per_m == pytest.approx(6 * a * a / (64 * a ** 3))
    assert report.euler_chi == 1
    assert (report.pore_voxels, report.bulk_voxels) == (1, 64)


def test_report_matches_standalone_calls(rng):
    data = (rng.random((16, 16, 16)) < 0.3).astype(np.uint8)
    vol = VoxelVolume(data, 2.25)
    report = minkowski_report(vol)
    assert report.phi == porosity(vol)
    assert report.specific_area_per_m == specific_surface_area(vol)
    assert report.euler_chi == euler_characteristic(vol)


def test_report_json_field_names(rng):
    data = (rng.random((5, 5, 5)) < 0.5).astype(np.uint8)
    payload = json.loads(minkowski_report(VoxelVolume(data, 1.0)).to_json())
    assert set(payload) == {"phi", "specific_area_per_m", "euler_chi",
                            "pore_voxels", "bulk_voxels"}
