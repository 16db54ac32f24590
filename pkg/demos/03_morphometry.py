"""Minkowski-functional morphometry: porosity, specific surface area, and
the Euler characteristic.

The Euler characteristic counts objects - loops + cavities, computed as the
alternating cell sum V - E + F - C of the pore phase's cubical complex.
Shapes with known topology make the convention concrete.
"""

import numpy as np

from poromorph import VoxelVolume, euler_characteristic, minkowski_report

# -- one isolated pore: chi = 1 ----------------------------------------------
single = np.zeros((5, 5, 5), np.uint8)
single[2, 2, 2] = 1
print("single voxel      chi =", euler_characteristic(VoxelVolume(single, 1.0)))

# -- a closed ring: one object, one loop -> chi = 0 ---------------------------
ring = np.ones((3, 3, 1), np.uint8)
ring[1, 1, 0] = 0
print("closed ring       chi =", euler_characteristic(VoxelVolume(ring, 1.0)))

# -- a hollow shell: one object, one cavity -> chi = 2 ------------------------
shell = np.ones((3, 3, 3), np.uint8)
shell[1, 1, 1] = 0
print("hollow shell      chi =", euler_characteristic(VoxelVolume(shell, 1.0)))

# -- corner-touching voxels depend on the adjacency convention ----------------
diag = np.zeros((2, 2, 1), np.uint8)
diag[0, 0, 0] = diag[1, 1, 0] = 1
vol = VoxelVolume(diag, 1.0)
print(f"diagonal pair     chi = {euler_characteristic(vol, 6)} (face adjacency), "
      f"{euler_characteristic(vol, 26)} (26-adjacency)")

# -- full report on a random medium -------------------------------------------
rng = np.random.default_rng(2)
data = (rng.random((32, 32, 32)) < 0.22).astype(np.uint8)
report = minkowski_report(VoxelVolume(data, voxel_size_um=2.25))
print(f"\nrandom 32^3 medium at 2.25 um/voxel:")
print(f"  porosity          {report.phi:.4f}")
print(f"  specific area     {report.specific_area_per_m:,.0f} 1/m")
print(f"  euler chi         {report.euler_chi}")
print(f"  pore voxels       {report.pore_voxels} / {report.bulk_voxels}")
print("\nJSON:", report.to_json())
