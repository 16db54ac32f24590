"""Voxel volumes, the VVOL container, and subvolume cropping.

A VoxelVolume is a 3D grid plus a physical voxel size. Binary volumes hold
phase labels (0 solid, 1 pore); continuous volumes hold values in [-1, 1].
The VVOL file is self-describing: magic line, one JSON header line, raw
little-endian payload in x-fastest order.
"""

import tempfile
from pathlib import Path

import numpy as np

from poromorph import (SubvolumeSpec, VoxelVolume, crop_subvolumes,
                       load_volume, save_volume, subvolume_count)

out_dir = Path(tempfile.mkdtemp(prefix="poromorph_demo_"))

# -- build a toy microstructure: a porous slab with a few channels ----------
rng = np.random.default_rng(0)
data = (rng.random((48, 48, 48)) < 0.25).astype(np.uint8)
data[20:28, 20:28, :] = 1  # one open channel along z
vol = VoxelVolume(data, voxel_size_um=2.25)
print(f"volume {vol.dims}, voxel {vol.voxel_size_um} um, "
      f"porosity {vol.pore_voxel_count / vol.voxel_count:.3f}")

# -- round-trip through the VVOL container ----------------------------------
path = out_dir / "slab.vvol"
save_volume(vol, path)
back = load_volume(path)
print(f"saved {path.stat().st_size} bytes; round-trip identical: "
      f"{bool((back.data == vol.data).all())}")

# -- crop overlapping training subvolumes ------------------------------------
spec = SubvolumeSpec(size=16, stride=8)
subs = crop_subvolumes(vol, spec)
print(f"cropped {len(subs)} subvolumes of 16^3 at stride 8 "
      f"(formula: {subvolume_count(vol.dims, spec)})")
phis = [s.pore_voxel_count / s.voxel_count for s in subs]
print(f"subvolume porosity spread: {min(phis):.3f} .. {max(phis):.3f}")

# a stride equal to the window size tiles the parent without overlap, so
# pore voxels are conserved
tiles = crop_subvolumes(vol, SubvolumeSpec(size=16, stride=16))
assert sum(t.pore_voxel_count for t in tiles) == vol.pore_voxel_count
print("non-overlapping tiling conserves pore voxels: True")
