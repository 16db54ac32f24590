"""The neural forward engine and the WB1 weight format.

The full-size generator maps a 20-dim latent through a linear projection to
256x8x8x8 and four transposed-convolution doublings to a 128^3 volume in
[-1, 1]; it carries exactly 5,769,889 parameters. Weights travel in WB1
bundles (JSON manifest + raw float32 tensors, CRC32 per tensor), the format
the companion trainer package exports after WGAN-GP training.
"""

import tempfile
import time
from pathlib import Path

import numpy as np

from poromorph import (FULL_SIZE_SPEC, GENERATOR_PARAMETER_TOTAL,
                       NeuralGenerator, NeuralGeneratorSpec, load_weight_bundle,
                       neural_generate, random_weight_bundle,
                       save_weight_bundle)

print("full-size architecture:")
for name, kind, shapes in FULL_SIZE_SPEC.layer_plan():
    tensor_desc = ", ".join(f"{t}{list(s)}" for t, s in shapes.items()
                            if t in ("weight", "bias", "scale", "shift"))
    print(f"  {name:12s} {kind:18s} {tensor_desc}")
print(f"parameter total: {FULL_SIZE_SPEC.parameter_count():,} "
      f"(= {GENERATOR_PARAMETER_TOTAL:,})")

# -- a toy-size engine runs instantly -------------------------------------------
toy = NeuralGeneratorSpec(latent_dim=20, init_channels=32, init_size=8,
                          stage_channels=(16,), out_channels=1)
bundle = random_weight_bundle(toy, seed=4)
z = np.random.default_rng(4).standard_normal(20)
vol = neural_generate(z, bundle, toy)
print(f"\ntoy forward pass: latent 20 -> {vol.dims}, "
      f"values in [{vol.data.min():.3f}, {vol.data.max():.3f}]")

# the generator contract wraps forward pass + post-processing into a
# deterministic latent -> binary volume map
gen = NeuralGenerator(bundle, toy)
binary = gen(z)
print(f"wrapped generator: binary volume, porosity "
      f"{binary.pore_voxel_count / binary.voxel_count:.3f}")

# -- WB1 round trip ---------------------------------------------------------------
path = Path(tempfile.mkdtemp(prefix="poromorph_demo_")) / "toy.wb1"
save_weight_bundle(bundle, path)
loaded = load_weight_bundle(path)
assert all((l1.tensors[t] == l2.tensors[t]).all()
           for l1, l2 in zip(bundle.layers, loaded.layers) for t in l1.tensors)
print(f"WB1 round trip bit-exact ({path.stat().st_size:,} bytes, CRC32 verified)")

# -- the full-size engine, if you have a minute ------------------------------------
t0 = time.time()
full = random_weight_bundle(FULL_SIZE_SPEC, seed=0)
out = neural_generate(np.random.default_rng(0).standard_normal(20), full)
print(f"\nfull-size 128^3 forward pass: {time.time() - t0:.1f} s, "
      f"output range [{out.data.min():.3f}, {out.data.max():.3f}]")
print("(train real weights with the companion trainer package: "
      "trainer/ exports WB1 bundles this engine loads)")
