"""WGAN-GP training loop with periodic WB1 checkpoints.

The critic takes ``n_critic`` optimization steps per generator step, both
under Adam. Every run writes a training-curve CSV (iteration, loss_d,
loss_g, wasserstein_estimate, mean_grad_norm) next to the exported bundle.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .formats import DatasetEmptyError, TensorSpec, load_dataset, write_wb1
from .losses import interpolate_gradient_norms, wgan_gp_losses
from .models import Discriminator, Generator


class DivergedTrainingError(Exception):
    """A loss became non-finite during training."""


@dataclass
class TrainerConfig:
    lambda_gp: float = 10.0
    lr_discriminator: float = 1.0e-4
    lr_generator: float = 5.0e-4
    n_critic: int = 5
    batch_size: int = 8
    adam_betas: tuple[float, float] = (0.5, 0.9)
    volume_size: int = 32
    channel_scale: int = 4
    latent_dim: int = 20
    iterations: int = 200
    seed: int = 0
    checkpoint_every: int = 0  # 0: only the final export
    out_dir: str = "runs"

    def __post_init__(self):
        if self.lambda_gp <= 0:
            raise ValueError("lambda_gp must be > 0")
        if self.n_critic < 1:
            raise ValueError("n_critic must be >= 1")
        if self.volume_size not in (32, 64, 128):
            raise ValueError("volume_size must be one of {32, 64, 128}")
        if self.channel_scale not in (1, 2, 4, 8):
            raise ValueError("channel_scale must be one of {1, 2, 4, 8}")


def export_generator(generator: Generator, path, extra_metadata: dict | None = None):
    """Write the generator (weights plus batch-norm running statistics) as a
    WB1 bundle loadable by the inference engine."""
    generator.eval()
    state = {k: v.detach().cpu().numpy() for k, v in generator.state_dict().items()}

    def bn_tensors(prefix):
        return [TensorSpec("scale", state[f"{prefix}.weight"]),
                TensorSpec("shift", state[f"{prefix}.bias"]),
                TensorSpec("running_mean", state[f"{prefix}.running_mean"]),
                TensorSpec("running_var", state[f"{prefix}.running_var"])]

    layers = [
        ("latent_proj", "linear",
         [TensorSpec("weight", state["latent_proj.weight"]),
          TensorSpec("bias", state["latent_proj.bias"])]),
        ("latent_bn", "batchnorm1d", bn_tensors("latent_bn")),
    ]
    for i in range(len(generator.ups)):
        layers.append((f"up{i + 1}", "transposed_conv3d",
                       [TensorSpec("weight", state[f"ups.{i}.weight"]),
                        TensorSpec("bias", state[f"ups.{i}.bias"])]))
        layers.append((f"up{i + 1}_bn", "batchnorm3d", bn_tensors(f"bns.{i}")))
    layers.append(("to_voxels", "transposed_conv3d",
                   [TensorSpec("weight", state["to_voxels.weight"]),
                    TensorSpec("bias", state["to_voxels.bias"])]))
    metadata = {"spec": generator.spec_dict()}
    if extra_metadata:
        metadata.update(extra_metadata)
    write_wb1(path, layers, role="generator", metadata=metadata)


@dataclass
class TrainingResult:
    bundle_path: Path
    curve_path: Path
    history: list[dict] = field(default_factory=list)

    def tail_mean(self, key: str, n: int = 10) -> float:
        rows = self.history[-n:]
        return float(np.mean([row[key] for row in rows]))


def train(dataset_dir, config: TrainerConfig) -> TrainingResult:
    """Train on a directory of VVOL volumes; returns paths of the exported
    bundle and training-curve CSV."""
    data = load_dataset(dataset_dir)
    if data.shape[-1] != config.volume_size:
        raise ValueError(
            f"dataset volumes are {data.shape[2:]}, config expects "
            f"{config.volume_size}^3")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    device = torch.device("cpu")
    real_all = torch.from_numpy(data).to(device)

    generator = Generator(config.volume_size, config.channel_scale,
                          config.latent_dim).to(device)
    discriminator = Discriminator(config.volume_size, config.channel_scale).to(device)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.lr_generator,
                             betas=config.adam_betas)
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=config.lr_discriminator,
                             betas=config.adam_betas)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    history: list[dict] = []

    def sample_real():
        idx = rng.integers(0, real_all.shape[0], size=config.batch_size)
        return real_all[torch.from_numpy(idx)]

    generator.train()
    discriminator.train()
    for iteration in range(1, config.iterations + 1):
        losses = None
        for _ in range(config.n_critic):
            real = sample_real()
            z = torch.randn(config.batch_size, config.latent_dim, device=device)
            losses = wgan_gp_losses(real, z, generator, discriminator,
                                    config.lambda_gp)
            opt_d.zero_grad(set_to_none=True)
            losses["loss_d"].backward()
            opt_d.step()

        z = torch.randn(config.batch_size, config.latent_dim, device=device)
        loss_g = -discriminator(generator(z)).mean()
        if not torch.isfinite(loss_g):
            raise DivergedTrainingError(f"generator loss non-finite at {iteration}")
        opt_g.zero_grad(set_to_none=True)
        loss_g.backward()
        opt_g.step()

        with torch.no_grad():
            fake = generator(torch.randn(config.batch_size, config.latent_dim,
                                         device=device))
        norms = interpolate_gradient_norms(sample_real(), fake, discriminator,
                                           create_graph=False)
        history.append({
            "iteration": iteration,
            "loss_d": float(losses["loss_d"].detach()),
            "loss_g": float(loss_g.detach()),
            "wasserstein_estimate": float(losses["wasserstein"].detach()),
            "mean_grad_norm": float(norms.detach().mean()),
        })
        if config.checkpoint_every and iteration % config.checkpoint_every == 0:
            export_generator(generator, out_dir / f"checkpoint_{iteration:06d}.wb1",
                             {"iteration": iteration, "seed": config.seed})
            generator.train()

    bundle_path = out_dir / "generator.wb1"
    export_generator(generator, bundle_path, {
        "iteration": config.iterations,
        "seed": config.seed,
        "adam_betas": list(config.adam_betas),
        "lambda_gp": config.lambda_gp,
        "n_critic": config.n_critic,
    })

    curve_path = out_dir / "training_curve.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["iteration", "loss_d", "loss_g",
                                                "wasserstein_estimate",
                                                "mean_grad_norm"])
        writer.writeheader()
        writer.writerows(history)
    return TrainingResult(bundle_path, curve_path, history)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dataset_dir")
    parser.add_argument("--out-dir", default="runs")
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--volume-size", type=int, default=32)
    parser.add_argument("--channel-scale", type=int, default=4)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--checkpoint-every", type=int, default=0)
    args = parser.parse_args(argv)
    config = TrainerConfig(volume_size=args.volume_size,
                           channel_scale=args.channel_scale,
                           batch_size=args.batch_size,
                           iterations=args.iterations,
                           seed=args.seed,
                           checkpoint_every=args.checkpoint_every,
                           out_dir=args.out_dir)
    try:
        result = train(args.dataset_dir, config)
    except (DatasetEmptyError, DivergedTrainingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    last = result.history[-1]
    print(f"done: {result.bundle_path} (wasserstein {last['wasserstein_estimate']:.4f},"
          f" grad norm {last['mean_grad_norm']:.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
