"""Wasserstein-GP losses and, for reference, the original minimax losses.

The training objective is the Wasserstein critic difference plus a gradient
penalty that pulls the critic's gradient norm at real/fake interpolates
toward 1. The binary cross-entropy formulation is kept only as a documented
reference (it destabilizes volumetric training) and is never used by the
training loop.
"""

from __future__ import annotations

import torch


class NonFiniteGradientError(Exception):
    """Interpolate gradients contained NaN or infinity."""


class NonFiniteLossError(Exception):
    """A loss term became NaN or infinity."""


def interpolate_gradient_norms(real: torch.Tensor, fake: torch.Tensor,
                               discriminator, epsilon: torch.Tensor | None = None,
                               create_graph: bool = True) -> torch.Tensor:
    """Per-sample L2 norms of the critic gradient at random interpolates
    y_hat = eps * real + (1 - eps) * fake, eps ~ U(0,1) per sample.

    ``create_graph=False`` skips the second-order graph when the norms are
    only monitored, not optimized through.
    """
    if real.shape != fake.shape:
        raise ValueError(f"batch shapes differ: {real.shape} vs {fake.shape}")
    if epsilon is None:
        epsilon = torch.rand(real.shape[0], *([1] * (real.dim() - 1)),
                             dtype=real.dtype, device=real.device)
    mixed = (epsilon * real + (1.0 - epsilon) * fake).detach().requires_grad_(True)
    scores = discriminator(mixed)
    grads = torch.autograd.grad(scores.sum(), mixed, create_graph=create_graph)[0]
    if not torch.isfinite(grads).all():
        raise NonFiniteGradientError("non-finite critic gradient at interpolates")
    return grads.flatten(1).norm(2, dim=1)


def gradient_penalty(real: torch.Tensor, fake: torch.Tensor, discriminator,
                     epsilon: torch.Tensor | None = None) -> torch.Tensor:
    """Mean squared deviation of the interpolate gradient norm from 1."""
    norms = interpolate_gradient_norms(real, fake, discriminator, epsilon)
    return ((norms - 1.0) ** 2).mean()


def wgan_gp_losses(real: torch.Tensor, z: torch.Tensor, generator,
                   discriminator, lambda_gp: float = 10.0) -> dict:
    """Critic and generator losses plus the Wasserstein distance estimate.

    Returns {loss_d, loss_g, wasserstein, penalty}; loss_g is computed on
    the same fake batch (caller re-generates for the actual G step).
    """
    fake = generator(z)
    score_real = discriminator(real).mean()
    score_fake = discriminator(fake).mean()
    penalty = gradient_penalty(real, fake.detach(), discriminator)
    loss_d = score_fake - score_real + lambda_gp * penalty
    loss_g = -score_fake
    wasserstein = score_real - score_fake
    for name, value in (("loss_d", loss_d), ("loss_g", loss_g)):
        if not torch.isfinite(value):
            raise NonFiniteLossError(f"{name} is non-finite")
    return {"loss_d": loss_d, "loss_g": loss_g, "wasserstein": wasserstein,
            "penalty": penalty}


def reference_bce_losses(real: torch.Tensor, z: torch.Tensor, generator,
                         discriminator) -> dict:
    """Original minimax losses with a sigmoid critic head. Reference only;
    not used in training."""
    fake = generator(z)
    eps = 1e-7
    p_real = torch.sigmoid(discriminator(real)).clamp(eps, 1 - eps)
    p_fake = torch.sigmoid(discriminator(fake)).clamp(eps, 1 - eps)
    loss_d = -(torch.log(p_real).mean() + torch.log(1 - p_fake).mean())
    loss_g = -torch.log(p_fake).mean()
    return {"loss_d": loss_d, "loss_g": loss_g}
