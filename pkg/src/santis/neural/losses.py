"""Pixel, cyclic data-fidelity and adversarial losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from santis.encoding.operators import EncodingContext, undersample_image


class _UndersampleFn(torch.autograd.Function):
    """``Phi_u`` applied per sample with that sample's own context.

    ``Phi_u`` is Hermitian, so the backward pass applies the same operator.
    """

    @staticmethod
    def forward(ctx, x, contexts):
        ctx.contexts = contexts
        return _apply(x, contexts)

    @staticmethod
    def backward(ctx, grad):
        return _apply(grad, ctx.contexts), None


def _apply(x, contexts):
    a = x.detach().cpu().double().numpy()
    z = a[:, 0] + 1j * a[:, 1]
    out = np.stack([undersample_image(c, zi) for c, zi in zip(contexts, z)])
    return torch.from_numpy(np.stack([out.real, out.imag], axis=1)).to(x.dtype)


def undersample_batch(x: torch.Tensor, contexts: list[EncodingContext]) -> torch.Tensor:
    """Differentiable ``Phi_u`` for a ``(batch, 2, h, w)`` tensor."""
    return _UndersampleFn.apply(x, list(contexts))


@dataclass
class Batch:
    x: torch.Tensor          # fully sampled references
    x_u: torch.Tensor        # aliased inputs
    contexts: list           # one EncodingContext per sample
    pattern_ids: list


@dataclass
class Losses:
    loss1: torch.Tensor
    loss2: torch.Tensor
    gan_g: torch.Tensor
    gan_d: torch.Tensor
    generator: torch.Tensor


def discriminator_loss(discriminator, real, fake):
    """Cross-entropy pushing ``D(real) -> 1`` and ``D(fake) -> 0``; ``fake`` is detached."""
    real_logits = discriminator(real)
    fake_logits = discriminator(fake.detach())
    return 0.5 * (
        F.binary_cross_entropy_with_logits(real_logits, torch.ones_like(real_logits))
        + F.binary_cross_entropy_with_logits(fake_logits, torch.zeros_like(fake_logits))
    )


def generator_losses(discriminator, batch: Batch, recon, lambda_loss1=10.0, lambda_loss2=10.0, lambda_gan=0.1):
    """``(loss1, loss2, gan_g, total)`` for a reconstruction ``recon = F(x_u)``."""
    loss1 = (recon - batch.x).abs().mean()
    loss2 = (undersample_batch(recon, batch.contexts) - batch.x_u).abs().mean()
    total = lambda_loss1 * loss1 + lambda_loss2 * loss2
    if discriminator is not None and lambda_gan > 0:
        logits = discriminator(recon)
        gan_g = F.binary_cross_entropy_with_logits(logits, torch.ones_like(logits))
        total = total + lambda_gan * gan_g
    else:
        gan_g = recon.new_zeros(())
    return loss1, loss2, gan_g, total


def compute_losses(generator, discriminator, batch: Batch, lambda_loss1=10.0, lambda_loss2=10.0,
                   lambda_gan=0.1) -> Losses:
    """All four loss terms for one batch.

    ``loss1`` is the mean absolute error to the reference, ``loss2`` the mean
    absolute error between the re-undersampled reconstruction and the input.
    The generator's adversarial term is the non-saturating ``-log D(F(x_u))``.
    """
    recon = generator(batch.x_u)
    loss1, loss2, gan_g, total = generator_losses(discriminator, batch, recon, lambda_loss1, lambda_loss2, lambda_gan)
    if discriminator is not None:
        gan_d = discriminator_loss(discriminator, batch.x, recon)
    else:
        gan_d = recon.new_zeros(())
    return Losses(loss1, loss2, gan_g, gan_d, total)
