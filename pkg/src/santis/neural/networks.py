"""Residual U-Net generator and patch discriminator.

Images enter the networks as two real channels (real, imaginary), shape
``(batch, 2, h, w)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn

from santis.errors import ValidationError


@dataclass(frozen=True)
class GeneratorArch:
    n_levels: int = 3
    base_channels: int = 32
    residual: bool = True


@dataclass(frozen=True)
class DiscriminatorArch:
    n_layers: int = 3
    base_channels: int = 32


# full-depth preset for 256x256 data; too slow for CPU training
FULL_DEPTH_GENERATOR = GeneratorArch(n_levels=8, base_channels=64)


def _conv_bn_relu(cin, cout, stride=1):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=False),
    )


class GeneratorNet(nn.Module):
    """Encoder-decoder with concatenation skips; output ``x_u + net(x_u)``.

    Convolutions feeding a batch norm carry no bias (the norm's shift replaces it).

    Level ``l`` runs at resolution ``grid / 2**l`` with ``base * 2**l`` channels.
    Downsampling is a stride-2 3x3 convolution, upsampling a stride-2 3x3
    transposed convolution. The final 1x1 projection starts at zero, so a
    freshly initialized generator is the identity map.
    """

    def __init__(self, arch: GeneratorArch = GeneratorArch()):
        super().__init__()
        if arch.n_levels < 1:
            raise ValidationError("generator needs at least one level")
        self.arch = arch
        ch = [arch.base_channels * 2**lev for lev in range(arch.n_levels)]
        self.inc = _conv_bn_relu(2, ch[0])
        self.down = nn.ModuleList(
            nn.Sequential(_conv_bn_relu(ch[lev - 1], ch[lev], stride=2), _conv_bn_relu(ch[lev], ch[lev]))
            for lev in range(1, arch.n_levels)
        )
        self.up = nn.ModuleList(
            nn.Sequential(
                nn.ConvTranspose2d(ch[lev], ch[lev - 1], 3, stride=2, padding=1, output_padding=1, bias=False),
                nn.BatchNorm2d(ch[lev - 1]),
                nn.ReLU(inplace=False),
            )
            for lev in range(1, arch.n_levels)
        )
        self.merge = nn.ModuleList(_conv_bn_relu(2 * ch[lev - 1], ch[lev - 1]) for lev in range(1, arch.n_levels))
        self.out = nn.Conv2d(ch[0], 2, 1)

    @property
    def factor(self) -> int:
        return 2 ** (self.arch.n_levels - 1)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != 2:
            raise ValidationError(f"generator input must be (batch, 2, h, w), got {tuple(x.shape)}")
        if x.shape[-2] % self.factor or x.shape[-1] % self.factor:
            raise ValidationError(f"spatial size {tuple(x.shape[-2:])} not divisible by {self.factor}")
        skips = [self.inc(x)]
        for block in self.down:
            skips.append(block(skips[-1]))
        h = skips[-1]
        for lev in reversed(range(len(self.up))):
            h = self.up[lev](h)
            h = self.merge[lev](torch.cat([h, skips[lev]], dim=1))
        out = self.out(h)
        return x + out if self.arch.residual else out


class DiscriminatorNet(nn.Module):
    """Patch discriminator: ``n_layers`` stride-2 4x4 convolutions with leaky
    ReLU, then a 3x3 convolution to one logit per patch.

    The logit map has spatial size ``grid / 2**n_layers``.
    """

    def __init__(self, arch: DiscriminatorArch = DiscriminatorArch()):
        super().__init__()
        self.arch = arch
        layers = []
        cin = 2
        for i in range(arch.n_layers):
            cout = arch.base_channels * 2 ** min(i, 3)
            layers += [nn.Conv2d(cin, cout, 4, stride=2, padding=1), nn.LeakyReLU(0.2)]
            cin = cout
        layers.append(nn.Conv2d(cin, 1, 3, stride=1, padding=1))
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != 2:
            raise ValidationError(f"discriminator input must be (batch, 2, h, w), got {tuple(x.shape)}")
        f = 2**self.arch.n_layers
        if x.shape[-2] % f or x.shape[-1] % f:
            raise ValidationError(f"spatial size {tuple(x.shape[-2:])} not divisible by {f}")
        return self.body(x)


def init_weights(net: nn.Module, generator: torch.Generator):
    """He-normal convolution weights, zero biases, unit BN scales.

    A generator's output projection is zeroed afterwards (identity start).
    """
    for m in net.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            fan_in = m.weight.shape[1] * m.weight.shape[2] * m.weight.shape[3]
            if isinstance(m, nn.ConvTranspose2d):
                fan_in = m.weight.shape[0] * m.weight.shape[2] * m.weight.shape[3] // 4
            std = float(np.sqrt(2.0 / fan_in))
            with torch.no_grad():
                m.weight.copy_(torch.randn(m.weight.shape, generator=generator, dtype=m.weight.dtype) * std)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)
    if isinstance(net, GeneratorNet):
        nn.init.zeros_(net.out.weight)
        nn.init.zeros_(net.out.bias)


def zero_parameters(net: nn.Module):
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()


def to_channels(x: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    """Complex ``(..., h, w)`` array to a ``(batch, 2, h, w)`` real tensor."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    return torch.from_numpy(np.stack([x.real, x.imag], axis=1)).to(dtype)


def to_complex(t: torch.Tensor) -> np.ndarray:
    a = t.detach().cpu().double().numpy()
    return a[:, 0] + 1j * a[:, 1]


def arch_dict(arch) -> dict:
    return asdict(arch)
