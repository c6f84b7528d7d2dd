"""Symmetric 3-level transformer U-Net.

Downsampling is 3x3 conv (halving channels) + pixel-unshuffle, so each
descent doubles width and halves resolution; upsampling is the mirror
image. Skip connections concatenate encoder features and a 1x1 conv
re-narrows the channel count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tensor as T
from .blocks import TransformerBlock
from .errors import ConfigError, ShapeError
from .nn import Conv2d, Module, ModuleList
from .tensor import Tensor


@dataclass(frozen=True)
class UNetConfig:
    base_channels: int = 48
    blocks_per_level: tuple[int, int, int] = (2, 2, 2)
    heads_per_level: tuple[int, int, int] = (1, 2, 4)
    gdfn_gamma: float = 2.66
    # width of the final decoder stage: "C" (concat-halving all the way
    # down) or "2C" (skip the last halving)
    final_width: str = "C"
    qk_l2_normalize: bool = True

    def validate(self) -> list[str]:
        problems = []
        c = self.base_channels
        if c < 2 or c % 2:
            problems.append(f"base_channels must be even and >= 2, got {c}")
        if len(self.blocks_per_level) != 3 or any(b < 1 for b in self.blocks_per_level):
            problems.append(f"blocks_per_level must be three counts >= 1, got {self.blocks_per_level}")
        if len(self.heads_per_level) != 3:
            problems.append(f"heads_per_level must have three entries, got {self.heads_per_level}")
        else:
            for lvl, heads in enumerate(self.heads_per_level):
                width = (2**lvl) * c
                if heads < 1 or width % heads:
                    problems.append(
                        f"level {lvl + 1} width {width} not divisible by heads {heads}"
                    )
        if self.gdfn_gamma <= 0:
            problems.append(f"gdfn_gamma must be positive, got {self.gdfn_gamma}")
        if self.final_width not in ("C", "2C"):
            problems.append(f"final_width must be 'C' or '2C', got {self.final_width!r}")
        return problems

    @property
    def out_channels(self) -> int:
        return self.base_channels * (2 if self.final_width == "2C" else 1)


class Downsample(Module):
    """3x3 conv c -> c/2, then pixel-unshuffle: (N,c,H,W) -> (N,2c,H/2,W/2)."""

    def __init__(self, channels, rng=None, dtype=np.float32):
        super().__init__()
        if channels % 2:
            raise ConfigError(f"downsample needs even channels, got {channels}")
        self.conv = Conv2d(channels, channels // 2, 3, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return T.pixel_unshuffle(self.conv(x), 2)


class Upsample(Module):
    """3x3 conv c -> 2c, then pixel-shuffle: (N,c,h,w) -> (N,c/2,2h,2w)."""

    def __init__(self, channels, rng=None, dtype=np.float32):
        super().__init__()
        if channels % 2:
            raise ConfigError(f"upsample needs even channels, got {channels}")
        self.conv = Conv2d(channels, channels * 2, 3, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return T.pixel_shuffle(self.conv(x), 2)


def _stack(channels, count, heads, cfg: UNetConfig, rng, dtype) -> ModuleList:
    return ModuleList(
        TransformerBlock(
            channels,
            heads,
            gdfn_gamma=cfg.gdfn_gamma,
            rng=rng,
            qk_l2_normalize=cfg.qk_l2_normalize,
            dtype=dtype,
        )
        for _ in range(count)
    )


class UNet(Module):
    """Encoder (C, 2C), bottleneck (4C at H/4), decoder (2C, C or 2C)."""

    def __init__(self, cfg: UNetConfig, rng: Optional[np.random.Generator] = None, dtype=np.float32):
        super().__init__()
        problems = cfg.validate()
        if problems:
            raise ConfigError(problems)
        rng = rng if rng is not None else np.random.default_rng(0)
        c = cfg.base_channels
        blocks, heads = cfg.blocks_per_level, cfg.heads_per_level
        self.cfg = cfg
        self.enc1 = _stack(c, blocks[0], heads[0], cfg, rng, dtype)
        self.down1 = Downsample(c, rng, dtype)
        self.enc2 = _stack(2 * c, blocks[1], heads[1], cfg, rng, dtype)
        self.down2 = Downsample(2 * c, rng, dtype)
        self.bottleneck = _stack(4 * c, blocks[2], heads[2], cfg, rng, dtype)
        self.up2 = Upsample(4 * c, rng, dtype)
        self.fuse2 = Conv2d(4 * c, 2 * c, 1, rng=rng, dtype=dtype)
        self.dec2 = _stack(2 * c, blocks[1], heads[1], cfg, rng, dtype)
        self.up1 = Upsample(2 * c, rng, dtype)
        self.fuse1 = Conv2d(2 * c, cfg.out_channels, 1, rng=rng, dtype=dtype)
        self.dec1 = _stack(cfg.out_channels, blocks[0], heads[0], cfg, rng, dtype)

    @property
    def out_channels(self) -> int:
        return self.cfg.out_channels

    def forward(self, x: Tensor, trace: Optional[list] = None) -> Tensor:
        n, c, h, w = x.shape
        if c != self.cfg.base_channels:
            raise ShapeError(f"expected {self.cfg.base_channels} channels, got {c}")
        if h % 4 or w % 4:
            raise ShapeError(f"spatial extents {h}x{w} must be divisible by 4")

        def run(stack, t):
            for block in stack:
                t = block(t)
            return t

        e1 = run(self.enc1, x)
        e2 = run(self.enc2, self.down1(e1))
        e3 = run(self.bottleneck, self.down2(e2))
        d2 = run(self.dec2, self.fuse2(T.concat([self.up2(e3), e2], axis=1)))
        d1 = run(self.dec1, self.fuse1(T.concat([self.up1(d2), e1], axis=1)))
        if trace is not None:
            trace.extend([e1, e2, e3, d2, d1])
        return d1


def parameter_count(module: Module) -> int:
    """Total scalar count over unique parameters."""
    return module.num_parameters()
