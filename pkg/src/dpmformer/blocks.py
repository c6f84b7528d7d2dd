"""Transformer building blocks: transposed channel attention (MDTA) and
the gated-dconv feed-forward network (GDFN), composed pre-norm with
residual connections.

Attention is computed across channels: the map is (C/heads)^2 per head,
never (H*W)^2, so cost in the softmax dimension is independent of the
spatial extent.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .nn import ChannelLayerNorm, Conv2d, Module
from .tensor import Parameter, Tensor


class MDTA(Module):
    def __init__(
        self,
        channels: int,
        heads: int,
        rng: Optional[np.random.Generator] = None,
        qk_l2_normalize: bool = True,
        dtype=np.float32,
    ):
        super().__init__()
        if channels % heads:
            raise ConfigError(f"channels {channels} not divisible by heads {heads}")
        self.heads = heads
        self.qk_l2_normalize = qk_l2_normalize
        self.qkv = Conv2d(channels, channels * 3, 1, rng=rng, dtype=dtype)
        self.qkv_dw = Conv2d(channels * 3, channels * 3, 3, groups=channels * 3, rng=rng, dtype=dtype)
        # per-head temperature, initialized to 1
        self.alpha = Parameter(np.ones((heads, 1, 1), dtype=dtype))
        self.project = Conv2d(channels, channels, 1, rng=rng, dtype=dtype)

    def _attention(self, x: Tensor) -> tuple[Tensor, Tensor]:
        n, c, h, w = x.shape
        ch = c // self.heads
        qkv = self.qkv_dw(self.qkv(x))
        q, k, v = T.chunk(qkv, 3, axis=1)
        q = q.reshape(n, self.heads, ch, h * w)
        k = k.reshape(n, self.heads, ch, h * w)
        v = v.reshape(n, self.heads, ch, h * w)
        if self.qk_l2_normalize:
            q = T.l2_normalize(q, axis=-1)
            k = T.l2_normalize(k, axis=-1)
        logits = T.matmul(k, q.transpose(0, 1, 3, 2)) / self.alpha
        attn = T.softmax(logits, axis=-1)
        return attn, v

    def attention_maps(self, x: Tensor) -> Tensor:
        """(N, heads, C/heads, C/heads) attention maps, for inspection."""
        attn, _ = self._attention(x)
        return attn

    def forward(self, x: Tensor) -> Tensor:
        n, c, h, w = x.shape
        attn, v = self._attention(x)
        out = T.matmul(attn, v).reshape(n, c, h, w)
        return self.project(out)


class GDFN(Module):
    def __init__(
        self,
        channels: int,
        gamma: float = 2.66,
        rng: Optional[np.random.Generator] = None,
        dtype=np.float32,
    ):
        super().__init__()
        hidden = int(round(gamma * channels))
        self.expand = Conv2d(channels, hidden * 2, 1, rng=rng, dtype=dtype)
        self.dw = Conv2d(hidden * 2, hidden * 2, 3, groups=hidden * 2, rng=rng, dtype=dtype)
        self.project = Conv2d(hidden, channels, 1, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        gate, value = T.chunk(self.dw(self.expand(x)), 2, axis=1)
        return self.project(T.gelu(gate) * value)


class TransformerBlock(Module):
    def __init__(
        self,
        channels: int,
        heads: int,
        gdfn_gamma: float = 2.66,
        rng: Optional[np.random.Generator] = None,
        qk_l2_normalize: bool = True,
        dtype=np.float32,
    ):
        super().__init__()
        self.norm1 = ChannelLayerNorm(channels, dtype=dtype)
        self.mdta = MDTA(channels, heads, rng=rng, qk_l2_normalize=qk_l2_normalize, dtype=dtype)
        self.norm2 = ChannelLayerNorm(channels, dtype=dtype)
        self.gdfn = GDFN(channels, gamma=gdfn_gamma, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        x = x + self.mdta(self.norm1(x))
        return x + self.gdfn(self.norm2(x))
