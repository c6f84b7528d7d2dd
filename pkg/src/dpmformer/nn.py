"""Minimal parameter-container layer on top of the tensor core.

Modules register Parameters and sub-modules in attribute order, which
makes parameter iteration (and therefore checkpoints and the optimizer
trajectory) deterministic.
"""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .tensor import Parameter, Tensor


def trunc_normal(shape, std: float, rng: np.random.Generator, dtype=np.float32):
    """Two-sided truncated normal at +/-2 sigma, via rejection resampling."""
    x = rng.standard_normal(shape)
    bad = np.abs(x) > 2.0
    while bad.any():
        x[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(x) > 2.0
    return (x * std).astype(dtype)


class Module:
    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._params[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        seen: set[int] = set()
        yield from self._named_parameters(prefix, seen)

    def _named_parameters(self, prefix, seen):
        for key, p in self._params.items():
            if id(p) in seen:
                continue
            seen.add(id(p))
            name = f"{prefix}.{key}" if prefix else key
            p.name = name
            yield name, p
        for key, m in self._modules.items():
            sub = f"{prefix}.{key}" if prefix else key
            yield from m._named_parameters(sub, seen)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def to_dtype(self, dtype) -> "Module":
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self


class ModuleList(Module):
    def __init__(self, modules):
        super().__init__()
        self._items = []
        for i, m in enumerate(modules):
            setattr(self, str(i), m)
            self._items.append(m)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Conv2d(Module):
    """Square-kernel conv, same-padding by default, bias-free by default."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: Optional[int] = None,
        groups: int = 1,
        bias: bool = False,
        rng: Optional[np.random.Generator] = None,
        dtype=np.float32,
    ):
        super().__init__()
        if in_channels % groups:
            raise ShapeError(f"in_channels {in_channels} not divisible by groups {groups}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding
        self.groups = groups
        self.weight = Parameter(
            trunc_normal((out_channels, in_channels // groups, kernel_size, kernel_size), 0.02, rng, dtype)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(
            x, self.weight, self.bias, stride=self.stride, padding=self.padding, groups=self.groups
        )


class ChannelLayerNorm(Module):
    """Bias-free channel layer norm with a learnable per-channel scale."""

    def __init__(self, channels: int, dtype=np.float32):
        super().__init__()
        self.gamma = Parameter(np.ones(channels, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        return T.layer_norm_channel(x, self.gamma)
