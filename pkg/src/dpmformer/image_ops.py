"""Image-structured operations: Gaussian pyramid, bilinear upsampling,
Laplacian edge maps, non-overlapping patch split/merge, RGB->Y.

All operations are pure functions of immutable tensors and are
differentiable wherever a gradient is mathematically meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .tensor import Tensor

# outer product of the binomial row [1,4,6,4,1]/16: the standard
# Gaussian-pyramid kernel
_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
_GAUSS5 = np.outer(_BINOMIAL5, _BINOMIAL5)

_LAPLACIAN3 = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass
class PatchGrid:
    """Row-major non-overlapping tiling of an NCHW tensor."""

    rows: int
    cols: int
    patches: list[Tensor] = field(default_factory=list)

    def __post_init__(self):
        if len(self.patches) != self.rows * self.cols:
            raise ShapeError(
                f"expected {self.rows * self.cols} patches, got {len(self.patches)}"
            )
        shapes = {p.shape for p in self.patches}
        if len(shapes) > 1:
            raise ShapeError(f"inconsistent patch shapes: {sorted(shapes)}")


@dataclass
class Pyramid:
    """levels[k] is the image at spatial scale 1/2^k (level 0 = full)."""

    levels: list[Tensor]


def _depthwise_kernel(kernel: np.ndarray, channels: int, dtype) -> Tensor:
    k = kernel.shape[0]
    data = np.broadcast_to(kernel.astype(dtype), (channels, 1, k, k)).copy()
    return Tensor(data)


def gaussian_downsample(x: Tensor) -> Tensor:
    """Blur with the 5x5 binomial kernel (reflect padding), then take
    every second pixel starting at index 0."""
    if x.ndim != 4:
        raise ShapeError(f"expected NCHW, got {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"spatial extents {h}x{w} must be even")
    kernel = _depthwise_kernel(_GAUSS5, c, x.dtype)
    padded = T.pad_reflect2d(x, 2)
    return T.conv2d(padded, kernel, stride=2, padding=0, groups=c)


def build_pyramid(x: Tensor, levels: int = 3) -> Pyramid:
    """Gaussian pyramid: [x, down(x), down(down(x)), ...]."""
    out = [x]
    for _ in range(levels - 1):
        out.append(gaussian_downsample(out[-1]))
    return Pyramid(out)


def _interp_matrix(n_in: int, factor: int, dtype) -> np.ndarray:
    # align_corners=False: sample centers at (i + 0.5)/scale - 0.5,
    # clamped to the valid range (edge replication at the borders)
    n_out = n_in * factor
    src = (np.arange(n_out, dtype=np.float64) + 0.5) / factor - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    i0 = np.floor(src).astype(np.int64)
    frac = src - i0
    i1 = np.minimum(i0 + 1, n_in - 1)
    a = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(a, (rows, i0), 1.0 - frac)
    np.add.at(a, (rows, i1), frac)
    return a.astype(dtype)


def upsample_bilinear(x: Tensor, factor: int) -> Tensor:
    """Bilinear upsampling, align_corners=false convention."""
    if factor not in (2, 4):
        raise ShapeError(f"upsample factor must be 2 or 4, got {factor}")
    n, c, h, w = x.shape
    ah = Tensor(_interp_matrix(h, factor, x.dtype))
    awt = Tensor(_interp_matrix(w, factor, x.dtype).T.copy())
    return T.matmul(T.matmul(ah, x), awt)


def laplacian(x: Tensor) -> Tensor:
    """Per-channel 3x3 Laplacian with reflect padding."""
    if x.ndim != 4:
        raise ShapeError(f"expected NCHW, got {x.shape}")
    c = x.shape[1]
    kernel = _depthwise_kernel(_LAPLACIAN3, c, x.dtype)
    return T.conv2d(T.pad_reflect2d(x, 1), kernel, stride=1, padding=0, groups=c)


def split_patches(x: Tensor, rows: int, cols: int) -> PatchGrid:
    """Row-major non-overlapping tiling; values copied exactly."""
    n, c, h, w = x.shape
    if h % rows or w % cols:
        raise ShapeError(f"extents {h}x{w} not divisible into {rows}x{cols} patches")
    ph, pw = h // rows, w // cols
    patches = []
    for r in range(rows):
        for cc in range(cols):
            patches.append(x[:, :, r * ph : (r + 1) * ph, cc * pw : (cc + 1) * pw])
    return PatchGrid(rows=rows, cols=cols, patches=patches)


def merge_patches(grid: PatchGrid) -> Tensor:
    """Exact inverse of split_patches."""
    rows = []
    for r in range(grid.rows):
        rows.append(
            T.concat(grid.patches[r * grid.cols : (r + 1) * grid.cols], axis=3)
        )
    return T.concat(rows, axis=2)


def rgb_to_y(x: Tensor, full_swing: bool = False) -> Tensor:
    """BT.601 luma of an RGB image in [0,1].

    Default is studio swing, Y in [16/255, 235/255] (the convention
    the deraining benchmarks evaluate on); ``full_swing`` selects plain
    0.299/0.587/0.114 weights instead.
    """
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"expected (N,3,H,W), got {x.shape}")
    r, g, b = x[:, 0:1], x[:, 1:2], x[:, 2:3]
    if full_swing:
        return r * 0.299 + g * 0.587 + b * 0.114
    return (r * 65.481 + g * 128.553 + b * 24.966 + 16.0) * (1.0 / 255.0)
