"""Evaluation metrics: PSNR and single-scale SSIM on the luma plane.

Both metrics clip inputs to [0,1], convert to studio-swing Y (the
convention of the deraining benchmarks), and compute in float64. SSIM
uses an 11x11 Gaussian window (sigma 1.5) and averages over the valid
(unpadded) region only.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .image_ops import rgb_to_y
from .tensor import Tensor, no_grad

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


def _y_plane(image: Tensor, full_swing: bool) -> np.ndarray:
    if image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError(f"expected (N,3,H,W), got {image.shape}")
    clipped = Tensor(np.clip(image.data, 0.0, 1.0).astype(np.float64))
    with no_grad():
        return rgb_to_y(clipped, full_swing=full_swing).data[:, 0]


def psnr_y(pred: Tensor, target: Tensor, full_swing: bool = False) -> float:
    """10*log10(1/MSE) on the Y plane; +inf when the images match."""
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    mse = float(np.mean((_y_plane(pred, full_swing) - _y_plane(target, full_swing)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim_y(pred: Tensor, target: Tensor, full_swing: bool = False) -> float:
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    h, w = pred.shape[2], pred.shape[3]
    if h < _SSIM_WINDOW or w < _SSIM_WINDOW:
        raise ShapeError(f"image {h}x{w} smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window")
    x = _y_plane(pred, full_swing)
    y = _y_plane(target, full_swing)
    window = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)

    def filt(img):
        wins = sliding_window_view(img, (_SSIM_WINDOW, _SSIM_WINDOW), axis=(1, 2))
        return np.einsum("nhwkl,kl->nhw", wins, window, optimize=True)

    mu_x, mu_y = filt(x), filt(y)
    sigma_x = filt(x * x) - mu_x**2
    sigma_y = filt(y * y) - mu_y**2
    sigma_xy = filt(x * y) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + _SSIM_C1) * (2 * sigma_xy + _SSIM_C2)) / (
        (mu_x**2 + mu_y**2 + _SSIM_C1) * (sigma_x + sigma_y + _SSIM_C2)
    )
    return float(ssim_map.mean())
