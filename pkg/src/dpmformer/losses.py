"""Composite training objective: Charbonnier + Laplacian edge loss +
frequency-domain L1, applied over a deep-supervision set (backbone,
patch-level, and pyramid-level outputs against matching targets)."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import tensor as T
from .errors import ConfigError, ShapeError
from .image_ops import gaussian_downsample, laplacian, split_patches
from .tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 0.05
    lambda3: float = 0.01
    epsilon: float = 1e-3

    def validate(self) -> list[str]:
        problems = []
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            problems.append("loss weights must be non-negative")
        if self.epsilon <= 0:
            problems.append(f"epsilon must be positive, got {self.epsilon}")
        return problems


@dataclass
class SupervisionSet:
    """(prediction, target, weight) triples; shapes must match per pair."""

    pairs: list[tuple[Tensor, Tensor, float]] = field(default_factory=list)

    def __post_init__(self):
        for i, (pred, target, _) in enumerate(self.pairs):
            if pred.shape != target.shape:
                raise ShapeError(
                    f"supervision pair {i}: prediction {pred.shape} vs target {target.shape}"
                )


def charbonnier(pred: Tensor, target: Tensor, eps: float = 1e-3) -> Tensor:
    """mean(sqrt((pred - target)^2 + eps^2)): smooth L1, floor eps."""
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred - target
    return T.tmean(T.sqrt(d * d + eps * eps))


def edge_loss(pred: Tensor, target: Tensor, eps: float = 1e-3) -> Tensor:
    """Charbonnier distance between Laplacian edge maps."""
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return charbonnier(laplacian(target), laplacian(pred), eps)


def fft_loss(sup: SupervisionSet) -> Tensor:
    """Per pair: L1 over real+imag DFT parts, normalized by the number
    of spectrum scalars (2*N*C*H*W), weighted, summed over pairs."""
    total = None
    for pred, target, weight in sup.pairs:
        re_p, im_p = T.dft2(pred)
        re_t, im_t = T.dft2(target)
        l1 = T.tsum(T.absolute(re_p - re_t)) + T.tsum(T.absolute(im_p - im_t))
        term = l1 * (weight / (2.0 * pred.size))
        total = term if total is None else total + term
    if total is None:
        raise ShapeError("fft_loss needs at least one supervised pair")
    return total


def total_loss_terms(
    sup: SupervisionSet, w: LossWeights
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """(total, charbonnier, edge, fft) scalars; terms are pre-weighting."""
    char = edge = None
    for pred, target, weight in sup.pairs:
        c = charbonnier(pred, target, w.epsilon) * weight
        e = edge_loss(pred, target, w.epsilon) * weight
        char = c if char is None else char + c
        edge = e if edge is None else edge + e
    if char is None:
        raise ShapeError("total_loss needs at least one supervised pair")
    fft = fft_loss(sup)
    total = char * w.lambda1 + edge * w.lambda2 + fft * w.lambda3
    return total, char, edge, fft


def total_loss(sup: SupervisionSet, w: LossWeights) -> Tensor:
    return total_loss_terms(sup, w)[0]


def build_supervision(output, clean: Tensor, branch_weight: float = 1.0) -> SupervisionSet:
    """Deep-supervision set for a ModelOutput against the clean target.

    Backbone output carries weight 1; branch outputs carry
    ``branch_weight``; reduced-scale targets are Gaussian-downsampled
    ground truth.
    """
    if branch_weight < 0:
        raise ConfigError(f"branch_weight must be non-negative, got {branch_weight}")
    pairs = [(output.derained, clean, 1.0)]
    if output.mp_level2_out is not None:
        pairs.append((output.mp_level2_out, clean, branch_weight))
        grid = output.mp_level3_out
        gt = split_patches(clean, grid.rows, grid.cols)
        for pred, target in zip(grid.patches, gt.patches):
            pairs.append((pred, target, branch_weight))
    if output.c2f_half_out is not None:
        half_gt = gaussian_downsample(clean)
        quarter_gt = gaussian_downsample(half_gt)
        pairs.append((output.c2f_half_out, half_gt, branch_weight))
        pairs.append((output.c2f_quarter_out, quarter_gt, branch_weight))
    return SupervisionSet(pairs)
