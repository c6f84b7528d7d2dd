"""Dual-path multi-scale deraining transformer on a self-contained
numpy autodiff core: model, losses, metrics, synthetic data, training
loop, and CLI."""

from . import tensor
from .blocks import GDFN, MDTA, TransformerBlock
from .data import ImagePair, RainParams, load_pairs, make_clean_fixtures, synthesize_rain
from .image_ops import (
    PatchGrid,
    Pyramid,
    build_pyramid,
    gaussian_downsample,
    laplacian,
    merge_patches,
    rgb_to_y,
    split_patches,
    upsample_bilinear,
)
from .losses import (
    LossWeights,
    SupervisionSet,
    build_supervision,
    charbonnier,
    edge_loss,
    fft_loss,
    total_loss,
    total_loss_terms,
)
from .metrics import psnr_y, ssim_y
from .model import (
    DPMformer,
    ModelConfig,
    ModelOutput,
    derain_image,
    load_checkpoint,
    load_parameters,
    model_from_checkpoint,
    save_checkpoint,
)
from .tensor import Parameter, Tensor, backward, no_grad
from .trainer import OptimizerState, TrainConfig, adam_step, cosine_lr, evaluate, train
from .unet import UNet, UNetConfig, parameter_count

__version__ = "0.1.0"

__all__ = [
    "DPMformer",
    "GDFN",
    "ImagePair",
    "LossWeights",
    "MDTA",
    "ModelConfig",
    "ModelOutput",
    "OptimizerState",
    "Parameter",
    "PatchGrid",
    "Pyramid",
    "RainParams",
    "SupervisionSet",
    "Tensor",
    "TrainConfig",
    "TransformerBlock",
    "UNet",
    "UNetConfig",
    "adam_step",
    "backward",
    "build_pyramid",
    "build_supervision",
    "charbonnier",
    "cosine_lr",
    "derain_image",
    "edge_loss",
    "evaluate",
    "fft_loss",
    "gaussian_downsample",
    "laplacian",
    "load_checkpoint",
    "load_pairs",
    "load_parameters",
    "make_clean_fixtures",
    "merge_patches",
    "model_from_checkpoint",
    "no_grad",
    "parameter_count",
    "psnr_y",
    "rgb_to_y",
    "save_checkpoint",
    "split_patches",
    "ssim_y",
    "synthesize_rain",
    "tensor",
    "total_loss",
    "total_loss_terms",
    "train",
    "upsample_bilinear",
]
