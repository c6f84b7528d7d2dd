"""DPMformer assembly: full-resolution backbone fused with a
multi-patch branch (2- and 4-patch hierarchy) and a coarse-to-fine
Gaussian-pyramid branch, all sharing the transformer U-Net design.

Branch outputs are images; they are summed onto the rainy input before
the backbone embedding, and the final output is a global residual:
derained = rainy + R.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import tensor as T
from .errors import CheckpointError, ConfigError, ShapeError
from .image_ops import PatchGrid, build_pyramid, split_patches, upsample_bilinear
from .nn import Conv2d, Module, ModuleList
from .serial import from_plain, to_plain
from .tensor import Tensor, no_grad
from .unet import UNet, UNetConfig

CHECKPOINT_MAGIC = b"DPMF"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    unet: UNetConfig = UNetConfig()
    # branch sub-networks default to the backbone width; set this to go narrower
    branch_unet: Optional[UNetConfig] = None
    enable_multipatch: bool = True
    enable_coarse2fine: bool = True
    patch_axis: str = "height"
    share_level_weights: bool = True

    @property
    def branch(self) -> UNetConfig:
        return self.branch_unet if self.branch_unet is not None else self.unet

    def validate(self) -> list[str]:
        problems = list(self.unet.validate())
        if self.branch_unet is not None:
            problems += self.branch_unet.validate()
        if self.patch_axis not in ("height", "width"):
            problems.append(f"patch_axis must be 'height' or 'width', got {self.patch_axis!r}")
        return problems

    @classmethod
    def slim(cls, **overrides) -> "ModelConfig":
        """Desk-scale preset: C=16, one block per level."""
        base = UNetConfig(base_channels=16, blocks_per_level=(1, 1, 1))
        return cls(unet=base, **overrides)


@dataclass
class ModelOutput:
    derained: Tensor
    mp_level2_out: Optional[Tensor] = None
    mp_level3_out: Optional[PatchGrid] = None
    c2f_half_out: Optional[Tensor] = None
    c2f_quarter_out: Optional[Tensor] = None


def _branch_unets(cfg: UNetConfig, count: int, shared: bool, rng, dtype):
    if shared:
        return UNet(cfg, rng, dtype)
    return ModuleList(UNet(cfg, rng, dtype) for _ in range(count))


def _run_unet(unet_or_list, inputs: list[Tensor]) -> list[Tensor]:
    """Run patches through a shared UNet (batched along N) or through
    per-patch UNets (looped)."""
    if isinstance(unet_or_list, UNet):
        batched = T.concat(inputs, axis=0)
        return T.chunk(unet_or_list(batched), len(inputs), axis=0)
    return [u(x) for u, x in zip(unet_or_list, inputs)]


class DPMformer(Module):
    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32):
        super().__init__()
        problems = cfg.validate()
        if problems:
            raise ConfigError(problems)
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        c = cfg.unet.base_channels
        cb = cfg.branch.base_channels

        self.embed = Conv2d(3, c, 3, rng=rng, dtype=dtype)
        self.backbone = UNet(cfg.unet, rng, dtype)
        self.output = Conv2d(self.backbone.out_channels, 3, 3, rng=rng, dtype=dtype)

        if cfg.enable_multipatch:
            bout = cfg.branch.out_channels
            self.mp3_embed = Conv2d(3, cb, 3, rng=rng, dtype=dtype)
            self.mp3_unet = _branch_unets(cfg.branch, 4, cfg.share_level_weights, rng, dtype)
            self.mp3_out = Conv2d(bout, 3, 3, rng=rng, dtype=dtype)
            self.mp2_embed = Conv2d(3, cb, 3, rng=rng, dtype=dtype)
            self.mp2_fuse = Conv2d(cb + bout, cb, 1, rng=rng, dtype=dtype)
            self.mp2_unet = _branch_unets(cfg.branch, 2, cfg.share_level_weights, rng, dtype)
            self.mp2_out = Conv2d(bout, 3, 3, rng=rng, dtype=dtype)

        if cfg.enable_coarse2fine:
            bout = cfg.branch.out_channels
            self.c2f_q_embed = Conv2d(3, cb, 3, rng=rng, dtype=dtype)
            self.c2f_q_unet = UNet(cfg.branch, rng, dtype)
            self.c2f_q_out = Conv2d(bout, 3, 3, rng=rng, dtype=dtype)
            self.c2f_h_embed = Conv2d(3, cb, 3, rng=rng, dtype=dtype)
            self.c2f_h_unet = UNet(cfg.branch, rng, dtype)
            self.c2f_h_out = Conv2d(bout, 3, 3, rng=rng, dtype=dtype)

    # -- multi-patch branch ---------------------------------------------
    def multipatch_forward(self, t1: Tensor) -> tuple[Tensor, PatchGrid, Tensor]:
        n, c, h, w = t1.shape
        if h % 8 or w % 8:
            raise ShapeError(f"multi-patch path needs extents divisible by 8, got {h}x{w}")

        grid = split_patches(t1, 2, 2)  # row-major: tl, tr, bl, br
        w3 = _run_unet(self.mp3_unet, [self.mp3_embed(p) for p in grid.patches])

        if self.cfg.patch_axis == "height":
            # level 2 = top/bottom halves; width-adjacent level-3 pairs
            pair_idx, pair_axis = [(0, 1), (2, 3)], 3
            t2 = split_patches(t1, 2, 1).patches
            merge_axis = 2
        else:
            pair_idx, pair_axis = [(0, 2), (1, 3)], 2
            t2 = split_patches(t1, 1, 2).patches
            merge_axis = 3
        wstar3 = [T.concat([w3[i], w3[j]], axis=pair_axis) for i, j in pair_idx]

        h3_patches: list[Optional[Tensor]] = [None] * 4
        for (i, j), feat in zip(pair_idx, wstar3):
            img = self.mp3_out(feat)
            a, b = T.chunk(img, 2, axis=pair_axis)
            h3_patches[i] = a + grid.patches[i]
            h3_patches[j] = b + grid.patches[j]
        h3 = PatchGrid(2, 2, h3_patches)

        fused = [
            self.mp2_fuse(T.concat([self.mp2_embed(t), f], axis=1))
            for t, f in zip(t2, wstar3)
        ]
        w2 = _run_unet(self.mp2_unet, fused)
        wstar2 = T.concat(w2, axis=merge_axis)
        h2 = self.mp2_out(wstar2) + t1
        return h2, h3, wstar2

    # -- coarse-to-fine branch --------------------------------------------
    def coarse2fine_forward(self, t1: Tensor) -> tuple[Tensor, Tensor]:
        n, c, h, w = t1.shape
        if h % 16 or w % 16:
            raise ShapeError(f"coarse-to-fine path needs extents divisible by 16, got {h}x{w}")
        pyramid = build_pyramid(t1, levels=3)
        f2, f4 = pyramid.levels[1], pyramid.levels[2]
        quarter = f4 + self.c2f_q_out(self.c2f_q_unet(self.c2f_q_embed(f4)))
        refined_half_in = f2 + upsample_bilinear(quarter, 2)
        half = refined_half_in + self.c2f_h_out(self.c2f_h_unet(self.c2f_h_embed(refined_half_in)))
        return half, quarter

    # -- full model -------------------------------------------------------
    def forward(self, rainy: Tensor) -> ModelOutput:
        if rainy.ndim != 4 or rainy.shape[1] != 3:
            raise ShapeError(f"expected (N,3,H,W) input, got {rainy.shape}")
        n, _, h, w = rainy.shape
        if h % 16 or w % 16:
            raise ShapeError(f"input extents must be divisible by 16, got {h}x{w}")

        h2 = h3 = half = quarter = None
        x0 = rainy
        if self.cfg.enable_multipatch:
            h2, h3, _ = self.multipatch_forward(rainy)
            x0 = x0 + h2
        if self.cfg.enable_coarse2fine:
            half, quarter = self.coarse2fine_forward(rainy)
            x0 = x0 + upsample_bilinear(half, 2)

        t0 = self.embed(x0)
        td = self.backbone(t0)
        residual = self.output(td)
        return ModelOutput(
            derained=rainy + residual,
            mp_level2_out=h2,
            mp_level3_out=h3,
            c2f_half_out=half,
            c2f_quarter_out=quarter,
        )


def derain_image(model: DPMformer, rainy: Tensor) -> Tensor:
    """Run inference on an image of any extent >= 9: reflect-pad up to a
    multiple of 16, restore, crop back. Output is not clipped."""
    n, c, h, w = rainy.shape
    ph, pw = (-h) % 16, (-w) % 16
    if ph >= h or pw >= w:
        raise ShapeError(f"image {h}x{w} too small to pad to a multiple of 16")
    with no_grad():
        if ph or pw:
            padded = Tensor(np.pad(rainy.data, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="reflect"))
            out = model(padded).derained
            return out[:, :, :h, :w]
        return model(rainy).derained


# -- checkpoints ---------------------------------------------------------


def save_checkpoint(
    path,
    model: DPMformer,
    optimizer_state=None,
    trainer_state: Optional[dict] = None,
):
    """Flat name->(shape, raw f32 LE data) map with a JSON header.

    The header carries the ModelConfig and a format version; optimizer
    moment tensors (when present) are appended after the model tensors.
    """
    params = list(model.named_parameters())
    header = {
        "format_version": CHECKPOINT_VERSION,
        "model_config": to_plain(model.cfg),
        "params": [{"name": name, "shape": list(p.shape)} for name, p in params],
        "optimizer": None,
        "trainer": trainer_state,
    }
    blobs = [np.ascontiguousarray(p.data, dtype="<f4").tobytes() for _, p in params]
    if optimizer_state is not None:
        entries = []
        for prefix, table in (("m", optimizer_state.m), ("v", optimizer_state.v)):
            for name, _ in params:
                arr = table[name]
                entries.append({"name": f"{prefix}.{name}", "shape": list(arr.shape)})
                blobs.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        header["optimizer"] = {"step": optimizer_state.t, "entries": entries}
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


@dataclass
class Checkpoint:
    model_config: ModelConfig
    params: dict[str, np.ndarray]
    optimizer: Optional[dict]
    trainer: Optional[dict]


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format_version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported format version {header.get('format_version')}"
            )
        cfg = from_plain(ModelConfig, header["model_config"])

        def read_entries(entries):
            table = {}
            for e in entries:
                shape = tuple(e["shape"])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(4 * count)
                if len(raw) != 4 * count:
                    raise CheckpointError(f"{path}: truncated data for {e['name']}")
                table[e["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
            return table

        params = read_entries(header["params"])
        optimizer = None
        if header.get("optimizer"):
            moments = read_entries(header["optimizer"]["entries"])
            optimizer = {
                "step": header["optimizer"]["step"],
                "m": {k[2:]: v for k, v in moments.items() if k.startswith("m.")},
                "v": {k[2:]: v for k, v in moments.items() if k.startswith("v.")},
            }
    return Checkpoint(cfg, params, optimizer, header.get("trainer"))


def load_parameters(model: DPMformer, params: dict[str, np.ndarray]):
    """Copy checkpoint arrays into the model; names and shapes must
    match exactly. The first mismatch is reported by name."""
    names = set()
    for name, p in model.named_parameters():
        names.add(name)
        if name not in params:
            raise CheckpointError(f"checkpoint is missing parameter {name!r}")
        arr = params[name]
        if tuple(arr.shape) != p.shape:
            raise CheckpointError(
                f"parameter {name!r}: checkpoint shape {tuple(arr.shape)} != model shape {p.shape}"
            )
        p.data = arr.astype(p.data.dtype)
    extra = sorted(set(params) - names)
    if extra:
        raise CheckpointError(f"checkpoint has unexpected parameter {extra[0]!r}")


def model_from_checkpoint(path, dtype=np.float32) -> tuple[DPMformer, Checkpoint]:
    ckpt = load_checkpoint(path)
    model = DPMformer(ckpt.model_config, seed=0, dtype=dtype)
    load_parameters(model, ckpt.params)
    return model, ckpt
