"""Paired-image dataset ingestion, PNG IO, and deterministic synthetic
rain for desk-scale experiments.

Rain streaks: a seeded uniform field is thresholded to a sparse mask,
smeared along a line kernel (unit sum) at the given angle, scaled by
intensity, and added to all channels. Identical RainParams + clean
image give a bit-identical rainy image.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from scipy import ndimage

from .errors import DataError
from .tensor import Tensor


@dataclass
class ImagePair:
    rainy: Tensor
    clean: Tensor
    id: str

    def validate(self):
        if self.rainy.shape != self.clean.shape:
            raise DataError(
                f"pair {self.id!r}: rainy {self.rainy.shape} vs clean {self.clean.shape}"
            )
        for name, t in (("rainy", self.rainy), ("clean", self.clean)):
            if t.data.min() < -1e-6 or t.data.max() > 1 + 1e-6:
                raise DataError(f"pair {self.id!r}: {name} values outside [0,1]")


@dataclass(frozen=True)
class RainParams:
    seed: int = 0
    streak_density: float = 0.05
    streak_length: int = 9
    angle_deg: float = 10.0
    intensity: float = 0.5

    def validate(self) -> list[str]:
        problems = []
        if not 0 < self.streak_density < 1:
            problems.append(f"streak_density must be in (0,1), got {self.streak_density}")
        if self.streak_length < 1:
            problems.append(f"streak_length must be >= 1, got {self.streak_length}")
        if not 0 < self.intensity <= 1:
            problems.append(f"intensity must be in (0,1], got {self.intensity}")
        return problems


def _line_kernel(length: int, angle_deg: float) -> np.ndarray:
    """Unit-sum line kernel; angle is measured from vertical (falling rain)."""
    size = length if length % 2 else length + 1
    kernel = np.zeros((size, size), dtype=np.float64)
    center = size // 2
    theta = math.radians(angle_deg)
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, length):
        r = int(round(center + t * math.cos(theta)))
        c = int(round(center + t * math.sin(theta)))
        kernel[r, c] = 1.0
    return kernel / kernel.sum()


def synthesize_rain(clean: Tensor, params: RainParams, pair_id: str = "") -> ImagePair:
    """Additive streak layer: rainy = clip(clean + streaks)."""
    if clean.ndim != 4 or clean.shape[1] != 3:
        raise DataError(f"expected (1,3,H,W) clean image, got {clean.shape}")
    if clean.data.min() < 0 or clean.data.max() > 1:
        raise DataError("clean image must lie in [0,1]")
    _, _, h, w = clean.shape
    rng = np.random.default_rng(params.seed)
    noise = rng.random((h, w))
    mask = (noise > 1.0 - params.streak_density).astype(np.float64)
    streaks = ndimage.convolve(mask, _line_kernel(params.streak_length, params.angle_deg), mode="constant")
    streaks *= params.intensity
    rainy = np.clip(clean.data + streaks[None, None].astype(clean.dtype), 0.0, 1.0)
    pair = ImagePair(rainy=Tensor(rainy.astype(clean.dtype)), clean=clean, id=pair_id or str(params.seed))
    pair.validate()
    return pair


# -- PNG IO --------------------------------------------------------------


def read_image(path) -> Tensor:
    """Decode an 8- or 16-bit RGB PNG into a (1,3,H,W) float tensor in [0,1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise DataError(f"cannot decode image file {path}")
    if raw.ndim != 3 or raw.shape[2] < 3:
        raise DataError(f"{path}: expected an RGB image, got shape {raw.shape}")
    raw = raw[:, :, :3][:, :, ::-1]  # BGR -> RGB, drop alpha
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise DataError(f"{path}: unsupported bit depth {raw.dtype}")
    data = (raw.astype(np.float32) / np.float32(scale)).transpose(2, 0, 1)[None]
    return Tensor(data)


def write_image(path, image: Tensor):
    """Encode a (1,3,H,W) tensor in [0,1] as an 8-bit RGB PNG."""
    if image.ndim != 4 or image.shape[0] != 1 or image.shape[1] != 3:
        raise DataError(f"expected (1,3,H,W), got {image.shape}")
    arr = np.clip(image.data[0], 0.0, 1.0)
    arr = np.round(arr * 255.0).astype(np.uint8).transpose(1, 2, 0)[:, :, ::-1]
    if not cv2.imwrite(str(path), arr):
        raise DataError(f"cannot write image file {path}")


def load_pairs(rainy_dir, clean_dir) -> tuple[list[ImagePair], list[str]]:
    """Match same-named PNGs across two directories, sorted by name.

    Returns (pairs, skip_report); unmatched names are skipped and
    reported, undecodable files raise.
    """
    rainy_dir, clean_dir = Path(rainy_dir), Path(clean_dir)
    rainy_names = {p.name: p for p in rainy_dir.glob("*.png")}
    clean_names = {p.name: p for p in clean_dir.glob("*.png")}
    skipped = [f"{rainy_dir / n} has no clean counterpart" for n in sorted(rainy_names.keys() - clean_names.keys())]
    skipped += [f"{clean_dir / n} has no rainy counterpart" for n in sorted(clean_names.keys() - rainy_names.keys())]
    pairs = []
    for name in sorted(rainy_names.keys() & clean_names.keys()):
        pair = ImagePair(
            rainy=read_image(rainy_names[name]),
            clean=read_image(clean_names[name]),
            id=Path(name).stem,
        )
        pair.validate()
        pairs.append(pair)
    return pairs, skipped


def write_manifest(path, pairs: list[dict], generator: RainParams | None = None):
    doc = {"pairs": pairs, "generator": None}
    if generator is not None:
        doc["generator"] = {
            "seed": generator.seed,
            "streak_density": generator.streak_density,
            "streak_length": generator.streak_length,
            "angle_deg": generator.angle_deg,
            "intensity": generator.intensity,
        }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))


# -- deterministic desk-scale fixtures ------------------------------------


def synthetic_clean_image(index: int, size: int = 64, seed: int = 7) -> Tensor:
    """Deterministic structured test image: smooth gradients, blobs, and
    bars, so metrics and overfitting have real structure to latch onto."""
    rng = np.random.default_rng([seed, index])
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    img = np.zeros((3, size, size))
    for ch in range(3):
        a, b, phase = rng.uniform(0.2, 0.8), rng.uniform(1.0, 3.0), rng.uniform(0, 2 * np.pi)
        img[ch] = 0.5 + 0.25 * np.sin(2 * np.pi * b * (xx * math.cos(phase) + yy * math.sin(phase)))
        img[ch] += a * 0.25 * (xx - 0.5)
    for _ in range(4):
        cy, cx = rng.uniform(0.2, 0.8, size=2)
        rad = rng.uniform(0.05, 0.2)
        blob = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rad**2)))
        img += rng.uniform(-0.3, 0.3) * blob[None]
    return Tensor(np.clip(img, 0.0, 1.0)[None].astype(np.float32))


def make_clean_fixtures(out_dir, count: int = 16, size: int = 64, seed: int = 7) -> list[Path]:
    """Write the desk-scale clean fixture set as PNGs; fully deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = out_dir / f"fixture_{i:03d}.png"
        write_image(path, synthetic_clean_image(i, size=size, seed=seed))
        paths.append(path)
    return paths
