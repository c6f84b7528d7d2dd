"""Central finite-difference gradient verification.

Every suite runs in float64 with step 1e-5 and reports the worst
relative error per checked op. tensor_core/losses ops must clear 1e-4;
the attention/feed-forward/U-Net/model composites clear 1e-3.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import tensor as T
from .blocks import GDFN, MDTA, TransformerBlock
from .image_ops import gaussian_downsample, laplacian, upsample_bilinear
from .losses import LossWeights, SupervisionSet, total_loss
from .model import DPMformer, ModelConfig
from .tensor import Tensor, backward, no_grad
from .unet import Downsample, UNet, UNetConfig, Upsample

FD_STEP = 1e-5

TENSOR_TOL = 1e-4
LOSS_TOL = 1e-4
COMPOSITE_TOL = 1e-3

THRESHOLDS = {
    "tensor": TENSOR_TOL,
    "losses": LOSS_TOL,
    "mdta": COMPOSITE_TOL,
    "gdfn": COMPOSITE_TOL,
    "unet": COMPOSITE_TOL,
    "model": COMPOSITE_TOL,
}


def numerical_gradient(f: Callable[[], float], x: Tensor, step: float = FD_STEP) -> np.ndarray:
    """Central differences of scalar-valued f() w.r.t. every element of x."""
    grad = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    gflat = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f()
            flat[i] = orig - step
            lo = f()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_gradients(build_loss: Callable[[], Tensor], leaves: list[Tensor]) -> float:
    """Worst relative error between tape gradients and FD over leaves."""
    for leaf in leaves:
        leaf.zero_grad()
    loss = build_loss()
    backward(loss)
    worst = 0.0
    for leaf in leaves:
        analytic = leaf.grad.data.copy()
        numeric = numerical_gradient(lambda: build_loss().item(), leaf)
        worst = max(worst, rel_error(analytic, numeric))
    return worst


def _leaf(rng, shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True, dtype=np.float64)


# -- suites ---------------------------------------------------------------


def check_tensor_ops() -> dict[str, float]:
    rng = np.random.default_rng(11)
    out = {}

    x = _leaf(rng, (1, 2, 5, 5))
    w = _leaf(rng, (3, 2, 3, 3))
    b = _leaf(rng, (3,))
    out["conv2d"] = check_gradients(
        lambda: T.tsum(T.conv2d(x, w, b, stride=1, padding=1)), [x, w, b]
    )

    xd = _leaf(rng, (1, 4, 4, 4))
    wd = _leaf(rng, (4, 1, 3, 3))
    out["conv2d_depthwise"] = check_gradients(
        lambda: T.tsum(T.mul(T.conv2d(xd, wd, stride=2, padding=1, groups=4), xd[:, :, :2, :2])),
        [xd, wd],
    )

    xg = _leaf(rng, (2, 3))
    out["gelu"] = check_gradients(lambda: T.tsum(T.mul(T.gelu(xg), xg)), [xg])

    xs = _leaf(rng, (2, 3, 4))
    ws = _leaf(rng, (2, 3, 4))
    out["softmax"] = check_gradients(lambda: T.tsum(T.mul(T.softmax(xs, axis=-1), ws)), [xs])

    xl = _leaf(rng, (1, 4, 3, 3))
    gl = _leaf(rng, (4,))
    out["layer_norm_channel"] = check_gradients(
        lambda: T.tsum(T.mul(T.layer_norm_channel(xl, gl), xl)), [xl, gl]
    )

    xf = _leaf(rng, (1, 1, 4, 4))
    yf = Tensor(rng.standard_normal((1, 1, 4, 4)), dtype=np.float64)

    def fft_case():
        re, im = T.dft2(xf)
        re_t, im_t = T.dft2(yf)
        return T.tsum(T.absolute(re - re_t)) + T.tsum(T.absolute(im - im_t))

    out["dft2"] = check_gradients(fft_case, [xf])

    xp = _leaf(rng, (1, 2, 4, 4))
    out["pad_reflect2d"] = check_gradients(
        lambda: T.tsum(T.mul(T.pad_reflect2d(xp, 2), T.pad_reflect2d(xp, 2))), [xp]
    )

    a = _leaf(rng, (2, 3, 4))
    c = _leaf(rng, (4, 5))
    out["matmul"] = check_gradients(lambda: T.tsum(T.mul(T.matmul(a, c), T.matmul(a, c))), [a, c])

    xn = _leaf(rng, (2, 3, 8))
    out["l2_normalize"] = check_gradients(
        lambda: T.tsum(T.mul(T.l2_normalize(xn, axis=-1), xn)), [xn]
    )

    xu = _leaf(rng, (1, 2, 3, 3))
    out["upsample_bilinear"] = check_gradients(
        lambda: T.tsum(T.mul(upsample_bilinear(xu, 2), upsample_bilinear(xu, 2))), [xu]
    )

    xq = _leaf(rng, (1, 3, 6, 6))
    out["gaussian_downsample"] = check_gradients(
        lambda: T.tsum(T.mul(gaussian_downsample(xq), gaussian_downsample(xq))), [xq]
    )

    xlap = _leaf(rng, (1, 2, 5, 5))
    out["laplacian"] = check_gradients(
        lambda: T.tsum(T.mul(laplacian(xlap), laplacian(xlap))), [xlap]
    )

    xsh = _leaf(rng, (1, 4, 4, 4))
    out["pixel_shuffle_roundtrip"] = check_gradients(
        lambda: T.tsum(T.mul(T.pixel_shuffle(T.pixel_unshuffle(xsh, 2), 2), xsh)), [xsh]
    )
    return out


def check_losses() -> dict[str, float]:
    rng = np.random.default_rng(13)
    pred = _leaf(rng, (1, 1, 4, 4))
    pred2 = _leaf(rng, (1, 1, 4, 4))
    target = Tensor(rng.standard_normal((1, 1, 4, 4)), dtype=np.float64)
    target2 = Tensor(rng.standard_normal((1, 1, 4, 4)), dtype=np.float64)
    weights = LossWeights()

    def loss():
        sup = SupervisionSet([(pred, target, 1.0), (pred2, target2, 0.5)])
        return total_loss(sup, weights)

    worst = check_gradients(loss, [pred, pred2])

    # Charbonnier gradient vanishes at zero difference
    same = Tensor(rng.standard_normal((1, 1, 4, 4)), dtype=np.float64)
    zpred = Tensor(same.data.copy(), requires_grad=True, dtype=np.float64)
    from .losses import charbonnier

    zloss = charbonnier(zpred, same, 1e-3)
    backward(zloss)
    zero_grad_mag = float(np.abs(zpred.grad.data).max())

    return {"total_loss": worst, "charbonnier_zero_grad": zero_grad_mag}


def _module_check(module, shape, extra_leaves=()) -> float:
    rng = np.random.default_rng(17)
    module.to_dtype(np.float64)
    x = _leaf(rng, shape)
    leaves = [x, *extra_leaves]
    return check_gradients(lambda: T.tsum(module(x)), leaves)


def check_mdta() -> dict[str, float]:
    rng = np.random.default_rng(19)
    m = MDTA(4, 2, rng=rng).to_dtype(np.float64)
    x = _leaf(np.random.default_rng(23), (1, 4, 5, 5))
    err_x = check_gradients(lambda: T.tsum(m(x)), [x, m.alpha])
    return {"mdta": err_x}


def check_gdfn() -> dict[str, float]:
    rng = np.random.default_rng(29)
    m = GDFN(4, rng=rng).to_dtype(np.float64)
    x = _leaf(np.random.default_rng(31), (1, 4, 5, 5))
    err = check_gradients(lambda: T.tsum(m(x)), [x])
    # composed MDTA -> GDFN micro-network
    att = MDTA(4, 2, rng=rng).to_dtype(np.float64)
    x2 = _leaf(np.random.default_rng(37), (1, 4, 5, 5))
    err2 = check_gradients(lambda: T.tsum(m(att(x2))), [x2])
    blk = TransformerBlock(4, 2, rng=rng).to_dtype(np.float64)
    x3 = _leaf(np.random.default_rng(41), (1, 4, 5, 5))
    err3 = check_gradients(lambda: T.tsum(blk(x3)), [x3])
    return {"gdfn": err, "mdta_gdfn_compose": err2, "transformer_block": err3}


def check_unet() -> dict[str, float]:
    rng = np.random.default_rng(43)
    cfg = UNetConfig(base_channels=4, blocks_per_level=(1, 1, 1), heads_per_level=(1, 2, 4))
    net = UNet(cfg, rng).to_dtype(np.float64)
    x = _leaf(np.random.default_rng(47), (1, 4, 8, 8))
    err = check_gradients(lambda: T.tsum(net(x)), [x])

    down = Downsample(4, rng).to_dtype(np.float64)
    xd = _leaf(np.random.default_rng(53), (1, 4, 4, 4))
    err_d = check_gradients(lambda: T.tsum(T.mul(down(xd), down(xd))), [xd])
    up = Upsample(8, rng).to_dtype(np.float64)
    xu = _leaf(np.random.default_rng(59), (1, 8, 2, 2))
    err_u = check_gradients(lambda: T.tsum(T.mul(up(xu), up(xu))), [xu])
    return {"unet": err, "downsample": err_d, "upsample": err_u}


def check_model(sample_fraction: float = 0.01) -> dict[str, float]:
    """FD-check a seeded sample of the slim composed model's parameters."""
    cfg = ModelConfig(
        unet=UNetConfig(base_channels=4, blocks_per_level=(1, 1, 1), heads_per_level=(1, 2, 4))
    )
    model = DPMformer(cfg, seed=61).to_dtype(np.float64)
    rng = np.random.default_rng(67)
    x = Tensor(rng.uniform(0.0, 1.0, (1, 3, 32, 32)), dtype=np.float64)

    def loss() -> Tensor:
        return T.tmean(model(x).derained)

    model.zero_grad()
    backward(loss())

    named = list(model.named_parameters())
    entries = []
    for name, p in named:
        for flat_idx in range(p.data.size):
            entries.append((name, p, flat_idx))
    count = max(1, int(round(len(entries) * sample_fraction)))
    picked = rng.choice(len(entries), size=count, replace=False)

    analytic = np.zeros(count)
    numeric = np.zeros(count)
    with no_grad():
        for row, sel in enumerate(picked):
            name, p, idx = entries[int(sel)]
            analytic[row] = p.grad.data.reshape(-1)[idx]
            flat = p.data.reshape(-1)
            orig = flat[idx]
            flat[idx] = orig + FD_STEP
            hi = loss().item()
            flat[idx] = orig - FD_STEP
            lo = loss().item()
            flat[idx] = orig
            numeric[row] = (hi - lo) / (2.0 * FD_STEP)
    return {"model_param_sample": rel_error(analytic, numeric)}


SUITES = {
    "tensor": check_tensor_ops,
    "losses": check_losses,
    "mdta": check_mdta,
    "gdfn": check_gdfn,
    "unet": check_unet,
    "model": check_model,
}


def run_suite(name: str) -> tuple[dict[str, float], bool]:
    """Run one suite; returns (per-op errors, all within threshold)."""
    errors = SUITES[name]()
    tol = THRESHOLDS[name]
    return errors, all(v < tol for v in errors.values())
