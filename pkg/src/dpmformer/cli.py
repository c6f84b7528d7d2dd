"""Command-line interface.

Exit codes: 0 success, 1 check/test failure, 2 usage/config error,
3 runtime numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_run_config, write_resolved
from .data import (
    RainParams,
    load_pairs,
    make_clean_fixtures,
    read_image,
    synthesize_rain,
    write_image,
    write_manifest,
)
from .errors import CheckpointError, ConfigError, DataError, TrainingDiverged
from .gradcheck import SUITES, THRESHOLDS, run_suite
from .metrics import psnr_y, ssim_y
from .model import DPMformer, derain_image, model_from_checkpoint
from .trainer import OptimizerState, evaluate, train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def cmd_make_data(args) -> int:
    clean_dir = Path(args.clean_dir)
    out_dir = Path(args.out_dir)
    files = sorted(clean_dir.glob("*.png"))[: args.count]
    if not files:
        return _fail(f"no PNG files found in {clean_dir}", EXIT_USAGE)
    try:
        (out_dir / "rainy").mkdir(parents=True, exist_ok=True)
        (out_dir / "clean").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create output directory {out_dir}: {exc}", EXIT_USAGE)

    base = RainParams(
        seed=args.seed,
        streak_density=args.density,
        streak_length=args.length,
        angle_deg=args.angle,
        intensity=args.intensity,
    )
    problems = base.validate()
    if problems and args.density > 0:
        return _fail("invalid rain parameters:\n  " + "\n  ".join(problems), EXIT_USAGE)

    manifest = []
    try:
        for i, path in enumerate(files):
            clean = read_image(path)
            if args.density <= 0 or args.intensity <= 0:
                rainy = clean
            else:
                params = RainParams(
                    seed=args.seed + i,
                    streak_density=args.density,
                    streak_length=args.length,
                    angle_deg=args.angle,
                    intensity=args.intensity,
                )
                rainy = synthesize_rain(clean, params, pair_id=path.stem).rainy
            write_image(out_dir / "clean" / path.name, clean)
            write_image(out_dir / "rainy" / path.name, rainy)
            manifest.append(
                {"rainy": f"rainy/{path.name}", "clean": f"clean/{path.name}", "id": path.stem}
            )
        write_manifest(out_dir / "manifest.json", manifest, generator=base)
    except (DataError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    print(f"wrote {len(manifest)} pairs to {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        return _fail("invalid config:\n  " + "\n  ".join(exc.violations), EXIT_USAGE)
    if cfg.data.train_rainy is None:
        return _fail("invalid config:\n  data.train_rainy/train_clean are required for training", EXIT_USAGE)

    out_dir = Path(cfg.output_dir)
    write_resolved(cfg, out_dir)

    try:
        pairs, skipped = load_pairs(cfg.data.train_rainy, cfg.data.train_clean)
        val_pairs = None
        if cfg.data.val_rainy is not None:
            val_pairs, vskipped = load_pairs(cfg.data.val_rainy, cfg.data.val_clean)
            skipped += vskipped
    except DataError as exc:
        return _fail(str(exc), EXIT_USAGE)
    for line in skipped:
        print(f"skipped: {line}", file=sys.stderr)
    if not pairs:
        return _fail("no training pairs found", EXIT_USAGE)

    model = DPMformer(cfg.model, seed=cfg.train.seed)
    start_epoch = 0
    opt_state = None
    if args.resume:
        try:
            resumed, ckpt = model_from_checkpoint(args.resume)
        except (CheckpointError, OSError) as exc:
            return _fail(str(exc), EXIT_USAGE)
        if ckpt.model_config != cfg.model:
            return _fail("checkpoint model config does not match the run config", EXIT_USAGE)
        model = resumed
        if ckpt.optimizer is not None:
            opt_state = OptimizerState(m=ckpt.optimizer["m"], v=ckpt.optimizer["v"], t=ckpt.optimizer["step"])
        if ckpt.trainer is not None:
            start_epoch = int(ckpt.trainer.get("epoch", 0))

    try:
        report = train(
            model,
            pairs,
            cfg.train,
            val_pairs=val_pairs,
            out_dir=out_dir,
            optimizer_state=opt_state,
            start_epoch=start_epoch,
        )
    except ConfigError as exc:
        return _fail("invalid config:\n  " + "\n  ".join(exc.violations), EXIT_USAGE)
    except TrainingDiverged as exc:
        return _fail(str(exc), EXIT_NUMERICAL)

    summary = {"train": None, "val": None}
    psnr, ssim = evaluate(model, pairs)
    summary["train"] = {"psnr": psnr, "ssim": ssim}
    if val_pairs:
        psnr, ssim = evaluate(model, val_pairs)
        summary["val"] = {"psnr": psnr, "ssim": ssim}
    (out_dir / "metrics.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    final_loss = report.steps[-1].loss_total if report.steps else float("nan")
    print(json.dumps({"final_loss": final_loss, "metrics": summary}, sort_keys=True))
    return EXIT_OK


def cmd_derain(args) -> int:
    try:
        model, _ = model_from_checkpoint(args.checkpoint)
    except (CheckpointError, OSError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    in_path = Path(args.input)
    files = sorted(in_path.glob("*.png")) if in_path.is_dir() else [in_path]
    if not files:
        return _fail(f"no PNG inputs found at {in_path}", EXIT_USAGE)
    out_dir = Path(args.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create output directory {out_dir}: {exc}", EXIT_USAGE)
    for path in files:
        try:
            rainy = read_image(path)
        except DataError as exc:
            return _fail(str(exc), EXIT_USAGE)
        h, w = rainy.shape[2], rainy.shape[3]
        if h % 16 or w % 16:
            print(
                f"{path.name}: padded {h}x{w} -> {h + (-h) % 16}x{w + (-w) % 16} (reflect), cropped back",
                file=sys.stderr,
            )
        restored = derain_image(model, rainy)
        write_image(out_dir / path.name, restored)
    print(f"derained {len(files)} image(s) into {out_dir}")
    return EXIT_OK


def _json_float(x: float):
    return "inf" if math.isinf(x) else x


def cmd_eval(args) -> int:
    try:
        pairs, skipped = load_pairs(args.pred_dir, args.gt_dir)
    except DataError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if skipped:
        for line in skipped:
            print(f"skipped: {line}", file=sys.stderr)
        return _fail(f"{len(skipped)} unmatched file(s)", EXIT_USAGE)
    if not pairs:
        return _fail("no image pairs to evaluate", EXIT_USAGE)
    per_image = []
    psnrs, ssims = [], []
    for pair in pairs:
        # load_pairs(pred, gt) puts the prediction in the .rainy slot
        p = psnr_y(pair.rainy, pair.clean)
        s = ssim_y(pair.rainy, pair.clean)
        psnrs.append(p)
        ssims.append(s)
        per_image.append({"id": pair.id, "psnr": _json_float(p), "ssim": s})
    table = {
        "per_image": per_image,
        "mean_psnr": _json_float(float(np.mean(psnrs))),
        "mean_ssim": float(np.mean(ssims)),
    }
    print(json.dumps(table, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    names = list(SUITES) if args.module == "all" else [args.module]
    all_ok = True
    for name in names:
        errors, ok = run_suite(name)
        all_ok &= ok
        worst = max(errors.values())
        status = "ok" if ok else "FAIL"
        print(f"{name}: max rel err {worst:.3e} (threshold {THRESHOLDS[name]:.0e}) {status}")
        if not ok:
            for op, err in sorted(errors.items(), key=lambda kv: -kv[1]):
                if err >= THRESHOLDS[name]:
                    print(f"  {op}: {err:.3e}", file=sys.stderr)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_make_fixtures(args) -> int:
    paths = make_clean_fixtures(args.out_dir, count=args.count, size=args.size, seed=args.seed)
    print(f"wrote {len(paths)} clean fixture images to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpmformer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-data", help="synthesize rainy/clean pairs from clean PNGs")
    p.add_argument("--clean-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--length", type=int, default=9)
    p.add_argument("--angle", type=float, default=10.0)
    p.add_argument("--intensity", type=float, default=0.5)
    p.add_argument("--count", type=int, default=16)
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("train", help="train from a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("derain", help="restore PNGs with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_derain)

    p = sub.add_parser("eval", help="Y-channel PSNR/SSIM between two directories")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument(
        "--module",
        default="all",
        choices=["all", "tensor", "mdta", "gdfn", "unet", "losses", "model"],
    )
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("make-fixtures", help="write the deterministic clean fixture set")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_make_fixtures)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint():
    sys.exit(main())
