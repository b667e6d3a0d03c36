"""Command-line front end.

Subcommands: match, train, eval, bench, viz-weights, make-synth.  Each
one is a thin adapter over the library; no numerical logic lives here.
Report-producing commands write a CSV next to a rendered PNG figure.
"""

import argparse
import os
import sys

import numpy as np

from . import evalbench, figures, synth, trainer
from .costvol import CostParams
from .dtfilter import DtParams, energy_to_weights
from .imgio import StereoPair, load_disparity_kitti, save_disparity, save_image
from .matcher import PipelineConfig, match
from .predictor import init_params, load_checkpoint, predictor_forward, save_checkpoint


def _pipeline_config(args):
    return PipelineConfig(
        cost=CostParams(alpha=args.alpha, d_max=args.dmax),
        dt=DtParams(sigma=args.sigma),
        enable_aggregation=not getattr(args, "no_aggregation", False),
        enable_lr_check=not getattr(args, "no_lr_check", False),
    )


def _load_params(ckpt):
    if ckpt is None:
        return init_params(0)  # untrained: maximal smoothing
    return load_checkpoint(ckpt)


def _add_pipeline_flags(p, lr_flags=True):
    p.add_argument("--dmax", type=int, default=128)
    p.add_argument("--alpha", type=float, default=0.43)
    p.add_argument("--sigma", type=float, default=4.0)
    if lr_flags:
        p.add_argument("--no-aggregation", action="store_true")
        p.add_argument("--no-lr-check", action="store_true")
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="dtstereo")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="compute a disparity map for one pair")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ckpt")
    _add_pipeline_flags(p)

    p = sub.add_parser("train", help="train the weight predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--lr", type=float, default=2.5e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dmax", type=int, default=128)
    p.add_argument("--alpha", type=float, default=0.43)
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out-prefix")

    p = sub.add_parser("bench", help="per-stage timing report")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--ckpt")
    p.add_argument("--out-prefix")
    _add_pipeline_flags(p)

    p = sub.add_parser("viz-weights", help="export predicted weight maps")
    p.add_argument("--left", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--sigma", type=float, default=4.0)

    p = sub.add_parser("make-synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("rds", "planes"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--dmax", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.05)
    return parser


def _cmd_match(args):
    pair = StereoPair.load(args.left, args.right)
    cfg = _pipeline_config(args)
    params = _load_params(args.ckpt) if cfg.enable_aggregation else None
    disp = match(pair, params, cfg)
    save_disparity(disp, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_train(args):
    dataset = trainer.load_dataset(args.data)
    cfg = trainer.TrainConfig(
        iterations=args.iters, lr=args.lr, seed=args.seed, data_dir=args.data,
        pipeline=PipelineConfig(cost=CostParams(alpha=args.alpha, d_max=args.dmax),
                                dt=DtParams(sigma=args.sigma)))
    curve_csv = args.out + ".losscurve.csv"
    _, _, curve = trainer.train(dataset, cfg, ckpt_path=args.out, curve_path=curve_csv)
    figures.save_loss_curve_figure(curve, args.out + ".losscurve.png")
    print(f"wrote {args.out} (loss {curve[0][1]:.4f} -> {curve[-1][1]:.4f}, "
          f"curve in {curve_csv})")
    return 0


def _cmd_eval(args):
    pred = load_disparity_kitti(args.pred)
    gt = load_disparity_kitti(args.gt)
    report = evalbench.bad_pixel_rate(pred, gt)
    print(f"bad_pixel_rate {report.bad_rate:.3f} mae {report.mae:.3f} "
          f"valid {report.valid_count}")
    if args.out_prefix:
        evalbench.write_eval_csv(report, args.out_prefix + "eval.csv")
        figures.save_error_figure(pred, gt, args.out_prefix + "error.png")
    return 0


def _cmd_bench(args):
    pair = StereoPair.load(args.left, args.right)
    cfg = _pipeline_config(args)
    params = _load_params(args.ckpt) if cfg.enable_aggregation else None
    report = evalbench.benchmark(pair, params, cfg, repeats=args.repeats,
                                 threads=args.threads)
    print(evalbench.format_timing_table(report))
    if args.out_prefix:
        evalbench.write_timing_csv(report, args.out_prefix + "timings.csv")
        figures.save_timing_figure(report, args.out_prefix + "timings.png")
    return 0


def _cmd_viz_weights(args):
    from .imgio import load_image

    left = load_image(args.left)
    if left.ndim == 2:
        left = np.repeat(left[:, :, None], 3, axis=2)
    params = load_checkpoint(args.ckpt)
    e_hor, e_vert, _ = predictor_forward(left, params)
    maps = energy_to_weights(e_hor, e_vert, args.sigma)
    save_image(maps.w_hor, args.out_prefix + "w_hor.png")
    save_image(maps.w_vert, args.out_prefix + "w_vert.png")
    figures.save_weight_figure(maps, args.out_prefix + "weights.png")
    print(f"wrote {args.out_prefix}w_hor.png, {args.out_prefix}w_vert.png")
    return 0


def _cmd_make_synth(args):
    names = synth.generate_dataset(args.out, args.kind, args.count, args.seed,
                                   h=args.height, w=args.width, d_max=args.dmax,
                                   noise=args.noise)
    print(f"wrote {len(names)} samples under {args.out}")
    return 0


_COMMANDS = {
    "match": _cmd_match,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "viz-weights": _cmd_viz_weights,
    "make-synth": _cmd_make_synth,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
