"""Quantitative evaluation and per-stage runtime accounting.

The error metric follows the KITTI 2015 rule: a prediction is bad when
it errs by more than 3 px AND more than 5 % of the true disparity,
computed over valid ground-truth pixels only.  The timing report keeps
a fixed six-stage decomposition (data term, CNN, domain transform,
WTA, left-right check, total) so runs are structurally comparable.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from .costvol import build_cost_volume, build_cost_volume_right
from .dtfilter import filter_cost_volume
from .imgio import DisparityMap
from .matcher import compute_weight_maps, fill_invalid, lr_check, wta

STAGES = ("data term", "CNN", "domain transform", "WTA", "left-right check", "total")


@dataclass
class EvalReport:
    bad_rate: float
    mae: float
    valid_count: int


@dataclass
class StageStat:
    calls: int = 0
    millis: float = 0.0


@dataclass
class TimingReport:
    stages: dict  # stage name -> StageStat, in STAGES order
    threads: int = 1


def bad_pixel_rate(pred: DisparityMap, gt: DisparityMap) -> EvalReport:
    if pred.shape != gt.shape:
        raise ValueError("prediction/ground-truth shape mismatch")
    mask = gt.valid
    n = int(mask.sum())
    if n == 0:
        raise ValueError("ground truth has no valid pixels")
    err = np.abs(pred.values.astype(np.float64) - gt.values.astype(np.float64))[mask]
    gt_vals = gt.values.astype(np.float64)[mask]
    bad = (err > 3.0) & (err > 0.05 * gt_vals)
    return EvalReport(bad_rate=float(bad.mean()), mae=float(err.mean()), valid_count=n)


class _StageClock:
    def __init__(self):
        self.calls = {name: 0 for name in STAGES}
        self.millis = {name: 0.0 for name in STAGES}

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.millis[name] += (time.perf_counter() - t0) * 1e3
        self.calls[name] += 1
        return out


def _timed_match(pair, params, cfg):
    clock = _StageClock()
    t0 = time.perf_counter()
    vol = clock.run("data term", build_cost_volume, pair, cfg.cost)
    if cfg.enable_aggregation:
        maps = clock.run("CNN", compute_weight_maps, pair.left, params, cfg.dt.sigma)
        vol = clock.run("domain transform", filter_cost_volume, vol, maps)
    disp = clock.run("WTA", wta, vol)
    if cfg.enable_lr_check:
        vol_r = clock.run("data term", build_cost_volume_right, pair, cfg.cost)
        if cfg.enable_aggregation:
            maps_r = clock.run("CNN", compute_weight_maps, pair.right, params, cfg.dt.sigma)
            vol_r = clock.run("domain transform", filter_cost_volume, vol_r, maps_r)
        disp_r = clock.run("WTA", wta, vol_r)
        def check():
            return fill_invalid(lr_check(disp, disp_r, tol=cfg.lr_tol, d_max=cfg.cost.d_max))
        disp = clock.run("left-right check", check)
    clock.millis["total"] = (time.perf_counter() - t0) * 1e3
    clock.calls["total"] = 1
    return disp, clock


def benchmark(pair, params, cfg, repeats=1, threads=1) -> TimingReport:
    """Median per-stage wall clock over ``repeats`` runs, after one warm-up."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    clocks = []
    for _ in range(repeats + 1):
        _, clock = _timed_match(pair, params, cfg)
        clocks.append(clock)
    clocks = clocks[1:]  # drop the warm-up run
    stages = {}
    for name in STAGES:
        stages[name] = StageStat(
            calls=clocks[0].calls[name],
            millis=float(np.median([c.millis[name] for c in clocks])),
        )
    return TimingReport(stages=stages, threads=threads)


def format_timing_table(report: TimingReport) -> str:
    lines = [f"{'stage':<18}{'calls':>7}{'millis':>12}"]
    for name in STAGES:
        stat = report.stages[name]
        lines.append(f"{name:<18}{stat.calls:>7}{stat.millis:>12.3f}")
    lines.append(f"(threads: {report.threads})")
    return "\n".join(lines)


def write_timing_csv(report: TimingReport, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stage", "calls", "millis"])
        for name in STAGES:
            stat = report.stages[name]
            writer.writerow([name, stat.calls, f"{stat.millis:.6f}"])


def write_eval_csv(report: EvalReport, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bad_pixel_rate", "mae", "valid_count"])
        writer.writerow([f"{report.bad_rate:.6f}", f"{report.mae:.6f}", report.valid_count])
