"""Exact reverse-mode gradients through the domain transform.

Each 1-D pass is unrolled in reverse.  With g the running gradient
accumulator (seeded by dL/dy), iterating i = N-1 .. 1:

    dL/dx[i] += (1 - w[i]) * g[i]
    dL/dw[i] += (y[i-1] - x[i]) * g[i]
    g[i-1]   += w[i] * g[i]

and finally dL/dx[0] += g[0].  The 2-D composition backpropagates the
four passes in reverse order (BT, TB, RL, LR); weight-map gradients
accumulate over both passes of a direction, over all scanlines, and --
for cost volumes -- over all disparity slices, because the maps are
replicated across slices.

Tapes store the exact pass inputs/outputs of the recorded forward call,
so replaying from a tape reproduces the recorded values bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .dtfilter import WeightMaps, run_passes


@dataclass
class Dt1dTape:
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray


@dataclass
class DtTape:
    """Stage list (pass inputs/outputs, 5 arrays) plus the maps used."""

    stages: list
    maps: WeightMaps
    squeeze: bool = False  # recorded from a 2-D image rather than a volume


def record_dt_1d(x, w):
    x = np.asarray(x)
    w = np.asarray(w)
    if x.shape != w.shape or x.ndim != 1:
        raise ValueError("signal and weights must be 1-D with equal length")
    y = np.empty_like(x)
    y[0] = x[0]
    for i in range(1, len(x)):
        y[i] = (1.0 - w[i]) * x[i] + w[i] * y[i - 1]
    return y, Dt1dTape(x=x, y=y, w=w)


def dt_1d_backward(tape: Dt1dTape, dL_dy):
    dL_dy = np.asarray(dL_dy)
    if dL_dy.shape != tape.x.shape:
        raise ValueError("seed gradient does not match the taped signal")
    x, y, w = tape.x, tape.y, tape.w
    g = dL_dy.astype(np.result_type(dL_dy, x), copy=True)
    dx = np.zeros_like(g)
    dw = np.zeros_like(g)
    for i in range(len(x) - 1, 0, -1):
        dx[i] = (1.0 - w[i]) * g[i]
        dw[i] = (y[i - 1] - x[i]) * g[i]
        g[i - 1] += w[i] * g[i]
    dx[0] = g[0]
    return dx, dw


def _backward_lr(xin, yout, wm, seed):
    g = seed.copy()
    dx = np.empty_like(seed)
    dw = np.zeros(wm.shape, dtype=seed.dtype)
    for i in range(seed.shape[1] - 1, 0, -1):
        gc = g[:, i]
        wc = wm[:, i, None]
        dx[:, i] = (1.0 - wc) * gc
        dw[:, i] = ((yout[:, i - 1] - xin[:, i]) * gc).sum(axis=-1)
        g[:, i - 1] += wc * gc
    dx[:, 0] = g[:, 0]
    return dx, dw


def _backward_rl(xin, yout, wm, seed):
    g = seed.copy()
    dx = np.empty_like(seed)
    dw = np.zeros(wm.shape, dtype=seed.dtype)
    last = seed.shape[1] - 1
    for i in range(0, last):
        gc = g[:, i]
        wc = wm[:, i, None]
        dx[:, i] = (1.0 - wc) * gc
        dw[:, i] = ((yout[:, i + 1] - xin[:, i]) * gc).sum(axis=-1)
        g[:, i + 1] += wc * gc
    dx[:, last] = g[:, last]
    return dx, dw


def _backward_tb(xin, yout, wm, seed):
    g = seed.copy()
    dx = np.empty_like(seed)
    dw = np.zeros(wm.shape, dtype=seed.dtype)
    for i in range(seed.shape[0] - 1, 0, -1):
        gc = g[i]
        wc = wm[i, :, None]
        dx[i] = (1.0 - wc) * gc
        dw[i] = ((yout[i - 1] - xin[i]) * gc).sum(axis=-1)
        g[i - 1] += wc * gc
    dx[0] = g[0]
    return dx, dw


def _backward_bt(xin, yout, wm, seed):
    g = seed.copy()
    dx = np.empty_like(seed)
    dw = np.zeros(wm.shape, dtype=seed.dtype)
    last = seed.shape[0] - 1
    for i in range(0, last):
        gc = g[i]
        wc = wm[i, :, None]
        dx[i] = (1.0 - wc) * gc
        dw[i] = ((yout[i + 1] - xin[i]) * gc).sum(axis=-1)
        g[i + 1] += wc * gc
    dx[last] = g[last]
    return dx, dw


def record_filter_volume(vol, maps: WeightMaps):
    """Forward cost-volume filtering that also records a tape."""
    out, stages = run_passes(np.asarray(vol), maps, record=True)
    return out, DtTape(stages=stages, maps=maps)


def record_dt_2d(img, maps: WeightMaps):
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("record_dt_2d expects a (h, w) array")
    out, stages = run_passes(img[:, :, None], maps, record=True)
    return out[:, :, 0], DtTape(stages=stages, maps=maps, squeeze=True)


def filter_volume_backward(tape: DtTape, dL_dvol):
    """Gradients of the volume filter w.r.t. its input and both maps."""
    dL_dvol = np.asarray(dL_dvol)
    if dL_dvol.shape != tape.stages[-1].shape:
        raise ValueError("seed gradient does not match the taped volume")
    wh, wv = tape.maps.w_hor, tape.maps.w_vert
    s = tape.stages
    g, dwv_bt = _backward_bt(s[3], s[4], wv, dL_dvol)
    g, dwv_tb = _backward_tb(s[2], s[3], wv, g)
    g, dwh_rl = _backward_rl(s[1], s[2], wh, g)
    g, dwh_lr = _backward_lr(s[0], s[1], wh, g)
    return g, dwh_rl + dwh_lr, dwv_bt + dwv_tb


def dt_2d_backward(tape: DtTape, dL_dout):
    dL_dout = np.asarray(dL_dout)
    if not tape.squeeze:
        raise ValueError("tape was not recorded by record_dt_2d")
    din, dwh, dwv = filter_volume_backward(
        DtTape(stages=tape.stages, maps=tape.maps), dL_dout[:, :, None]
    )
    return din[:, :, 0], dwh, dwv


def energy_to_weights_backward(e, sigma, dL_dw):
    """Gradient of w = clip(exp(-sigma e), 0, 1); zero where the clamp binds."""
    e = np.asarray(e)
    dL_dw = np.asarray(dL_dw)
    if e.shape != dL_dw.shape:
        raise ValueError("energy/seed shape mismatch")
    active = e >= 0  # exp(-sigma e) <= 1, clamp inactive
    return np.where(active, -sigma * np.exp(-sigma * e) * dL_dw, 0.0)
