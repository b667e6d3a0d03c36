"""Forward domain-transform filtering.

The 1-D building block is the gated recurrence

    y[0] = x[0],    y[i] = (1 - w[i]) * x[i] + w[i] * y[i-1]

where w[i] in [0, 1] gates how much of the running state propagates
into pixel i.  The 2-D filter cascades four directional passes in the
fixed order left-right, right-left, top-bottom, bottom-up, each pass
consuming the previous pass's output.  Horizontal passes read the
horizontal weight map, vertical passes the vertical one.  Cost volumes
are filtered slice by slice with the same two maps.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DtParams:
    sigma: float = 4.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass
class WeightMaps:
    """Per-pixel propagation weights, both maps (h, w) in [0, 1]."""

    w_hor: np.ndarray
    w_vert: np.ndarray

    def __post_init__(self):
        if self.w_hor.shape != self.w_vert.shape or self.w_hor.ndim != 2:
            raise ValueError("weight maps must be two (h, w) arrays of equal shape")

    @property
    def shape(self):
        return self.w_hor.shape

    @classmethod
    def constant(cls, shape, value, dtype=np.float64):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"weight must be in [0, 1], got {value}")
        return cls(np.full(shape, value, dtype=dtype), np.full(shape, value, dtype=dtype))


def dt_1d(x, w):
    """Gated recurrence along one scanline; w[0] is unused."""
    x = np.asarray(x)
    w = np.asarray(w)
    if x.shape != w.shape or x.ndim != 1:
        raise ValueError("signal and weights must be 1-D with equal length")
    y = np.empty_like(x)
    y[0] = x[0]
    for i in range(1, len(x)):
        y[i] = (1.0 - w[i]) * x[i] + w[i] * y[i - 1]
    return y


def _pass_lr(vol, wm):
    out = np.empty_like(vol)
    out[:, 0] = vol[:, 0]
    for i in range(1, vol.shape[1]):
        wc = wm[:, i, None]
        out[:, i] = (1.0 - wc) * vol[:, i] + wc * out[:, i - 1]
    return out


def _pass_rl(vol, wm):
    out = np.empty_like(vol)
    last = vol.shape[1] - 1
    out[:, last] = vol[:, last]
    for i in range(last - 1, -1, -1):
        wc = wm[:, i, None]
        out[:, i] = (1.0 - wc) * vol[:, i] + wc * out[:, i + 1]
    return out


def _pass_tb(vol, wm):
    out = np.empty_like(vol)
    out[0] = vol[0]
    for i in range(1, vol.shape[0]):
        wc = wm[i, :, None]
        out[i] = (1.0 - wc) * vol[i] + wc * out[i - 1]
    return out


def _pass_bt(vol, wm):
    out = np.empty_like(vol)
    last = vol.shape[0] - 1
    out[last] = vol[last]
    for i in range(last - 1, -1, -1):
        wc = wm[i, :, None]
        out[i] = (1.0 - wc) * vol[i] + wc * out[i + 1]
    return out


_PASSES = (
    (_pass_lr, "hor"),
    (_pass_rl, "hor"),
    (_pass_tb, "vert"),
    (_pass_bt, "vert"),
)


def run_passes(vol, maps, record=False):
    """Apply the four directional passes to a (h, w, d) volume.

    Returns (output, stages); stages is the 5-long list of pass inputs
    and outputs when ``record`` is set (needed for backpropagation),
    else None.
    """
    if vol.ndim != 3:
        raise ValueError("expected a (h, w, d) volume")
    if maps.shape != vol.shape[:2]:
        raise ValueError(f"weight maps {maps.shape} do not match volume {vol.shape[:2]}")
    stages = [vol] if record else None
    cur = vol
    for fn, which in _PASSES:
        wm = maps.w_hor if which == "hor" else maps.w_vert
        cur = fn(cur, wm)
        if record:
            stages.append(cur)
    return cur, stages


def dt_2d(img, maps: WeightMaps):
    """Four-pass edge-aware filtering of a single (h, w) image."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("dt_2d expects a (h, w) array")
    out, _ = run_passes(img[:, :, None], maps)
    return out[:, :, 0]


def filter_cost_volume(vol, maps: WeightMaps):
    """Filter every disparity slice with the same weight maps."""
    out, _ = run_passes(np.asarray(vol), maps)
    return out


def energy_to_weights(e_hor, e_vert, sigma):
    """Map predictor energies to propagation weights: w = exp(-sigma * e).

    The exponential is clamped into [0, 1]; the clamp only binds for
    negative energies, which the predictor may emit.
    """
    e_hor = np.asarray(e_hor)
    e_vert = np.asarray(e_vert)
    if not (np.isfinite(e_hor).all() and np.isfinite(e_vert).all()):
        raise ValueError("energies must be finite")
    if e_hor.shape != e_vert.shape:
        raise ValueError("energy maps must have equal shape")
    w_hor = np.clip(np.exp(-sigma * e_hor), 0.0, 1.0)
    w_vert = np.clip(np.exp(-sigma * e_vert), 0.0, 1.0)
    return WeightMaps(w_hor=w_hor, w_vert=w_vert)
