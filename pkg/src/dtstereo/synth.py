"""Synthetic stereo pairs with dense ground truth.

Two scene families cover the desk-scale test needs:

* random-dot stereograms with piecewise-constant integer shifts
  (a foreground rectangle floating over a background plane), and
* two-plane scenes whose background disparity slants gradually across
  rows, with a floating foreground rectangle producing a known
  occlusion band on its left side.

Textures are drawn as 8-bit dot patterns scaled to [0, 1], so samples
survive PNG round trips exactly.  Left images are built by sampling
the right view at the true correspondence, which makes the generated
disparity field an oracle for matching tests.
"""

import os
from dataclasses import dataclass

import numpy as np

from .imgio import DisparityMap, StereoPair, save_disparity, save_image


@dataclass
class TwoPlaneScene:
    pair: StereoPair
    gt: DisparityMap
    occluded: np.ndarray  # true occlusion band (left view)


def _dots(rng, h, w):
    return (rng.integers(0, 256, size=(h, w, 3)).astype(np.float32) / 255.0)


def _quantize(img):
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.float32) / 255.0


def make_rds(h, w, seed, bg_shift=2, fg_shift=None, fg_rect=None, noise=0.0):
    """Random-dot stereogram with a rectangular foreground shift.

    ``fg_shift=None`` gives a single uniform shift.  Gaussian noise of
    the given sigma is added to the right view only (then re-quantized
    to 8-bit levels).  Ground truth is invalid where x - d < 0.
    """
    rng = np.random.default_rng(seed)
    right = _dots(rng, h, w)
    disp = np.full((h, w), bg_shift, dtype=np.int64)
    if fg_shift is not None:
        if fg_rect is None:
            fg_rect = (h // 4, h - h // 4, w // 3, w - w // 4)
        y0, y1, x0, x1 = fg_rect
        disp[y0:y1, x0:x1] = fg_shift
    left = _dots(rng, h, w)  # filler for pixels without a correspondence
    xs = np.arange(w)[None, :] - disp
    valid = xs >= 0
    ys = np.arange(h)[:, None].repeat(w, axis=1)
    left[valid] = right[ys[valid], xs[valid]]
    if noise > 0.0:
        right = _quantize(right + rng.normal(0.0, noise, size=right.shape))
    pair = StereoPair(left=left, right=right)
    gt = DisparityMap(values=disp.astype(np.float32), valid=valid)
    return pair, gt


def make_two_planes(h, w, seed, bg_range=(2, 6), fg_shift=12, fg_rect=None,
                    noise=0.0):
    """Slanted background plane plus a floating foreground rectangle.

    The background disparity ramps linearly (per row, integer) across
    ``bg_range``; the rectangle sits at ``fg_shift``.  The band of
    width fg_shift - bg left of the rectangle is occluded: those left
    pixels show background that the foreground hides in the right
    view.  Foreground and background use different tints so the
    boundary is visible to an appearance-based predictor.
    """
    rng = np.random.default_rng(seed)
    lo, hi = bg_range
    if fg_shift <= hi:
        raise ValueError("foreground shift must exceed the background range")
    if fg_rect is None:
        fg_rect = (h // 4, h - h // 4, max(w // 3, fg_shift), w - w // 6)
    y0, y1, x0, x1 = fg_rect
    if x0 < fg_shift:
        raise ValueError("rectangle too close to the left border for its shift")
    bg_disp = np.rint(np.linspace(lo, hi, h)).astype(np.int64)

    margin = hi + 1
    bg_tex = _dots(rng, h, w + margin)
    bg_tex = _quantize(0.15 + 0.55 * bg_tex)  # darker plane
    fg_tex = _dots(rng, h, w)
    fg_tex[:, :, 0] = 1.0  # warm tint
    fg_tex = _quantize(0.45 + 0.55 * fg_tex)

    left = bg_tex[:, :w].copy()
    left[y0:y1, x0:x1] = fg_tex[y0:y1, x0:x1]

    right = np.empty_like(left)
    for y in range(h):
        right[y] = bg_tex[y, bg_disp[y]:bg_disp[y] + w]
    right[y0:y1, x0 - fg_shift:x1 - fg_shift] = fg_tex[y0:y1, x0:x1]

    disp = np.repeat(bg_disp[:, None], w, axis=1)
    disp[y0:y1, x0:x1] = fg_shift
    valid = np.arange(w)[None, :] >= disp

    occluded = np.zeros((h, w), dtype=bool)
    cols = np.arange(w)[None, :]
    rows_in_rect = np.zeros((h, 1), dtype=bool)
    rows_in_rect[y0:y1] = True
    band = (cols >= x0 - fg_shift + bg_disp[:, None]) & (cols < x0)
    occluded = rows_in_rect & band & valid

    if noise > 0.0:
        right = _quantize(right + rng.normal(0.0, noise, size=right.shape))
    pair = StereoPair(left=left, right=right)
    gt = DisparityMap(values=disp.astype(np.float32), valid=valid)
    return TwoPlaneScene(pair=pair, gt=gt, occluded=occluded)


def write_sample(out_dir, idx, pair: StereoPair, gt: DisparityMap):
    """Store one sample in the left/NNN.png, right/NNN.png, disp/NNN.png layout."""
    name = f"{idx:03d}.png"
    for sub in ("left", "right", "disp"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    save_image(pair.left, os.path.join(out_dir, "left", name))
    save_image(pair.right, os.path.join(out_dir, "right", name))
    save_disparity(gt, os.path.join(out_dir, "disp", name))


def generate_dataset(out_dir, kind, count, seed, h=96, w=128, d_max=16, noise=0.05):
    """Write ``count`` synthetic samples; returns the sample names."""
    if kind not in ("rds", "planes"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    rng = np.random.default_rng(seed)
    names = []
    for i in range(count):
        sub_seed = int(rng.integers(0, 2 ** 31))
        if kind == "rds":
            fg = int(rng.integers(d_max // 2 + 1, d_max + 1))
            bg = int(rng.integers(1, d_max // 2))
            pair, gt = make_rds(h, w, sub_seed, bg_shift=bg, fg_shift=fg, noise=noise)
        else:
            hi = int(rng.integers(3, max(d_max // 3, 4)))
            fg = int(rng.integers(hi + 3, d_max + 1))
            scene = make_two_planes(h, w, sub_seed, bg_range=(1, hi),
                                    fg_shift=fg, noise=noise)
            pair, gt = scene.pair, scene.gt
        write_sample(out_dir, i, pair, gt)
        names.append(f"{i:03d}.png")
    return names
