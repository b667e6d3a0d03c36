"""Pipeline orchestration: matching, loss, and left-right postprocessing.

``match`` composes cost volume -> predicted weights -> filtered volume
-> winner-takes-all, optionally followed by the left-right consistency
check and occlusion filling.  ``softmax_xent_loss`` is the training
objective: a per-pixel cross-entropy over disparity labels where lower
cost means higher probability.
"""

from dataclasses import dataclass, field

import numpy as np

from .costvol import CostParams, build_cost_volume, build_cost_volume_right
from .dtfilter import DtParams, energy_to_weights, filter_cost_volume
from .imgio import CONSISTENT, MISMATCH, OCCLUDED, DisparityMap, StereoPair
from .predictor import predictor_forward

# Logit gain applied by the training/inference configuration.  Costs are
# normalized into [0, 1], so a unit-scale softmax can never spread more
# than one nat across labels; the gain restores a usable dynamic range.
DEFAULT_LOSS_SCALE = 20.0


@dataclass
class PipelineConfig:
    cost: CostParams = field(default_factory=CostParams)
    dt: DtParams = field(default_factory=DtParams)
    enable_aggregation: bool = True
    enable_lr_check: bool = True
    lr_tol: float = 1.0
    loss_scale: float = DEFAULT_LOSS_SCALE


@dataclass
class LossReport:
    loss: float
    valid_count: int
    grad: np.ndarray


def wta(vol) -> DisparityMap:
    """Per-pixel argmin over disparity labels; ties go to the smallest d."""
    vol = np.asarray(vol)
    labels = np.argmin(vol, axis=2)
    return DisparityMap(values=labels.astype(np.float32),
                        valid=np.ones(labels.shape, dtype=bool))


def softmax_xent_loss(vol, gt: DisparityMap, scale=1.0) -> LossReport:
    """Cross-entropy of softmax(-scale * cost) against one-hot labels.

    Ground-truth disparities are rounded to the nearest integer label;
    pixels rounding outside [0, d_max] are treated as invalid.  The
    returned gradient is w.r.t. the cost volume, zero at invalid
    pixels, and already averaged over the valid count.
    """
    vol = np.asarray(vol)
    d_max = vol.shape[2] - 1
    labels = np.rint(gt.values).astype(np.int64)
    valid = gt.valid & (labels >= 0) & (labels <= d_max)
    n = int(valid.sum())
    if n == 0:
        raise ValueError("no valid ground-truth pixels")
    z = -scale * vol
    z = z - z.max(axis=2, keepdims=True)
    expz = np.exp(z)
    denom = expz.sum(axis=2, keepdims=True)
    logp = z - np.log(denom)
    picked = np.take_along_axis(logp, labels[:, :, None].clip(0, d_max), axis=2)[:, :, 0]
    loss = float(-(picked[valid]).sum() / n)
    p = expz / denom
    grad = np.zeros_like(vol)
    onehot_idx = labels[valid]
    gv = -p[valid]
    gv[np.arange(n), onehot_idx] += 1.0
    grad[valid] = gv * (scale / n)
    return LossReport(loss=loss, valid_count=n, grad=grad)


def lr_check(left_disp: DisparityMap, right_disp: DisparityMap,
             tol=1.0, d_max=None) -> DisparityMap:
    """Classify left-view pixels as consistent, occluded, or mismatched.

    A pixel with disparity d is consistent when |d - right(x-d, y)| <=
    tol.  Otherwise it is a mismatch when some other label d' satisfies
    |d' - right(x-d', y)| <= tol, and occluded when none does.
    """
    if left_disp.shape != right_disp.shape:
        raise ValueError("disparity map shape mismatch")
    h, w = left_disp.shape
    dl = np.rint(left_disp.values).astype(np.int64)
    dr = np.rint(right_disp.values).astype(np.int64)
    if d_max is None:
        d_max = int(max(dl.max(), dr.max(), 0))
    d_max = min(d_max, w - 1)
    consistent = np.zeros((h, w), dtype=bool)
    match_any = np.zeros((h, w), dtype=bool)
    for dp in range(d_max + 1):
        span = w - dp
        ok = np.abs(dp - dr[:, :span]) <= tol
        match_any[:, dp:] |= ok
        consistent[:, dp:] |= ok & (dl[:, dp:] == dp)
    consistent &= left_disp.valid
    labels = np.where(consistent, CONSISTENT,
                      np.where(match_any, MISMATCH, OCCLUDED)).astype(np.uint8)
    return DisparityMap(values=left_disp.values.copy(), valid=consistent,
                        labels=labels)


def _directional_fill(values, consistent):
    """Nearest consistent value along the 8 compass directions.

    Returns a (8, h, w) stack; entries are NaN where a ray exits the
    image without meeting a consistent pixel.  Order: W, E, N, S, NW,
    NE, SW, SE.
    """
    h, w = values.shape
    base = np.where(consistent, values.astype(np.float64), np.nan)
    rays = np.full((8, h, w), np.nan)

    west = base.copy()
    for x in range(1, w):
        col = west[:, x]
        west[:, x] = np.where(np.isnan(col), west[:, x - 1], col)
    east = base.copy()
    for x in range(w - 2, -1, -1):
        col = east[:, x]
        east[:, x] = np.where(np.isnan(col), east[:, x + 1], col)
    north = base.copy()
    for y in range(1, h):
        row = north[y]
        north[y] = np.where(np.isnan(row), north[y - 1], row)
    south = base.copy()
    for y in range(h - 2, -1, -1):
        row = south[y]
        south[y] = np.where(np.isnan(row), south[y + 1], row)
    rays[0], rays[1], rays[2], rays[3] = west, east, north, south

    def diag(dy, dx):
        out = base.copy()
        ys = range(1, h) if dy > 0 else range(h - 2, -1, -1)
        for y in ys:
            prev = out[y - dy]
            if dx > 0:
                shifted = np.concatenate(([np.nan], prev[:-1]))
            else:
                shifted = np.concatenate((prev[1:], [np.nan]))
            row = out[y]
            out[y] = np.where(np.isnan(row), shifted, row)
        return out

    rays[4] = diag(1, 1)    # from NW
    rays[5] = diag(1, -1)   # from NE
    rays[6] = diag(-1, 1)   # from SW
    rays[7] = diag(-1, -1)  # from SE
    return rays


def fill_invalid(disp: DisparityMap) -> DisparityMap:
    """Interpolate occluded and mismatched pixels from consistent ones.

    Occluded pixels take the nearest consistent value to their left
    (falling back to the right); mismatched pixels take the median of
    the nearest consistent values along 8 directions.  Consistent
    pixels are never altered.
    """
    if disp.labels is None:
        raise ValueError("fill_invalid needs the labels from lr_check")
    consistent = disp.labels == CONSISTENT
    if not consistent.any():
        raise ValueError("no consistent pixels to interpolate from")
    values = disp.values.astype(np.float64).copy()
    rays = _directional_fill(values, consistent)
    west, east = rays[0], rays[1]

    occluded = disp.labels == OCCLUDED
    occ_fill = np.where(np.isnan(west), east, west)
    mismatch = disp.labels == MISMATCH
    with np.errstate(all="ignore"):
        mis_fill = np.nanmedian(rays, axis=0)
    fallback = float(np.median(values[consistent]))
    occ_fill = np.where(np.isnan(occ_fill), mis_fill, occ_fill)
    occ_fill = np.where(np.isnan(occ_fill), fallback, occ_fill)
    mis_fill = np.where(np.isnan(mis_fill), fallback, mis_fill)

    values[occluded] = occ_fill[occluded]
    values[mismatch] = mis_fill[mismatch]
    return DisparityMap(values=values.astype(disp.values.dtype),
                        valid=np.ones_like(disp.valid),
                        labels=disp.labels.copy())


def compute_weight_maps(img, params, sigma):
    """Predictor energies for one image mapped to DT weights."""
    e_hor, e_vert, _ = predictor_forward(img, params)
    return energy_to_weights(e_hor, e_vert, sigma)


def match(pair: StereoPair, params, cfg: PipelineConfig) -> DisparityMap:
    """Full forward pipeline for one stereo pair."""
    vol = build_cost_volume(pair, cfg.cost)
    if cfg.enable_aggregation:
        maps = compute_weight_maps(pair.left, params, cfg.dt.sigma)
        vol = filter_cost_volume(vol, maps)
    disp = wta(vol)
    if not cfg.enable_lr_check:
        return disp
    vol_r = build_cost_volume_right(pair, cfg.cost)
    if cfg.enable_aggregation:
        maps_r = compute_weight_maps(pair.right, params, cfg.dt.sigma)
        vol_r = filter_cost_volume(vol_r, maps_r)
    disp_r = wta(vol_r)
    checked = lr_check(disp, disp_r, tol=cfg.lr_tol, d_max=cfg.cost.d_max)
    return fill_invalid(checked)
