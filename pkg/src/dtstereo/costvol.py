"""Raw matching-cost volume: blended census and SAD terms.

The volume is a dense ``(h, w, d_max+1)`` array.  Entry ``(y, x, d)``
scores left pixel ``(x, y)`` against right pixel ``(x-d, y)``.  Both
terms are normalized into [0, 1] before blending (SAD by /3, census by
/(n^2-1)) so the blend coefficient is scale-free; out-of-range
displacements get maximal cost 1.0, keeping the volume dense and
filterable.
"""

from dataclasses import dataclass

import numpy as np

from .imgio import StereoPair


@dataclass
class CostParams:
    alpha: float = 0.43
    census_patch: int = 7
    d_max: int = 128

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.census_patch % 2 == 0 or self.census_patch < 3:
            raise ValueError(f"census patch side must be odd and >= 3, got {self.census_patch}")
        if self.census_patch > 8:
            # descriptors are packed into uint64: n^2 - 1 <= 64
            raise ValueError(f"census patch side must be <= 7, got {self.census_patch}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")

    @property
    def census_bits(self):
        return self.census_patch * self.census_patch - 1


def census_transform(gray, n):
    """Per-pixel census descriptor packed into uint64.

    Bit k is 1 iff the k-th patch neighbor (row-major order over the
    n x n patch, center excluded) is strictly darker than the center.
    Out-of-bounds neighbors replicate the nearest edge pixel.
    """
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("census transform expects a single-channel image")
    if n % 2 == 0 or n < 3:
        raise ValueError(f"patch side must be odd and >= 3, got {n}")
    if n * n - 1 > 64:
        raise ValueError(f"patch side {n} exceeds the 64-bit descriptor")
    h, w = gray.shape
    c = n // 2
    padded = np.pad(gray, c, mode="edge")
    desc = np.zeros((h, w), dtype=np.uint64)
    k = 0
    for u in range(n):
        for v in range(n):
            if u == c and v == c:
                continue
            neighbor = padded[u:u + h, v:v + w]
            desc |= (neighbor < gray).astype(np.uint64) << np.uint64(k)
            k += 1
    return desc


def hamming(a, b):
    """Number of differing bits between packed census descriptors."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    if a.shape != b.shape:
        raise ValueError(f"descriptor shape mismatch: {a.shape} vs {b.shape}")
    return np.bitwise_count(a ^ b)


def sad_cost(left, right, x, y, d):
    """Channel-mean absolute color difference of (x, y) vs (x-d, y) in [0, 1].

    Returns the maximal cost 1.0 when x-d falls outside the right image.
    """
    if x - d < 0:
        return 1.0
    diff = np.abs(left[y, x].astype(np.float64) - right[y, x - d].astype(np.float64))
    return float(diff.sum() / 3.0)


def _blend(pair, params, dtype, mirrored):
    alpha = dtype(params.alpha)
    bits = dtype(params.census_bits)
    if mirrored:
        base, other = pair.right, pair.left
        cen_base = census_transform(pair.gray_right, params.census_patch)
        cen_other = census_transform(pair.gray_left, params.census_patch)
    else:
        base, other = pair.left, pair.right
        cen_base = census_transform(pair.gray_left, params.census_patch)
        cen_other = census_transform(pair.gray_right, params.census_patch)
    h, w = base.shape[:2]
    vol = np.ones((h, w, params.d_max + 1), dtype=dtype)
    base = base.astype(dtype, copy=False)
    other = other.astype(dtype, copy=False)
    for d in range(min(params.d_max, w - 1) + 1):
        span = w - d
        if mirrored:
            # right-reference volume: displacement x+d into the left view
            a, b = base[:, :span], other[:, d:]
            ca, cb = cen_base[:, :span], cen_other[:, d:]
            dest = vol[:, :span, d]
        else:
            a, b = base[:, d:], other[:, :span]
            ca, cb = cen_base[:, d:], cen_other[:, :span]
            dest = vol[:, d:, d]
        sad = np.abs(a - b).sum(axis=2) / dtype(3.0)
        cen = hamming(ca, cb).astype(dtype) / bits
        dest[:] = alpha * sad + (dtype(1.0) - alpha) * cen
    return vol


def build_cost_volume(pair: StereoPair, params: CostParams, dtype=np.float32):
    """Left-reference volume: alpha * SAD + (1-alpha) * census, both in [0, 1]."""
    return _blend(pair, params, np.dtype(dtype).type, mirrored=False)


def build_cost_volume_right(pair: StereoPair, params: CostParams, dtype=np.float32):
    """Right-reference volume; entry (y, x, d) scores right (x, y) vs left (x+d, y)."""
    return _blend(pair, params, np.dtype(dtype).type, mirrored=True)
