"""Image and disparity-map I/O.

All pipeline math runs on real-valued numpy arrays in [0, 1]:

* grayscale images are ``(h, w)`` float arrays,
* color images are ``(h, w, 3)`` float arrays (RGB, channel-last),
* disparity maps carry a per-pixel validity mask.

Supported file formats: PNG (8 and 16 bit), binary PGM/PPM.  Disparity
maps use the KITTI 16-bit PNG convention: stored value 0 marks an
invalid pixel, any value v > 0 decodes to disparity v / 256.
"""

import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

DISPARITY_SCALE = 256.0

# Pixel labels attached by the left-right consistency check.
CONSISTENT = 0
OCCLUDED = 1
MISMATCH = 2

GRAY_WEIGHTS = (0.299, 0.587, 0.114)  # BT.601 luma


class FormatError(ValueError):
    """Raised when a file exists but is not in a supported format."""


@dataclass
class DisparityMap:
    """Per-pixel disparity labels with a validity mask.

    ``labels`` is populated by the left-right consistency check
    (CONSISTENT / OCCLUDED / MISMATCH) and is None otherwise.
    """

    values: np.ndarray
    valid: np.ndarray
    labels: np.ndarray | None = None

    @property
    def shape(self):
        return self.values.shape

    def __post_init__(self):
        if self.values.shape != self.valid.shape:
            raise ValueError("values/valid shape mismatch")


@dataclass
class StereoPair:
    """Rectified left/right color images plus derived grayscale planes."""

    left: np.ndarray
    right: np.ndarray
    gray_left: np.ndarray = field(default=None)
    gray_right: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError("left/right shape mismatch")
        if self.gray_left is None:
            self.gray_left = to_grayscale(self.left)
        if self.gray_right is None:
            self.gray_right = to_grayscale(self.right)

    @classmethod
    def load(cls, left_path, right_path):
        left = load_image(left_path)
        right = load_image(right_path)
        if left.ndim == 2:
            left = np.repeat(left[:, :, None], 3, axis=2)
        if right.ndim == 2:
            right = np.repeat(right[:, :, None], 3, axis=2)
        return cls(left, right)

    @property
    def shape(self):
        return self.left.shape[:2]


def load_image(path):
    """Load a PNG/PGM/PPM image as a float32 array scaled into [0, 1].

    8-bit data is scaled by 1/255, 16-bit by 1/65535.  Grayscale files
    give ``(h, w)``, color files ``(h, w, 3)``.
    """
    try:
        im = PILImage.open(path)
        im.load()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise FormatError(f"cannot decode {path}: {exc}") from exc
    if im.format not in ("PNG", "PPM"):  # Pillow reports PGM/PPM as PPM
        raise FormatError(f"unsupported format {im.format!r} in {path}")
    if im.mode == "P":
        im = im.convert("RGB")
    arr = np.asarray(im)
    if im.mode == "L":
        return (arr.astype(np.float32) / 255.0)
    if im.mode == "RGB":
        return (arr.astype(np.float32) / 255.0)
    if im.mode in ("I;16", "I"):
        arr = arr.astype(np.int64)
        if arr.min() < 0 or arr.max() > 65535:
            raise FormatError(f"{path}: integer samples outside 16-bit range")
        return (arr.astype(np.float32) / 65535.0)
    raise FormatError(f"unsupported pixel mode {im.mode!r} in {path}")


def save_image(img, path, bit_depth=8):
    """Save a [0, 1] float array; format is chosen by the file suffix.

    PNG supports 8- and 16-bit output, PGM/PPM are written 8-bit.
    Values are clipped to [0, 1] and rounded to the target depth.
    """
    img = np.asarray(img)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise ValueError(f"expected (h, w) or (h, w, 3) array, got {img.shape}")
    clipped = np.clip(img, 0.0, 1.0)
    if bit_depth == 8:
        data = np.rint(clipped * 255.0).astype(np.uint8)
        mode = "L" if img.ndim == 2 else "RGB"
    elif bit_depth == 16:
        if img.ndim != 2:
            raise ValueError("16-bit output is grayscale only")
        data = np.rint(clipped * 65535.0).astype(np.uint16)
        mode = "I;16"
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    PILImage.fromarray(data, mode=mode).save(path)


def to_grayscale(img):
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) color image, got {img.shape}")
    r, g, b = GRAY_WEIGHTS
    return r * img[:, :, 0] + g * img[:, :, 1] + b * img[:, :, 2]


def load_disparity_kitti(path):
    """Decode a KITTI-convention 16-bit disparity PNG.

    Stored 0 -> invalid pixel; stored v > 0 -> disparity v / 256.
    """
    try:
        im = PILImage.open(path)
        im.load()
    except OSError as exc:
        raise FormatError(f"cannot decode {path}: {exc}") from exc
    if im.format != "PNG" or im.mode not in ("I;16", "I"):
        raise FormatError(f"{path}: disparity maps must be 16-bit single-channel PNG")
    raw = np.asarray(im).astype(np.int64)
    if raw.min() < 0 or raw.max() > 65535:
        raise FormatError(f"{path}: samples outside 16-bit range")
    valid = raw > 0
    values = raw.astype(np.float32) / DISPARITY_SCALE
    values[~valid] = 0.0
    return DisparityMap(values=values, valid=valid)


def save_disparity(disp, path):
    """Encode a disparity map as a KITTI-convention 16-bit PNG.

    Invalid pixels are stored as 0.  Valid disparities are quantized to
    1/256; values that would quantize to 0 are bumped to 1 so validity
    survives the round trip.
    """
    raw = np.rint(disp.values * DISPARITY_SCALE)
    raw = np.clip(raw, 0, 65535)
    raw = np.where(disp.valid, np.maximum(raw, 1), 0)
    PILImage.fromarray(raw.astype(np.uint16), mode="I;16").save(path, format="PNG")


def write_cost_volume(vol, path):
    """Raw dump: int32-LE header (h, w, labels) then float32-LE (y, x, d) order."""
    vol = np.asarray(vol)
    if vol.ndim != 3:
        raise ValueError("cost volume must be (h, w, d_max+1)")
    with open(path, "wb") as f:
        f.write(struct.pack("<iii", *vol.shape))
        f.write(np.ascontiguousarray(vol, dtype="<f4").tobytes())


def read_cost_volume(path):
    with open(path, "rb") as f:
        header = f.read(12)
        if len(header) != 12:
            raise FormatError(f"{path}: truncated cost-volume header")
        h, w, d = struct.unpack("<iii", header)
        if h <= 0 or w <= 0 or d <= 0:
            raise FormatError(f"{path}: bad cost-volume dimensions {(h, w, d)}")
        payload = np.frombuffer(f.read(), dtype="<f4")
    if payload.size != h * w * d:
        raise FormatError(f"{path}: cost-volume payload size mismatch")
    return payload.reshape(h, w, d).astype(np.float32)
