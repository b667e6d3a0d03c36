"""Trainable per-pixel weight-energy predictor.

A small convolutional stack over the left color image produces a
two-channel energy map (horizontal, vertical) at half resolution,
which is bilinearly upsampled back to full resolution.  Both the stack
and the upsampling have exact hand-derived backward passes so the
predictor can be trained end to end.

Layer schedule (zero padding, stride-2 layer halves with ceil
semantics for odd sizes):

    conv 3x3   3 -> 16  ReLU
    conv 3x3  16 -> 16  ReLU   stride 2
    conv 3x3  16 -> 16  ReLU
    conv 3x3  16 ->  8  ReLU
    conv 1x1   8 ->  2  linear
"""

import struct
from dataclasses import dataclass

import numpy as np

from .imgio import FormatError

# (kh, kw, cin, cout, stride, relu)
LAYER_SPECS = (
    (3, 3, 3, 16, 1, True),
    (3, 3, 16, 16, 2, True),
    (3, 3, 16, 16, 1, True),
    (3, 3, 16, 8, 1, True),
    (1, 1, 8, 2, 1, False),
)

CHECKPOINT_MAGIC = b"DTSC"


@dataclass
class PredictorParams:
    weights: list  # per layer, (kh, kw, cin, cout)
    biases: list  # per layer, (cout,)

    def tensors(self):
        return list(self.weights) + list(self.biases)

    def copy(self):
        return PredictorParams([w.copy() for w in self.weights],
                               [b.copy() for b in self.biases])


@dataclass
class PredictorGrads:
    weights: list
    biases: list

    def tensors(self):
        return list(self.weights) + list(self.biases)


@dataclass
class PredictorTape:
    """Per-layer padded inputs and pre-activations from one forward call."""

    padded_inputs: list
    preacts: list
    params: PredictorParams
    full_shape: tuple
    half_shape: tuple


def init_params(seed) -> PredictorParams:
    """He-scaled kernels, zero biases; the final layer starts at zero.

    A zero final layer emits zero energies, so the downstream weight
    maps start at exp(0) = 1 (maximal smoothing), a well-defined point
    for the recurrent filter to train away from.
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for li, (kh, kw, cin, cout, _stride, _relu) in enumerate(LAYER_SPECS):
        fan_in = kh * kw * cin
        if li == len(LAYER_SPECS) - 1:
            k = np.zeros((kh, kw, cin, cout))
        else:
            k = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(kh, kw, cin, cout))
        weights.append(k)
        biases.append(np.zeros(cout))
    return PredictorParams(weights=weights, biases=biases)


def _out_size(n, k, pad, stride):
    return (n + 2 * pad - k) // stride + 1


def conv_forward(x, kernel, bias, stride):
    """Zero-padded cross-correlation; padding keeps 'same' size at stride 1."""
    kh, kw, cin, cout = kernel.shape
    pad = (kh - 1) // 2
    h, w = x.shape[:2]
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0)))
    hout = _out_size(h, kh, pad, stride)
    wout = _out_size(w, kw, pad, stride)
    out = np.broadcast_to(bias, (hout, wout, cout)).astype(np.result_type(x, kernel)).copy()
    for u in range(kh):
        for v in range(kw):
            patch = xp[u:u + stride * hout:stride, v:v + stride * wout:stride]
            out += patch @ kernel[u, v]
    return out, xp


def conv_backward(xp, kernel, stride, dout, input_shape):
    """Gradients of conv_forward w.r.t. input, kernel, and bias."""
    kh, kw, cin, cout = kernel.shape
    pad = (kh - 1) // 2
    hout, wout = dout.shape[:2]
    db = dout.sum(axis=(0, 1))
    dk = np.zeros_like(kernel)
    dxp = np.zeros_like(xp)
    for u in range(kh):
        for v in range(kw):
            sl = (slice(u, u + stride * hout, stride), slice(v, v + stride * wout, stride))
            patch = xp[sl]
            dk[u, v] = np.tensordot(patch, dout, axes=([0, 1], [0, 1]))
            dxp[sl] += dout @ kernel[u, v].T
    h, w = input_shape
    dx = dxp[pad:pad + h, pad:pad + w]
    return dx, dk, db


def _interp_matrix(n_out, n_in, dtype=np.float64):
    """Align-corners 1-D linear interpolation as a dense (n_out, n_in) matrix."""
    m = np.zeros((n_out, n_in), dtype=dtype)
    if n_in == 1:
        m[:, 0] = 1.0
        return m
    if n_out == 1:
        m[0, 0] = 1.0
        return m
    pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    i0 = np.minimum(np.floor(pos).astype(int), n_in - 2)
    frac = pos - i0
    rows = np.arange(n_out)
    m[rows, i0] = 1.0 - frac
    m[rows, i0 + 1] += frac
    return m


def _check_half(h, w, h2, w2):
    if h2 != (h + 1) // 2 or w2 != (w + 1) // 2:
        raise ValueError(f"source {h2}x{w2} is not the ceil-half of target {h}x{w}")


def bilinear_upsample(x, h, w):
    """Upsample a ceil-half-resolution map to (h, w), align-corners semantics."""
    x = np.asarray(x)
    h2, w2 = x.shape
    _check_half(h, w, h2, w2)
    r = _interp_matrix(h, h2, dtype=x.dtype)
    c = _interp_matrix(w, w2, dtype=x.dtype)
    return r @ x @ c.T


def bilinear_upsample_backward(dL_dy, h2, w2):
    """Transpose scatter of the interpolation weights."""
    dL_dy = np.asarray(dL_dy)
    h, w = dL_dy.shape
    _check_half(h, w, h2, w2)
    r = _interp_matrix(h, h2, dtype=dL_dy.dtype)
    c = _interp_matrix(w, w2, dtype=dL_dy.dtype)
    return r.T @ dL_dy @ c


def predictor_forward(img, params: PredictorParams):
    """Run the conv stack and upsample; returns (e_hor, e_vert, tape)."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected a (h, w, 3) image, got {img.shape}")
    h, w = img.shape[:2]
    if h < 8 or w < 8:
        raise ValueError(f"image too small for the predictor: {h}x{w}")
    x = img
    padded_inputs, preacts = [], []
    for (kh, kw, cin, cout, stride, relu), k, b in zip(
            LAYER_SPECS, params.weights, params.biases):
        z, xp = conv_forward(x, k, b, stride)
        padded_inputs.append(xp)
        preacts.append(z)
        x = np.maximum(z, 0.0) if relu else z
    h2, w2 = x.shape[:2]
    e_hor = bilinear_upsample(x[:, :, 0], h, w)
    e_vert = bilinear_upsample(x[:, :, 1], h, w)
    tape = PredictorTape(padded_inputs=padded_inputs, preacts=preacts,
                         params=params, full_shape=(h, w), half_shape=(h2, w2))
    return e_hor, e_vert, tape


def predictor_backward(tape: PredictorTape, dL_de_hor, dL_de_vert):
    """Exact parameter gradients for one recorded forward call."""
    h, w = tape.full_shape
    h2, w2 = tape.half_shape
    dL_de_hor = np.asarray(dL_de_hor)
    dL_de_vert = np.asarray(dL_de_vert)
    if dL_de_hor.shape != (h, w) or dL_de_vert.shape != (h, w):
        raise ValueError("energy seeds do not match the taped image size")
    d = np.stack([bilinear_upsample_backward(dL_de_hor, h2, w2),
                  bilinear_upsample_backward(dL_de_vert, h2, w2)], axis=-1)
    dweights = [None] * len(LAYER_SPECS)
    dbiases = [None] * len(LAYER_SPECS)
    for li in range(len(LAYER_SPECS) - 1, -1, -1):
        kh, kw, cin, cout, stride, relu = LAYER_SPECS[li]
        dz = d * (tape.preacts[li] > 0) if relu else d
        pad = (kh - 1) // 2
        xp = tape.padded_inputs[li]
        in_shape = (xp.shape[0] - 2 * pad, xp.shape[1] - 2 * pad)
        d, dk, db = conv_backward(xp, tape.params.weights[li], stride, dz, in_shape)
        dweights[li] = dk
        dbiases[li] = db
    return PredictorGrads(weights=dweights, biases=dbiases)


def save_checkpoint(params: PredictorParams, path):
    """Flat binary checkpoint: magic, tensor count, per-tensor shape, f32 data."""
    tensors = params.tensors()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(tensors)))
        for t in tensors:
            f.write(struct.pack("<I", t.ndim))
            f.write(struct.pack(f"<{t.ndim}I", *t.shape))
            f.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_checkpoint(path) -> PredictorParams:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a predictor checkpoint")
    off = 4
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    tensors = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", blob, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", blob, off)
        off += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        t = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        tensors.append(t.astype(np.float64))
    nlayers = len(LAYER_SPECS)
    if count != 2 * nlayers:
        raise FormatError(f"{path}: expected {2 * nlayers} tensors, found {count}")
    weights, biases = tensors[:nlayers], tensors[nlayers:]
    for (kh, kw, cin, cout, _s, _r), k, b in zip(LAYER_SPECS, weights, biases):
        if k.shape != (kh, kw, cin, cout) or b.shape != (cout,):
            raise FormatError(f"{path}: tensor shapes do not match the layer schedule")
    return PredictorParams(weights=weights, biases=biases)
