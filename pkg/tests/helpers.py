"""Shared test oracles and finite-difference utilities.

The reference implementations here are deliberately written as plain
double loops, independent of the vectorized library code they check.
"""

import numpy as np


def rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / denom


def fd_grad(loss_fn, x, h=1e-5):
    """Central finite-difference gradient of a scalar loss, every coordinate."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        lo_hi = loss_fn(x)
        flat[i] = orig - h
        lo_lo = loss_fn(x)
        flat[i] = orig
        gflat[i] = (lo_hi - lo_lo) / (2.0 * h)
    return grad


def fd_grad_sampled(loss_fn, x, idxs, h=1e-5):
    """Central finite differences at a subset of flat indices."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = np.zeros(len(idxs))
    for j, i in enumerate(idxs):
        orig = flat[i]
        flat[i] = orig + h
        lo_hi = loss_fn(x)
        flat[i] = orig - h
        lo_lo = loss_fn(x)
        flat[i] = orig
        out[j] = (lo_hi - lo_lo) / (2.0 * h)
    return out


def fd_directional(loss_fn, x, v, h=1e-5):
    """Central finite difference of the loss along direction v."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return (loss_fn(x + h * v) - loss_fn(x - h * v)) / (2.0 * h)


def signed_uniform(rng, shape, lo=0.3, hi=1.0):
    """Magnitudes in [lo, hi] with random signs: keeps FD rel-errors stable."""
    mag = rng.uniform(lo, hi, size=shape)
    sign = rng.choice([-1.0, 1.0], size=shape)
    return mag * sign


def census_reference(gray, n):
    """Brute-force census transform with edge replication."""
    h, w = gray.shape
    c = n // 2
    out = np.zeros((h, w), dtype=np.uint64)
    for y in range(h):
        for x in range(w):
            center = gray[y, x]
            k = 0
            bits = 0
            for u in range(-c, c + 1):
                for v in range(-c, c + 1):
                    if u == 0 and v == 0:
                        continue
                    yy = min(max(y + u, 0), h - 1)
                    xx = min(max(x + v, 0), w - 1)
                    if gray[yy, xx] < center:
                        bits |= 1 << k
                    k += 1
            out[y, x] = bits
    return out


def cost_volume_reference(pair, alpha, n, d_max):
    """Brute-force blended cost volume (left reference view)."""
    left, right = pair.left, pair.right
    h, w = left.shape[:2]
    cl = census_reference(pair.gray_left, n)
    cr = census_reference(pair.gray_right, n)
    bits = n * n - 1
    vol = np.zeros((h, w, d_max + 1), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for d in range(d_max + 1):
                if x - d < 0:
                    vol[y, x, d] = 1.0
                    continue
                sad = 0.0
                for ch in range(3):
                    sad += abs(float(left[y, x, ch]) - float(right[y, x - d, ch]))
                sad /= 3.0
                ham = bin(int(cl[y, x]) ^ int(cr[y, x - d])).count("1") / bits
                vol[y, x, d] = alpha * sad + (1.0 - alpha) * ham
    return vol


def dt_1d_reference(x, w):
    y = [float(x[0])]
    for i in range(1, len(x)):
        y.append((1.0 - w[i]) * x[i] + w[i] * y[i - 1])
    return np.array(y)


def dt_2d_reference(img, w_hor, w_vert):
    """Four passes as explicit per-scanline 1-D recurrences."""
    h, w = img.shape
    cur = img.astype(np.float64).copy()
    out = np.empty_like(cur)
    for y in range(h):  # left -> right
        out[y] = dt_1d_reference(cur[y], w_hor[y])
    cur = out.copy()
    for y in range(h):  # right -> left
        out[y] = dt_1d_reference(cur[y, ::-1], w_hor[y, ::-1])[::-1]
    cur = out.copy()
    for x in range(w):  # top -> bottom
        out[:, x] = dt_1d_reference(cur[:, x], w_vert[:, x])
    cur = out.copy()
    for x in range(w):  # bottom -> top
        out[:, x] = dt_1d_reference(cur[::-1, x], w_vert[::-1, x])[::-1]
    return out


def wta_reference(vol):
    h, w, dmax1 = vol.shape
    out = np.zeros((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            best_d, best = 0, vol[y, x, 0]
            for d in range(1, dmax1):
                if vol[y, x, d] < best:
                    best, best_d = vol[y, x, d], d
            out[y, x] = best_d
    return out


def conv_reference(x, kernel, bias, stride):
    """Explicit six-loop zero-padded cross-correlation."""
    kh, kw, cin, cout = kernel.shape
    pad = (kh - 1) // 2
    h, w = x.shape[:2]
    hout = (h + 2 * pad - kh) // stride + 1
    wout = (w + 2 * pad - kw) // stride + 1
    out = np.zeros((hout, wout, cout), dtype=np.float64)
    for oy in range(hout):
        for ox in range(wout):
            for oc in range(cout):
                acc = float(bias[oc])
                for u in range(kh):
                    for v in range(kw):
                        yy = oy * stride + u - pad
                        xx = ox * stride + v - pad
                        if 0 <= yy < h and 0 <= xx < w:
                            for ic in range(cin):
                                acc += float(x[yy, xx, ic]) * float(kernel[u, v, ic, oc])
                out[oy, ox, oc] = acc
    return out


def predictor_reference(img, params):
    """Forward pass of the conv stack via the six-loop reference conv."""
    from dtstereo.predictor import LAYER_SPECS, bilinear_upsample

    x = img.astype(np.float64)
    for (kh, kw, cin, cout, stride, relu), k, b in zip(
            LAYER_SPECS, params.weights, params.biases):
        x = conv_reference(x, k, b, stride)
        if relu:
            x = np.maximum(x, 0.0)
    h, w = img.shape[:2]
    return bilinear_upsample(x[:, :, 0], h, w), bilinear_upsample(x[:, :, 1], h, w)
