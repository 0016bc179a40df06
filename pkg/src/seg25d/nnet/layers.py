"""Forward/backward pairs for the layers used by the U-Net.

Activations are channels-last, ``(N, H, W, C)``, which keeps patch extraction
and its adjoint contiguous.  Convolution weights use ``(out, in, kh, kw)``.
Every forward has a ``*_backward`` partner taking the upstream gradient plus
whatever the forward returned.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ShapeError


def _pad(x: np.ndarray, ph: int, pw: int) -> np.ndarray:
    if not (ph or pw):
        return x
    n, h, w, c = x.shape
    xp = np.zeros((n, h + 2 * ph, w + 2 * pw, c), dtype=x.dtype)
    xp[:, ph:ph + h, pw:pw + w] = x
    return xp


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(N, H, W, C) -> (N*H*W, kh*kw*C); columns ordered (u, v, c)."""
    n, h, w, c = x.shape
    if kh == 1 and kw == 1:
        return x.reshape(n * h * w, c)
    xp = _pad(x, kh // 2, kw // 2)
    s = xp.strides
    win = as_strided(xp, (n, h, w, kh, kw, c), (s[0], s[1], s[2], s[1], s[2], s[3]), writeable=False)
    return np.ascontiguousarray(win).reshape(n * h * w, kh * kw * c)


def _weight_matrix(w: np.ndarray) -> np.ndarray:
    o, c, kh, kw = w.shape
    return w.transpose(2, 3, 1, 0).reshape(kh * kw * c, o)


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padded stride-1 cross-correlation:
    ``y[n,i,j,o] = b[o] + sum_{c,u,v} x[n, i+u-kh//2, j+v-kw//2, c] * w[o,c,u,v]``.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d input and weight, got {x.shape} and {w.shape}")
    n, h, wd, c = x.shape
    o, cw, kh, kw = w.shape
    if cw != c:
        raise ShapeError(f"conv2d channel mismatch: input has {c}, weight expects {cw}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError("conv2d needs odd kernel sizes for same padding")
    if b.shape != (o,):
        raise ShapeError(f"bias shape {b.shape} does not match {o} output channels")
    cols = _im2col(x, kh, kw)
    y = cols @ _weight_matrix(w)
    y += b
    return y.reshape(n, h, wd, o), (cols, x.shape, w)


def conv2d_backward(dy: np.ndarray, cache, need_dx: bool = True):
    """Returns (dx, dw, db); dx is None when ``need_dx`` is false."""
    cols, xshape, w = cache
    n, h, wd, c = xshape
    o, _, kh, kw = w.shape
    dy2 = dy.reshape(-1, o)
    dw = np.ascontiguousarray((cols.T @ dy2).reshape(kh, kw, c, o).transpose(3, 2, 0, 1))
    db = dy2.sum(axis=0)
    if not need_dx:
        return None, dw, db
    # the adjoint of a same-padded correlation is a same-padded correlation
    # of dy with the spatially flipped, channel-transposed kernel
    w_adj = w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    dx = _im2col(dy, kh, kw) @ _weight_matrix(w_adj)
    return dx.reshape(xshape), dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return dy * (y > 0)


def maxpool2(x: np.ndarray):
    """2x2 stride-2 max pooling; also returns the in-window argmax (0..3, first max wins)."""
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    win = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    arg = win.argmax(axis=-1)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return y, arg


def maxpool2_backward(dy: np.ndarray, arg: np.ndarray) -> np.ndarray:
    n, h2, w2, c = dy.shape
    dwin = np.zeros((n, h2, w2, c, 4), dtype=dy.dtype)
    np.put_along_axis(dwin, arg[..., None], dy[..., None], axis=-1)
    return dwin.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * h2, 2 * w2, c)


def upsample2_nearest(x: np.ndarray) -> np.ndarray:
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2_nearest_backward(dy: np.ndarray) -> np.ndarray:
    n, h, w, c = dy.shape
    return dy.reshape(n, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[:3] != b.shape[:3]:
        raise ShapeError(f"cannot concatenate {a.shape} and {b.shape} along channels")
    return np.concatenate([a, b], axis=-1)


def concat_channels_backward(dy: np.ndarray, ca: int):
    return dy[..., :ca], dy[..., ca:]


def flush_subnormal(a: np.ndarray) -> np.ndarray:
    """Zero out subnormal entries in place.  A confident softmax produces
    probabilities below the normal range; every matmul that touches them
    afterwards runs several times slower on x86, and they carry no signal."""
    if a.dtype.kind == "f":
        a[np.abs(a) < np.finfo(a.dtype).tiny] = 0
    return a


def softmax_channels(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return flush_subnormal(e / e.sum(axis=-1, keepdims=True))


def softmax_channels_backward(dp: np.ndarray, p: np.ndarray) -> np.ndarray:
    return flush_subnormal(p * (dp - (dp * p).sum(axis=-1, keepdims=True)))
