"""Two-level U-Net: two pooling stages, two skip connections, softmax head.

The public entry points take and return NCHW arrays; activations inside are
channels-last (see :mod:`.layers`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from . import layers as L


@dataclass(frozen=True)
class UNetConfig:
    num_classes: int
    base_width: int = 16
    in_channels: int = 3
    kernel: int = 3

    def layer_shapes(self) -> dict[str, tuple[int, int, int, int]]:
        f, k, c = self.base_width, self.kernel, self.in_channels
        return {
            "enc1a": (f, c, k, k),
            "enc1b": (f, f, k, k),
            "enc2a": (2 * f, f, k, k),
            "enc2b": (2 * f, 2 * f, k, k),
            "mid_a": (4 * f, 2 * f, k, k),
            "mid_b": (4 * f, 4 * f, k, k),
            "dec2a": (2 * f, 6 * f, k, k),
            "dec2b": (2 * f, 2 * f, k, k),
            "dec1a": (f, 3 * f, k, k),
            "dec1b": (f, f, k, k),
            "head": (self.num_classes, f, 1, 1),
        }


NetParams = dict  # "<layer>.w" / "<layer>.b" -> ndarray


def init_params(cfg: UNetConfig, seed: int = 0, dtype=np.float32) -> NetParams:
    """He-uniform weights (fan-in), zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in cfg.layer_shapes().items():
        fan_in = shape[1] * shape[2] * shape[3]
        limit = np.sqrt(6.0 / fan_in)
        params[name + ".w"] = rng.uniform(-limit, limit, size=shape).astype(dtype)
        params[name + ".b"] = np.zeros(shape[0], dtype=dtype)
    return params


def count_params(params: NetParams) -> int:
    return int(sum(v.size for v in params.values()))


def _conv_relu(x, params, name, caches):
    y, c = L.conv2d_forward(x, params[name + ".w"], params[name + ".b"])
    y = L.relu(y)
    caches[name] = (c, y)
    return y


def _conv_relu_back(dy, caches, name, grads, need_dx=True):
    c, y = caches[name]
    dx, dw, db = L.conv2d_backward(L.relu_backward(dy, y), c, need_dx)
    grads[name + ".w"] = dw
    grads[name + ".b"] = db
    return dx


def unet_forward(params: NetParams, x: np.ndarray, return_cache: bool = False):
    """Class probabilities (N, C, H, W) for an (N, 3, H, W) input."""
    if x.ndim != 4:
        raise ShapeError(f"expected (N, C, H, W) input, got {x.shape}")
    n, ch, h, w = x.shape
    if ch != params["enc1a.w"].shape[1]:
        raise ShapeError(f"input has {ch} channels, network expects {params['enc1a.w'].shape[1]}")
    if h % 4 or w % 4:
        raise ShapeError(f"spatial dims must be divisible by 4, got {h}x{w}")
    x = np.ascontiguousarray(x.transpose(0, 2, 3, 1), dtype=params["enc1a.w"].dtype)
    cache: dict = {}
    s1 = _conv_relu(_conv_relu(x, params, "enc1a", cache), params, "enc1b", cache)
    p1, a1 = L.maxpool2(s1)
    s2 = _conv_relu(_conv_relu(p1, params, "enc2a", cache), params, "enc2b", cache)
    p2, a2 = L.maxpool2(s2)
    m = _conv_relu(_conv_relu(p2, params, "mid_a", cache), params, "mid_b", cache)
    u2 = L.concat_channels(L.upsample2_nearest(m), s2)
    d2 = _conv_relu(_conv_relu(u2, params, "dec2a", cache), params, "dec2b", cache)
    u1 = L.concat_channels(L.upsample2_nearest(d2), s1)
    d1 = _conv_relu(_conv_relu(u1, params, "dec1a", cache), params, "dec1b", cache)
    logits, hc = L.conv2d_forward(d1, params["head.w"], params["head.b"])
    probs = L.softmax_channels(logits)
    out = np.ascontiguousarray(probs.transpose(0, 3, 1, 2))
    if not return_cache:
        return out
    cache.update(head=hc, a1=a1, a2=a2, c_m=m.shape[-1], c_d2=d2.shape[-1], probs=probs)
    return out, cache


def unet_backward(dprobs: np.ndarray, cache: dict) -> NetParams:
    """Parameter gradients given dLoss/dprobs (N, C, H, W)."""
    grads: dict = {}
    dprobs = dprobs.transpose(0, 2, 3, 1)
    dlogits = L.softmax_channels_backward(dprobs, cache["probs"])
    dd1, grads["head.w"], grads["head.b"] = L.conv2d_backward(dlogits, cache["head"])
    du1 = _conv_relu_back(_conv_relu_back(dd1, cache, "dec1b", grads), cache, "dec1a", grads)
    dup1, ds1 = L.concat_channels_backward(du1, cache["c_d2"])
    dd2 = L.upsample2_nearest_backward(dup1)
    du2 = _conv_relu_back(_conv_relu_back(dd2, cache, "dec2b", grads), cache, "dec2a", grads)
    dup2, ds2 = L.concat_channels_backward(du2, cache["c_m"])
    dm = L.upsample2_nearest_backward(dup2)
    dp2 = _conv_relu_back(_conv_relu_back(dm, cache, "mid_b", grads), cache, "mid_a", grads)
    ds2 = ds2 + L.maxpool2_backward(dp2, cache["a2"])
    dp1 = _conv_relu_back(_conv_relu_back(ds2, cache, "enc2b", grads), cache, "enc2a", grads)
    ds1 = ds1 + L.maxpool2_backward(dp1, cache["a1"])
    _conv_relu_back(_conv_relu_back(ds1, cache, "enc1b", grads), cache, "enc1a", grads, need_dx=False)
    return grads
