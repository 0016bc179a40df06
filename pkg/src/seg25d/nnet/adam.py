"""Adam with bias correction and time-based learning-rate decay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: float = 1e-3
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def current_lr(self) -> float:
        # decay counts updates already applied, so the first step uses the full rate
        return self.lr / (1.0 + self.decay * self.t)


def adam_step(params: dict, grads: dict, state: OptState) -> tuple[dict, OptState]:
    """Return updated params and state; inputs are left untouched."""
    lr_t = state.current_lr()
    t = state.t + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for k in sorted(params):
        p = params[k]
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {k} has shape {g.shape}, parameter has {p.shape}")
        m = state.m.get(k)
        v = state.v.get(k)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_params[k] = (p - lr_t * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)
        new_m[k] = m.astype(p.dtype)
        new_v[k] = v.astype(p.dtype)
    new_state = OptState(state.lr, state.beta1, state.beta2, state.eps, state.decay, t, new_m, new_v)
    return new_params, new_state
