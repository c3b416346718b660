"""Adam with bias correction, as a pure function over flat arrays."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class AdamState:
    step: int
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(0, np.zeros(n), np.zeros(n), **kw)


def adam_step(st: AdamState, params: np.ndarray, grads: np.ndarray):
    """Return ``(new_params, new_state)``; inputs are not modified."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if not (params.shape == grads.shape == st.m.shape):
        raise ValueError(f"shape mismatch: params {params.shape}, grads {grads.shape}, state {st.m.shape}")
    step = st.step + 1
    m = st.beta1 * st.m + (1 - st.beta1) * grads
    v = st.beta2 * st.v + (1 - st.beta2) * grads * grads
    m_hat = m / (1 - st.beta1 ** step)
    v_hat = v / (1 - st.beta2 ** step)
    new = params - st.lr * m_hat / (np.sqrt(v_hat) + st.eps)
    return new, replace(st, step=step, m=m, v=v)
