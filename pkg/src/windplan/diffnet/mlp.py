"""Sine-activated MLP of one scalar input, with exact d/dt jets.

Hidden layers compute ``sin(omega * (h @ W + b))`` with ``omega = omega0``
on the first layer and ``omega`` afterwards; the output layer is affine.
The derivative with respect to the input travels alongside the value as a
first-order dual number, so the same code path serves plain evaluation,
time-derivative evaluation, and (when weights are :class:`Var`) taped
evaluation for parameter gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int = 1
    output_dim: int = 6
    hidden_layers: int = 4
    hidden_width: int = 64
    omega0: float = 30.0
    omega: float = 1.0
    seed: int = 0
    init: str = "xavier"  # or "siren"

    def __post_init__(self):
        if self.hidden_layers < 1:
            raise ValueError("hidden_layers must be >= 1")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.input_dim != 1:
            raise ValueError("the network takes a single scalar input")
        if self.init not in ("xavier", "siren"):
            raise ValueError(f"unknown init scheme {self.init!r}")

    def layer_shapes(self) -> list:
        dims = [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    def frequencies(self) -> list:
        return [self.omega0] + [self.omega] * (self.hidden_layers - 1)


class ParamVector:
    """Flat float64 parameter storage; ``layers()`` returns (W, b) views."""

    def __init__(self, cfg: MlpConfig, data=None):
        self.cfg = cfg
        self.shapes = cfg.layer_shapes()
        self.size = sum(i * o + o for i, o in self.shapes)
        if data is None:
            data = np.zeros(self.size)
        data = np.asarray(data, dtype=float)
        if data.shape != (self.size,):
            raise ValueError(f"expected {self.size} parameters, got {data.shape}")
        self.data = data

    def layers(self) -> list:
        out, k = [], 0
        for fan_in, fan_out in self.shapes:
            w = self.data[k:k + fan_in * fan_out].reshape(fan_in, fan_out)
            k += fan_in * fan_out
            b = self.data[k:k + fan_out]
            k += fan_out
            out.append((w, b))
        return out

    def layer_index(self) -> list:
        """``(weight_slice, bias_slice)`` per layer into ``data``."""
        out, k = [], 0
        for fan_in, fan_out in self.shapes:
            ws = slice(k, k + fan_in * fan_out)
            k = ws.stop
            out.append((ws, slice(k, k + fan_out)))
            k += fan_out
        return out

    def copy(self) -> "ParamVector":
        return ParamVector(self.cfg, self.data.copy())

    def with_data(self, data) -> "ParamVector":
        return ParamVector(self.cfg, data)

    def __len__(self):
        return self.size


def init_params(cfg: MlpConfig) -> ParamVector:
    """Uniform Xavier weights (``+-sqrt(6/(fan_in+fan_out))``), zero biases.

    With ``init="siren"`` the first layer is ``U(-1/fan_in, 1/fan_in)`` and
    later layers ``U(+-sqrt(6/fan_in)/omega)`` instead.
    """
    rng = np.random.default_rng(cfg.seed)
    p = ParamVector(cfg)
    for i, ((w, b), (fan_in, fan_out)) in enumerate(zip(p.layers(), p.shapes)):
        if cfg.init == "siren" and i == 0:
            bound = 1.0 / fan_in
        elif cfg.init == "siren" and i < cfg.hidden_layers:
            bound = np.sqrt(6.0 / fan_in) / cfg.omega
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-bound, bound, size=w.shape)
        b[...] = 0.0
    return p


class TimeJet(NamedTuple):
    value: object
    d_dt: object


def run_layers(layers, cfg: MlpConfig, t, with_dt: bool = True):
    """Evaluate the network on a column of inputs.

    ``layers`` is a list of ``(W, b)`` pairs (arrays or Vars).  Returns
    ``(y, dy)`` each of shape ``(N, output_dim)``; ``dy`` is ``None`` when
    ``with_dt`` is false.
    """
    h = np.asarray(t, dtype=float).reshape(-1, 1)
    dh = np.ones_like(h) if with_dt else None
    freqs = cfg.frequencies()
    for (w, b), om in zip(layers[:-1], freqs):
        z = (h @ w + b) * om
        if with_dt:
            dz = (dh @ w) * om
            h, c = ad.sincos(z)
            dh = c * dz
        else:
            h = ad.sin(z)
    w, b = layers[-1]
    y = h @ w + b
    dy = dh @ w if with_dt else None
    return y, dy


def forward(params: ParamVector, cfg: MlpConfig, t) -> np.ndarray:
    scalar = np.ndim(t) == 0
    y, _ = run_layers(params.layers(), cfg, t, with_dt=False)
    return y[0] if scalar else y


def forward_with_dt(params: ParamVector, cfg: MlpConfig, t) -> list:
    """Per-output :class:`TimeJet` of the network and its input derivative."""
    scalar = np.ndim(t) == 0
    y, dy = run_layers(params.layers(), cfg, t, with_dt=True)
    if scalar:
        y, dy = y[0], dy[0]
    return [TimeJet(y[..., k], dy[..., k]) for k in range(cfg.output_dim)]


def hidden_activations(params: ParamVector, cfg: MlpConfig, t) -> list:
    h = np.asarray(t, dtype=float).reshape(-1, 1)
    acts = []
    for (w, b), om in zip(params.layers()[:-1], cfg.frequencies()):
        h = np.sin((h @ w + b) * om)
        acts.append(h)
    return acts


class ParamTape:
    """Leaf :class:`Var` per weight/bias block for one taped evaluation."""

    def __init__(self, params: ParamVector):
        self.params = params
        self.leaves = []
        self.layers = []
        for w, b in params.layers():
            wv, bv = ad.Var(w.copy()), ad.Var(b.copy())
            self.leaves += [wv, bv]
            self.layers.append((wv, bv))

    def run(self, t, with_dt: bool = True):
        return run_layers(self.layers, self.params.cfg, t, with_dt)

    def gradient(self, loss: ad.Var) -> np.ndarray:
        """Reverse pass from ``loss``; returns a flat gradient aligned with ``params.data``."""
        grads = ad.grad_of(loss, self.leaves)
        return np.concatenate([g.reshape(-1) for g in grads])


def backward(loss: ad.Var, tape: ParamTape) -> ParamVector:
    return tape.params.with_data(tape.gradient(loss))
