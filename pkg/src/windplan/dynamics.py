"""Planar point-mass UAV with linear drag in a time-varying wind field.

State is ``(x, y, vx, vy)``, control is a commanded acceleration ``(ux, uy)``.
All functions broadcast over leading axes, so a batch of states with shape
``(k, 4)`` can be propagated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .trajectory import TrajectoryRecord


class DivergenceError(RuntimeError):
    """Raised when an integrated state stops being finite."""


class State(NamedTuple):
    x: float
    y: float
    vx: float
    vy: float


class Control(NamedTuple):
    ux: float
    uy: float


@dataclass(frozen=True)
class WindParams:
    A_x: float = 0.0
    A_y: float = 0.0
    L_x: float = 10.0
    L_y: float = 10.0

    def __post_init__(self):
        if not (self.L_x > 0 and self.L_y > 0):
            raise ValueError("wind length scales L_x, L_y must be positive")


@dataclass(frozen=True)
class DynamicsParams:
    c_d: float = 0.3
    wind: WindParams = field(default_factory=WindParams)

    def __post_init__(self):
        if not self.c_d > 0:
            raise ValueError("drag coefficient c_d must be positive")


def wind_at(p: WindParams, x, y, t):
    """Wind acceleration ``(Wx, Wy)``; period 1 s in ``t``."""
    wx = p.A_x * np.sin(np.pi * np.asarray(y) / p.L_y) * np.cos(2 * np.pi * np.asarray(t))
    wy = p.A_y * np.sin(np.pi * np.asarray(x) / p.L_x) * np.sin(2 * np.pi * np.asarray(t))
    return wx, wy


def state_derivative(s, u, t, p: DynamicsParams) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    wx, wy = wind_at(p.wind, s[..., 0], s[..., 1], t)
    return np.stack([
        s[..., 2],
        s[..., 3],
        u[..., 0] - p.c_d * s[..., 2] + wx,
        u[..., 1] - p.c_d * s[..., 3] + wy,
    ], axis=-1)


def rk4_step(s, u, t: float, dt: float, p: DynamicsParams) -> np.ndarray:
    """One classical RK4 step with ``u`` held over ``[t, t + dt]``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = np.asarray(s, dtype=float)
    k1 = state_derivative(s, u, t, p)
    k2 = state_derivative(s + 0.5 * dt * k1, u, t + 0.5 * dt, p)
    k3 = state_derivative(s + 0.5 * dt * k2, u, t + 0.5 * dt, p)
    k4 = state_derivative(s + dt * k3, u, t + dt, p)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(s0, u, t0: float, duration: float, dt: float, p: DynamicsParams):
    """Hold control ``u`` for ``duration``; returns the sample times and states.

    ``s0`` and ``u`` may carry a leading batch axis.  ``duration`` must be an
    integer multiple of ``dt`` (to rounding).
    """
    n = int(round(duration / dt))
    if n < 1 or abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError("duration must be a positive multiple of dt")
    s = np.asarray(s0, dtype=float)
    out = np.empty((n + 1,) + s.shape)
    out[0] = s
    for i in range(n):
        s = rk4_step(s, u, t0 + i * dt, dt, p)
        out[i + 1] = s
    return t0 + dt * np.arange(n + 1), out


def simulate(s0, controls, p: DynamicsParams, dt: float = 0.01, t0: float = 0.0,
             source: str = "sim") -> TrajectoryRecord:
    """Roll out a zero-order-hold control schedule.

    ``controls`` has shape ``(n, 2)``: row ``i`` is applied over
    ``[t0 + i*dt, t0 + (i+1)*dt]``.  The record has ``n + 1`` samples; the
    final sample repeats the last control.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    if len(controls) == 0:
        raise ValueError("control schedule is empty")
    n = len(controls)
    states = np.empty((n + 1, 4))
    states[0] = np.asarray(s0, dtype=float)
    for i in range(n):
        states[i + 1] = rk4_step(states[i], controls[i], t0 + i * dt, dt, p)
        if not np.all(np.isfinite(states[i + 1])):
            raise DivergenceError(f"state became non-finite at step {i + 1}")
    t = t0 + dt * np.arange(n + 1)
    return TrajectoryRecord.from_arrays(t, states, np.vstack([controls, controls[-1:]]), source=source)
