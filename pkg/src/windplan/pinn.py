"""Physics-informed trajectory planner.

A sine MLP maps normalised time ``tau in [0, 1]`` to
``(x, y, vx, vy, ux, uy)``.  Physical time is ``t = tau * T`` so every
physical derivative is ``(1/T) d/dtau``.  Training minimises

    lam_phys(epoch) * L_phys + lam_bc * L_bc + lam_obj(epoch) * L_obj

with Adam, where ``L_phys`` is the mean squared dynamics residual at random
collocation times, ``L_bc`` the squared endpoint-state error, and ``L_obj``
the trapezoidal integral of ``alpha |u|^2 + beta |du/dt|^2 + gamma Phi``.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .diffnet import autodiff as ad
from .diffnet import checkpoint
from .diffnet.adam import AdamState, adam_step
from .diffnet.mlp import MlpConfig, ParamTape, ParamVector, init_params, run_layers
from .environment import Scenario
from .trajectory import TrajectoryRecord, format_float

X, Y, VX, VY, UX, UY = range(6)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class LossWeights:
    lambda_phys: float = 10.0
    lambda_bc: float = 10.0
    lambda_obj: float = 0.1
    alpha: float = 0.01
    beta: float = 0.001
    gamma: float = 1.0
    delta: float = 0.0  # flight-time weight; reported only, T is fixed

    def __post_init__(self):
        vals = (self.lambda_phys, self.lambda_bc, self.lambda_obj, self.alpha, self.beta, self.gamma, self.delta)
        if any(v < 0 for v in vals):
            raise ValueError("loss weights must be non-negative")
        if self.lambda_phys == self.lambda_bc == self.lambda_obj == 0:
            raise ValueError("at least one outer loss weight must be positive")


@dataclass(frozen=True)
class CurriculumSchedule:
    """Linear ramp of the physics/objective multipliers from ``start`` to 1."""

    epochs: int = 6000
    start: float = 0.1
    ramp_fraction: float = 0.5

    def __post_init__(self):
        if not 0 <= self.start <= 1:
            raise ValueError("ramp start must lie in [0, 1]")

    def multiplier(self, epoch: int) -> float:
        ramp_end = self.ramp_fraction * self.epochs
        if ramp_end <= 0 or epoch >= ramp_end:
            return 1.0
        return self.start + (1.0 - self.start) * max(epoch, 0) / ramp_end

    def phys(self, epoch: int) -> float:
        return self.multiplier(epoch)

    def obj(self, epoch: int) -> float:
        return self.multiplier(epoch)


CONSTANT = CurriculumSchedule(start=1.0, ramp_fraction=0.0)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 6000
    collocation_points: int = 2048
    lr: float = 1e-3
    seed: int = 0
    checkpoint_interval: int = 0
    quad_nodes: int = 256
    net: MlpConfig = field(default_factory=MlpConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.collocation_points < 2:
            raise ValueError("collocation_points must be >= 2")
        if self.quad_nodes < 2:
            raise ValueError("quad_nodes must be >= 2")

    def net_config(self) -> MlpConfig:
        return replace(self.net, seed=self.seed)


@dataclass
class TrainReport:
    L_phys: np.ndarray
    L_bc: np.ndarray
    L_obj: np.ndarray
    L_total: np.ndarray
    weights: LossWeights
    wall_time: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.L_total)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epoch,L_phys,L_bc,L_obj,L_total\n")
        for i in range(self.epochs):
            row = (self.L_phys[i], self.L_bc[i], self.L_obj[i], self.L_total[i])
            buf.write(f"{i}," + ",".join(format_float(v) for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, weights: LossWeights | None = None) -> "TrainReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        col = lambda k: np.array([float(r[k]) for r in rows])
        return cls(col("L_phys"), col("L_bc"), col("L_obj"), col("L_total"), weights or LossWeights())


# --- loss terms over network outputs --------------------------------------
#
# ``out`` and ``dout`` are sequences of six columns (numpy arrays or Vars):
# the network outputs and their d/dtau.

def residuals(out, dout, tau, scenario: Scenario):
    """Dynamics residuals ``(r1, r2, r3, r4)`` in physical units."""
    T = scenario.horizon_T
    c_d = scenario.dynamics.c_d
    w = scenario.dynamics.wind
    t = np.asarray(tau, dtype=float) * T
    wx = ad.sin(out[Y] * (np.pi / w.L_y)) * (w.A_x * np.cos(2 * np.pi * t))
    wy = ad.sin(out[X] * (np.pi / w.L_x)) * (w.A_y * np.sin(2 * np.pi * t))
    inv_T = 1.0 / T
    r1 = dout[X] * inv_T - out[VX]
    r2 = dout[Y] * inv_T - out[VY]
    r3 = dout[VX] * inv_T - (out[UX] - out[VX] * c_d + wx)
    r4 = dout[VY] * inv_T - (out[UY] - out[VY] * c_d + wy)
    return r1, r2, r3, r4


def phys_term(out, dout, tau, scenario: Scenario):
    r1, r2, r3, r4 = residuals(out, dout, tau, scenario)
    sq = r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4
    return sq.mean() if isinstance(sq, ad.Var) else float(np.mean(sq))


def bc_term(out0, out1, scenario: Scenario):
    total = 0.0
    for k in range(4):
        e0 = out0[k] - scenario.start[k]
        e1 = out1[k] - scenario.goal[k]
        total = e0 * e0 + e1 * e1 + total
    return total


def barrier_term(x, y, scenario: Scenario):
    bp = scenario.barrier
    phi = 0.0
    for o in scenario.obstacles:
        dx = x - o.cx
        dy = y - o.cy
        d = ad.sqrt(dx * dx + dy * dy) - o.r
        phi = (d * d + bp.eps) ** -1 + ad.softplus(d * (-bp.alpha)) + phi
    return phi


def trapezoid_weights(n: int) -> np.ndarray:
    w = np.full(n, 1.0 / (n - 1))
    w[0] = w[-1] = 0.5 / (n - 1)
    return w


def obj_terms(out, dout, weights: LossWeights, scenario: Scenario, quad_w):
    """``(energy, smoothness, risk)`` integrals over tau, unweighted."""
    inv_T = 1.0 / scenario.horizon_T
    ux, uy = out[UX], out[UY]
    dux, duy = dout[UX] * inv_T, dout[UY] * inv_T
    energy = ((ux * ux + uy * uy) * quad_w).sum()
    smooth = ((dux * dux + duy * duy) * quad_w).sum()
    if scenario.obstacles:
        risk = (barrier_term(out[X], out[Y], scenario) * quad_w).sum()
    else:
        risk = 0.0
    return energy, smooth, risk


def obj_term(out, dout, weights: LossWeights, scenario: Scenario, quad_w):
    e, s, r = obj_terms(out, dout, weights, scenario, quad_w)
    return weights.alpha * e + weights.beta * s + weights.gamma * r


def _columns(m, rows=slice(None)):
    return [m[rows, k] for k in range(m.shape[1])]


def _scalar(v) -> float:
    return float(ad.value(v))


# --- public loss API -------------------------------------------------------

def network_outputs(params: ParamVector, tau):
    y, dy = run_layers(params.layers(), params.cfg, tau, with_dt=True)
    return _columns(y), _columns(dy)


def loss_phys(params: ParamVector, scenario: Scenario, tau) -> float:
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if tau.size == 0:
        raise ValueError("collocation batch is empty")
    out, dout = network_outputs(params, tau)
    return phys_term(out, dout, tau, scenario)


def loss_bc(params: ParamVector, scenario: Scenario) -> float:
    out, _ = network_outputs(params, np.array([0.0, 1.0]))
    return _scalar(bc_term([c[0] for c in out], [c[1] for c in out], scenario))


def loss_obj(params: ParamVector, scenario: Scenario, grid, weights: LossWeights | None = None) -> float:
    """Objective integral on ``grid`` (uniform tau nodes, >= 2) or a node count."""
    weights = weights or LossWeights()
    if np.ndim(grid) == 0:
        grid = np.linspace(0.0, 1.0, int(grid))
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ValueError("quadrature grid needs at least 2 nodes")
    out, dout = network_outputs(params, grid)
    quad_w = _trapezoid_on(grid)
    return _scalar(obj_term(out, dout, weights, scenario, quad_w))


def _trapezoid_on(grid: np.ndarray) -> np.ndarray:
    h = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _assemble(out, dout, tau_c, n_c, quad_w, scenario, weights, schedule, epoch):
    """Split one batched evaluation into the three loss terms."""
    sl_c = slice(0, n_c)
    sl_q = slice(n_c + 2, None)
    o_c = [c[sl_c] for c in out]
    d_c = [c[sl_c] for c in dout]
    o_q = [c[sl_q] for c in out]
    d_q = [c[sl_q] for c in dout]
    o_0 = [c[n_c] for c in out]
    o_1 = [c[n_c + 1] for c in out]

    lp = phys_term(o_c, d_c, tau_c, scenario)
    lb = bc_term(o_0, o_1, scenario)
    lo = obj_term(o_q, d_q, weights, scenario, quad_w)
    m_phys = weights.lambda_phys * schedule.phys(epoch)
    m_obj = weights.lambda_obj * schedule.obj(epoch)
    total = lp * m_phys + lb * weights.lambda_bc + lo * m_obj
    return total, {"L_phys": lp, "L_bc": lb, "L_obj": lo,
                   "w_phys": m_phys, "w_bc": weights.lambda_bc, "w_obj": m_obj}


def _batch(tau_c, quad_grid):
    return np.concatenate([tau_c, [0.0, 1.0], quad_grid])


def total_loss(params: ParamVector, scenario: Scenario, weights: LossWeights, epoch: int,
               tau, schedule: CurriculumSchedule = CONSTANT, quad_nodes: int = 256):
    """Weighted total and its components (as floats) at ``epoch``."""
    tau = np.asarray(tau, dtype=float).reshape(-1)
    grid = np.linspace(0.0, 1.0, quad_nodes)
    out, dout = network_outputs(params, _batch(tau, grid))
    total, comps = _assemble(out, dout, tau, tau.size, trapezoid_weights(quad_nodes),
                             scenario, weights, schedule, epoch)
    comps = {k: _scalar(v) for k, v in comps.items()}
    comps["flight_time_penalty"] = weights.delta * scenario.horizon_T
    return _scalar(total), comps


def total_loss_grad(params: ParamVector, scenario: Scenario, weights: LossWeights, epoch: int,
                    tau, schedule: CurriculumSchedule = CONSTANT, quad_nodes: int = 256):
    """Like :func:`total_loss` but also returns the flat parameter gradient."""
    tau = np.asarray(tau, dtype=float).reshape(-1)
    grid = np.linspace(0.0, 1.0, quad_nodes)
    tape = ParamTape(params)
    y, dy = tape.run(_batch(tau, grid))
    total, comps = _assemble(_columns(y), _columns(dy), tau, tau.size, trapezoid_weights(quad_nodes),
                             scenario, weights, schedule, epoch)
    grad = tape.gradient(total)
    comps = {k: _scalar(v) for k, v in comps.items()}
    return _scalar(total), comps, grad


# --- training ----------------------------------------------------------------

def train(scenario: Scenario, cfg: TrainConfig | None = None, weights: LossWeights | None = None,
          schedule: CurriculumSchedule | None = None, params: ParamVector | None = None,
          checkpoint_path=None, log=None):
    """Train from a seeded initialisation; returns ``(params, TrainReport)``.

    Collocation times are redrawn uniformly every epoch from a generator
    seeded with ``cfg.seed``; the objective grid is fixed.
    """
    cfg = cfg or TrainConfig()
    weights = weights or LossWeights()
    schedule = schedule or CurriculumSchedule(epochs=cfg.epochs)
    if params is None:
        params = init_params(cfg.net_config())
    rng = np.random.default_rng(cfg.seed)
    grid = np.linspace(0.0, 1.0, cfg.quad_nodes)
    quad_w = trapezoid_weights(cfg.quad_nodes)
    adam = AdamState.zeros(params.size, lr=cfg.lr)
    hist = np.zeros((cfg.epochs, 4))
    t0 = time.perf_counter()
    data = params.data.copy()

    for epoch in range(cfg.epochs):
        tau = rng.random(cfg.collocation_points)
        tape = ParamTape(params.with_data(data))
        y, dy = tape.run(_batch(tau, grid))
        total, comps = _assemble(_columns(y), _columns(dy), tau, tau.size, quad_w,
                                 scenario, weights, schedule, epoch)
        grad = tape.gradient(total)
        row = [_scalar(comps["L_phys"]), _scalar(comps["L_bc"]), _scalar(comps["L_obj"]), _scalar(total)]
        if not (np.all(np.isfinite(row)) and np.all(np.isfinite(grad))):
            raise TrainingDiverged(f"loss became non-finite at epoch {epoch}")
        hist[epoch] = row
        data, adam = adam_step(adam, data, grad)
        if log is not None and (epoch % 500 == 0 or epoch == cfg.epochs - 1):
            log(f"epoch {epoch:5d}  L_phys {row[0]:.3e}  L_bc {row[1]:.3e}  L_obj {row[2]:.3e}  total {row[3]:.3e}")
        if checkpoint_path and cfg.checkpoint_interval and (epoch + 1) % cfg.checkpoint_interval == 0:
            checkpoint.save(checkpoint_path, params.with_data(data))

    trained = params.with_data(data)
    if checkpoint_path:
        checkpoint.save(checkpoint_path, trained)
    report = TrainReport(hist[:, 0], hist[:, 1], hist[:, 2], hist[:, 3], weights,
                         wall_time=time.perf_counter() - t0)
    return trained, report


def extract_trajectory(params: ParamVector, scenario: Scenario, n_samples: int = 400) -> TrajectoryRecord:
    """Evaluate the network on a uniform tau grid; time column is ``tau * T``."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    tau = np.linspace(0.0, 1.0, n_samples)
    y, _ = run_layers(params.layers(), params.cfg, tau, with_dt=False)
    u_norm = np.hypot(y[:, UX], y[:, UY])
    meta = {"u_max_exceeded": int(np.sum(u_norm > scenario.u_max))}
    return TrajectoryRecord.from_arrays(tau * scenario.horizon_T, y[:, :4], y[:, 4:6], source="pinn", meta=meta)


def trajectory_function(params: ParamVector, scenario: Scenario):
    """Continuous ``t -> (x, y)`` evaluator used for safety-margin refinement."""
    def positions(t):
        y, _ = run_layers(params.layers(), params.cfg, np.asarray(t) / scenario.horizon_T, with_dt=False)
        return y[:, X], y[:, Y]
    return positions


def physics_residual_ms(params: ParamVector, scenario: Scenario, n: int = 2001) -> float:
    """Mean-square residual on a dense uniform tau grid."""
    return loss_phys(params, scenario, np.linspace(0.0, 1.0, n))
