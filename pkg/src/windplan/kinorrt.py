"""Kinodynamic RRT*: constant-control extensions through the true dynamics.

Each tree edge stores its control and duration, so any edge can be
replayed exactly.  Rewiring re-steers from the new node towards a
neighbour; the neighbour is re-parented only if the re-steered segment
lands within ``rewire_tol`` of its state, and the neighbour's subtree is
then replayed from the landed state.  A rewire is rolled back if the
replay collides, raises any cost, or moves a goal node out of tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsParams, integrate, simulate, wind_at
from .environment import Scenario, barrier_phi, signed_distance
from .trajectory import TrajectoryRecord


class PlanningFailed(RuntimeError):
    def __init__(self, message: str, tree=None):
        super().__init__(message)
        self.tree = tree


@dataclass(frozen=True)
class RrtConfig:
    max_iterations: int = 20000
    segment_dt: float = 0.4
    sim_dt: float = 0.02
    n_controls: int = 16
    goal_tol: float = 0.4
    goal_bias: float = 0.1
    neighbor_radius: float = 1.5
    velocity_weight: float = 0.2
    rewire_tol: float = 0.1
    safety_buffer: float = 0.05
    sample_speed: float = 2.0
    refine_iterations: int = 1500  # keep improving this long after the first solution
    alpha: float = 0.01
    gamma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not self.segment_dt > 0:
            raise ValueError("segment duration must be positive")
        if not self.goal_tol > 0:
            raise ValueError("goal tolerance must be positive")
        if not 0 <= self.goal_bias <= 1:
            raise ValueError("goal bias must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        n = self.segment_dt / self.sim_dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("segment_dt must be a multiple of sim_dt")


@dataclass
class TreeNode:
    state: np.ndarray
    time: float
    parent: int | None = None
    control: np.ndarray = field(default_factory=lambda: np.zeros(2))
    duration: float = 0.0
    cost: float = 0.0
    segment_cost: float = 0.0
    children: list = field(default_factory=list)


def segment_cost(states, controls, scenario: Scenario, dt: float, alpha: float, gamma: float) -> float:
    """Trapezoidal ``int (alpha |u|^2 + gamma Phi(x, y)) dt`` over segment samples."""
    states = np.asarray(states, dtype=float)
    controls = np.broadcast_to(np.asarray(controls, dtype=float), (len(states), 2))
    f = alpha * np.sum(controls ** 2, axis=1)
    if gamma and scenario.obstacles:
        f = f + gamma * barrier_phi(scenario.obstacles, scenario.barrier, states[:, 0], states[:, 1])
    return float(np.sum(0.5 * (f[1:] + f[:-1])) * dt)


def state_distance(a, b, velocity_weight: float = 0.2):
    a = np.asarray(a)
    b = np.asarray(b)
    d = a - b
    return np.hypot(d[..., 0], d[..., 1]) + velocity_weight * np.hypot(d[..., 2], d[..., 3])


def aimed_control(s0, target_xy, t0: float, duration: float, p: DynamicsParams) -> np.ndarray:
    """Constant control reaching ``target_xy`` after ``duration`` if the wind
    stayed at its value at ``(s0, t0)``.  Works on batches of targets."""
    s0 = np.asarray(s0, dtype=float)
    E, G = _drag_factors(p.c_d, duration)
    wx, wy = wind_at(p.wind, s0[0], s0[1], t0)
    a = (np.asarray(target_xy) - s0[:2] - s0[2:] * E) / G
    return a - np.array([wx, wy])


def _drag_factors(c: float, d: float):
    """``E = (1 - e^{-cd})/c`` and ``G = (d - E)/c``, stable as ``c -> 0``."""
    x = c * d
    if x < 1e-4:
        # series; the closed forms cancel catastrophically for light drag
        return d * (1 - x / 2 + x * x / 6), d * d * (0.5 - x / 6 + x * x / 24)
    E = -math.expm1(-x) / c
    return E, (d - E) / c


def _predicted_velocity(s0, u, t0, duration, p: DynamicsParams):
    E, _ = _drag_factors(p.c_d, duration)
    wx, wy = wind_at(p.wind, s0[0], s0[1], t0)
    a = np.asarray(u) + np.array([wx, wy])
    return s0[2:] * math.exp(-p.c_d * duration) + a * E


class KinoRRTStar:
    def __init__(self, scenario: Scenario, cfg: RrtConfig | None = None, audit: bool = False):
        self.sc = scenario
        self.cfg = cfg or RrtConfig()
        self.audit = audit
        self.rng = np.random.default_rng(self.cfg.seed)
        root = TreeNode(np.array(scenario.start, dtype=float), 0.0)
        self.nodes = [root]
        self._states = np.zeros((1024, 4))
        self._states[0] = root.state
        self.goal_nodes = []
        self.best_goal = None
        self.best_history = []
        self.rewires = 0
        self.goal = np.array(scenario.goal, dtype=float)

    # --- geometry / integration -------------------------------------------
    def _rollout(self, s0, controls, t0):
        """Integrate a batch of constant controls; returns ``(times, states[n+1, k, 4])``."""
        controls = np.atleast_2d(controls)
        s = np.broadcast_to(np.asarray(s0, dtype=float), controls.shape[:-1] + (4,)).copy()
        return integrate(s, controls, t0, self.cfg.segment_dt, self.cfg.sim_dt, self.sc.dynamics)

    def _feasible(self, traj) -> np.ndarray:
        """Per-candidate flag: stays in bounds and clear of every obstacle."""
        x, y = traj[..., 0], traj[..., 1]
        ok = np.all(self.sc.bounds.contains(x, y), axis=0)
        for o in self.sc.obstacles:
            ok &= np.all(signed_distance(o, x, y) > self.cfg.safety_buffer, axis=0)
        return ok

    def _clamp(self, u):
        return np.clip(u, -self.sc.u_max, self.sc.u_max)

    def _cost(self, traj, u):
        return segment_cost(traj, u, self.sc, self.cfg.sim_dt, self.cfg.alpha, self.cfg.gamma)

    # --- tree primitives ----------------------------------------------------
    @property
    def states(self) -> np.ndarray:
        return self._states[:len(self.nodes)]

    def _add(self, node: TreeNode) -> int:
        idx = len(self.nodes)
        if idx == len(self._states):
            self._states = np.vstack([self._states, np.zeros_like(self._states)])
        self.nodes.append(node)
        self._states[idx] = node.state
        self.nodes[node.parent].children.append(idx)
        return idx

    def steer(self, i: int, target) -> TreeNode | None:
        """Best of ``n_controls`` random controls plus one aimed control.

        Candidates whose segment leaves the bounds or enters an obstacle
        are discarded; the survivor ending nearest ``target`` wins.
        """
        node = self.nodes[i]
        cfg = self.cfg
        u_rand = self.rng.uniform(-self.sc.u_max, self.sc.u_max, size=(cfg.n_controls, 2))
        u_aim = self._clamp(aimed_control(node.state, np.asarray(target)[:2], node.time,
                                          cfg.segment_dt, self.sc.dynamics))
        controls = np.vstack([u_rand, u_aim])
        _, traj = self._rollout(node.state, controls, node.time)
        ok = self._feasible(traj)
        if not ok.any():
            return None
        dist = state_distance(traj[-1], target, cfg.velocity_weight)
        dist[~ok] = np.inf
        k = int(np.argmin(dist))
        seg = traj[:, k]
        c = self._cost(seg, controls[k])
        return TreeNode(seg[-1].copy(), node.time + cfg.segment_dt, i, controls[k].copy(),
                        cfg.segment_dt, node.cost + c, c)

    def _ancestors(self, i: int) -> set:
        out = set()
        while i is not None:
            out.add(i)
            i = self.nodes[i].parent
        return out

    def _connect(self, i: int, target) -> tuple | None:
        """Deterministic re-steer from node ``i`` towards a full target state.

        Two Newton-style corrections of the aimed control; returns
        ``(control, segment states)`` or ``None`` if infeasible.
        """
        node = self.nodes[i]
        cfg, p = self.cfg, self.sc.dynamics
        gain = 1.0 / _drag_factors(p.c_d, cfg.segment_dt)[1]
        u = aimed_control(node.state, target[:2], node.time, cfg.segment_dt, p)
        for it in range(3):
            u = self._clamp(u)
            _, traj = self._rollout(node.state, u, node.time)
            seg = traj[:, 0]
            if it < 2:
                u = u + gain * (target[:2] - seg[-1, :2])
        if not self._feasible(seg[:, None, :])[0]:
            return None
        return u, seg

    def _replay_subtree(self, j: int, new_state, new_time):
        """Replay the stored controls below ``j``; ``None`` if the move is unacceptable."""
        updates = {}
        stack = [(j, new_state, new_time)]
        while stack:
            k, s, t = stack.pop()
            updates[k] = (s, t)
            for ch in self.nodes[k].children:
                child = self.nodes[ch]
                _, traj = self._rollout(s, child.control, t)
                seg = traj[:, 0]
                if not self._feasible(seg[:, None, :])[0]:
                    return None
                stack.append((ch, seg[-1].copy(), t + child.duration))
        return updates

    def _rewire(self, new: int) -> None:
        cfg = self.cfg
        nn = self.nodes[new]
        pos = self.states[:, :2]
        near = np.flatnonzero(np.hypot(*(pos - nn.state[:2]).T) <= cfg.neighbor_radius)
        banned = self._ancestors(new)
        for j in near:
            j = int(j)
            if j in banned or self.nodes[j].cost <= nn.cost:
                continue
            target = self.nodes[j].state
            # cheap filter: the aimed control must predict a compatible end velocity
            u0 = self._clamp(aimed_control(nn.state, target[:2], nn.time, cfg.segment_dt, self.sc.dynamics))
            v_end = _predicted_velocity(nn.state, u0, nn.time, cfg.segment_dt, self.sc.dynamics)
            if cfg.velocity_weight * np.hypot(*(v_end - target[2:])) > 2 * cfg.rewire_tol:
                continue
            res = self._connect(new, target)
            if res is None:
                continue
            u, seg = res
            if state_distance(seg[-1], target, cfg.velocity_weight) > cfg.rewire_tol:
                continue
            c = self._cost(seg, u)
            if nn.cost + c >= self.nodes[j].cost:
                continue
            self._try_commit_rewire(j, new, u, seg, c)

    def _try_commit_rewire(self, j, new, u, seg, c) -> bool:
        nn = self.nodes[new]
        new_time = nn.time + self.cfg.segment_dt
        updates = self._replay_subtree(j, seg[-1].copy(), new_time)
        if updates is None:
            return False
        # recompute costs top-down along the subtree
        costs = {j: nn.cost + c}
        seg_costs = {j: c}
        order = [j]
        for k in order:
            for ch in self.nodes[k].children:
                s, t = updates[k]
                child = self.nodes[ch]
                _, traj = self._rollout(s, child.control, t)
                sc = self._cost(traj[:, 0], child.control)
                seg_costs[ch] = sc
                costs[ch] = costs[k] + sc
                order.append(ch)
        for k in order:
            if costs[k] > self.nodes[k].cost + 1e-12:
                return False
            if k in self.goal_nodes and not self._at_goal(updates[k][0]):
                return False
        old_parent = self.nodes[j].parent
        self.nodes[old_parent].children.remove(j)
        self.nodes[new].children.append(j)
        node = self.nodes[j]
        node.parent, node.control, node.duration = new, np.asarray(u, dtype=float).copy(), self.cfg.segment_dt
        for k in order:
            s, t = updates[k]
            self.nodes[k].state = s
            self.nodes[k].time = t
            self.nodes[k].cost = costs[k]
            self.nodes[k].segment_cost = seg_costs[k]
            self._states[k] = s
        self.rewires += 1
        return True

    def _at_goal(self, s) -> bool:
        return math.hypot(s[0] - self.goal[0], s[1] - self.goal[1]) <= self.cfg.goal_tol

    def _sample(self):
        cfg = self.cfg
        if self.rng.random() < cfg.goal_bias:
            return self.goal.copy()
        b = self.sc.bounds
        return np.array([self.rng.uniform(b.xmin, b.xmax), self.rng.uniform(b.ymin, b.ymax),
                         *self.rng.uniform(-cfg.sample_speed, cfg.sample_speed, 2)])

    def _update_best(self):
        if self.goal_nodes:
            self.best_goal = min(self.goal_nodes, key=lambda k: (self.nodes[k].cost, k))

    def best_cost(self) -> float:
        return self.nodes[self.best_goal].cost if self.best_goal is not None else math.inf

    def step(self) -> int | None:
        target = self._sample()
        nearest = int(np.argmin(state_distance(self.states, target, self.cfg.velocity_weight)))
        cand = self.steer(nearest, target)
        if cand is None:
            return None
        idx = self._add(cand)
        self._rewire(idx)
        if self._at_goal(cand.state):
            self.goal_nodes.append(idx)
        self._update_best()
        if self.audit:
            check_tree(self)
        return idx

    def run(self):
        cfg = self.cfg
        first = None
        for it in range(cfg.max_iterations):
            self.step()
            self.best_history.append(self.best_cost())
            if self.best_goal is not None and first is None:
                first = it
            if first is not None and it - first >= cfg.refine_iterations:
                break
        self.iterations = len(self.best_history)
        return self

    def path(self) -> list:
        if self.best_goal is None:
            raise PlanningFailed("no goal connection", self)
        out = []
        k = self.best_goal
        while k is not None:
            out.append(k)
            k = self.nodes[k].parent
        return out[::-1]

    def trajectory(self) -> TrajectoryRecord:
        """Replay the best branch at ``sim_dt`` into a uniform record."""
        idx = self.path()
        states = [self.nodes[idx[0]].state[None, :]]
        controls = []
        for k in idx[1:]:
            node = self.nodes[k]
            parent = self.nodes[node.parent]
            n = int(round(node.duration / self.cfg.sim_dt))
            rec = simulate(parent.state, np.tile(node.control, (n, 1)), self.sc.dynamics,
                           self.cfg.sim_dt, t0=parent.time)
            states.append(rec.states[1:])
            controls.append(np.tile(node.control, (n, 1)))
        states = np.vstack(states)
        if len(idx) == 1:
            raise PlanningFailed("start already satisfies the goal tolerance", self)
        controls = np.vstack(controls + [controls[-1][-1:]])
        t = self.cfg.sim_dt * np.arange(len(states))
        return TrajectoryRecord.from_arrays(t, states, controls, source="kinorrt",
                                            meta={"nodes": len(self.nodes), "iterations": self.iterations,
                                                  "rewires": self.rewires, "cost": self.best_cost()})


def check_tree(tree: KinoRRTStar, tol: float = 1e-9) -> None:
    """Assert cost bookkeeping and exact edge replay for every node."""
    root = tree.nodes[0]
    assert root.parent is None and root.cost == 0.0
    for k, node in enumerate(tree.nodes[1:], start=1):
        parent = tree.nodes[node.parent]
        assert k in parent.children
        n = int(round(node.duration / tree.cfg.sim_dt))
        rec = simulate(parent.state, np.tile(node.control, (n, 1)), tree.sc.dynamics,
                       tree.cfg.sim_dt, t0=parent.time)
        assert np.max(np.abs(rec.states[-1] - node.state)) < tol, f"replay mismatch at node {k}"
        c = segment_cost(rec.states, node.control, tree.sc, tree.cfg.sim_dt, tree.cfg.alpha, tree.cfg.gamma)
        assert abs(c - node.segment_cost) <= tol * max(1.0, c), f"segment cost mismatch at node {k}"
        assert abs(node.time - (parent.time + node.duration)) < 1e-12
        assert node.cost >= 0
        assert abs(node.cost - (parent.cost + node.segment_cost)) <= 1e-9 * max(1.0, node.cost)


def plan(scenario: Scenario, cfg: RrtConfig | None = None) -> TrajectoryRecord:
    tree = KinoRRTStar(scenario, cfg).run()
    if tree.best_goal is None:
        raise PlanningFailed(f"no goal connection within {tree.cfg.max_iterations} iterations", tree)
    return tree.trajectory()
