"""Wind-aware A* on an 8-connected lattice, followed by cubic-spline smoothing.

Grid nodes sit at ``(xmin + i*cell, ymin + j*cell)``.  A node is blocked
when it lies strictly inside an obstacle; an edge is additionally refused
when the straight segment between its nodes enters an obstacle, so the
waypoint polyline itself is always collision free.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import wind_at
from .environment import Scenario, barrier_phi, min_signed_distance
from .trajectory import TrajectoryRecord

SQRT2 = math.sqrt(2.0)
MOVES = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]


class NoPathError(RuntimeError):
    pass


@dataclass(frozen=True)
class AstarConfig:
    cell: float = 0.25
    v_ref: float = 1.5
    alpha: float = 0.01
    gamma: float = 0.02
    dt: float = 0.01            # resampling step of the smoothed trajectory
    max_refinements: int = 8

    def __post_init__(self):
        if not self.cell > 0:
            raise ValueError("cell size must be positive")
        if not self.v_ref > 0:
            raise ValueError("v_ref must be positive")


class GridSpec:
    def __init__(self, scenario: Scenario, cell: float = 0.25):
        if not cell > 0:
            raise ValueError("cell size must be positive")
        b = scenario.bounds
        self.cell = cell
        self.x0, self.y0 = b.xmin, b.ymin
        self.nx = int(math.floor((b.xmax - b.xmin) / cell + 1e-9)) + 1
        self.ny = int(math.floor((b.ymax - b.ymin) / cell + 1e-9)) + 1
        self.start = self.cell_of(scenario.start[0], scenario.start[1])
        self.goal = self.cell_of(scenario.goal[0], scenario.goal[1])

    @property
    def width(self) -> int:
        return self.nx

    @property
    def height(self) -> int:
        return self.ny

    def cell_of(self, x: float, y: float) -> tuple:
        i = int(round((x - self.x0) / self.cell))
        j = int(round((y - self.y0) / self.cell))
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise ValueError(f"point ({x}, {y}) is off the grid")
        return i, j

    def center(self, c: tuple) -> tuple:
        return self.x0 + c[0] * self.cell, self.y0 + c[1] * self.cell

    def inside(self, c: tuple) -> bool:
        return 0 <= c[0] < self.nx and 0 <= c[1] < self.ny


def octile(a: tuple, b: tuple) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1) * min(dx, dy)


def _segment_clearance(obstacles, p, q) -> float:
    """Smallest signed distance from segment ``pq`` to any obstacle."""
    px, py = p
    qx, qy = q
    best = math.inf
    for o in obstacles:
        ex, ey = qx - px, qy - py
        L2 = ex * ex + ey * ey
        s = 0.0 if L2 == 0 else min(1.0, max(0.0, ((o.cx - px) * ex + (o.cy - py) * ey) / L2))
        best = min(best, math.hypot(px + s * ex - o.cx, py + s * ey - o.cy) - o.r)
    return best


def edge_cost(a: tuple, b: tuple, t_est: float, scenario: Scenario, cfg: AstarConfig,
              grid: GridSpec | None = None) -> float:
    """``dt + alpha |u|^2 + gamma Phi(midpoint)`` for the move ``a -> b``.

    ``u`` is the steady acceleration that holds speed ``v_ref`` along the
    edge against drag and the wind at the midpoint, ``u = c_d v - W``.
    """
    if max(abs(a[0] - b[0]), abs(a[1] - b[1])) != 1:
        raise ValueError("cells are not 8-neighbours")
    cell = grid.cell if grid is not None else cfg.cell
    pa = grid.center(a) if grid is not None else (a[0] * cell, a[1] * cell)
    pb = grid.center(b) if grid is not None else (b[0] * cell, b[1] * cell)
    return _edge_cost_xy(pa, pb, t_est, scenario, cfg)


def _edge_cost_xy(pa, pb, t_est, scenario: Scenario, cfg: AstarConfig, phi_mid=None) -> float:
    dx, dy = pb[0] - pa[0], pb[1] - pa[1]
    length = math.hypot(dx, dy)
    delta_t = length / cfg.v_ref
    mx, my = 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])
    wx, wy = wind_at(scenario.dynamics.wind, mx, my, t_est)
    c_d = scenario.dynamics.c_d
    ux = c_d * cfg.v_ref * dx / length - float(wx)
    uy = c_d * cfg.v_ref * dy / length - float(wy)
    if phi_mid is None:
        phi_mid = float(barrier_phi(scenario.obstacles, scenario.barrier, mx, my))
    return delta_t + cfg.alpha * (ux * ux + uy * uy) + cfg.gamma * phi_mid


class _Graph:
    """Blocked-node mask and per-edge barrier values, computed once."""

    def __init__(self, scenario: Scenario, grid: GridSpec):
        self.scenario = scenario
        self.grid = grid
        xs = grid.x0 + grid.cell * np.arange(grid.nx)
        ys = grid.y0 + grid.cell * np.arange(grid.ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        self.blocked = np.zeros(X.shape, dtype=bool)
        for o in scenario.obstacles:
            self.blocked |= np.hypot(X - o.cx, Y - o.cy) < o.r
        self._phi = {}
        self._ok = {}

    def neighbours(self, c: tuple):
        g = self.grid
        for di, dj in MOVES:
            n = (c[0] + di, c[1] + dj)
            if not g.inside(n) or self.blocked[n]:
                continue
            key = (min(c, n), max(c, n))
            ok = self._ok.get(key)
            if ok is None:
                ok = _segment_clearance(self.scenario.obstacles, g.center(c), g.center(n)) > 0
                self._ok[key] = ok
            if ok:
                yield n

    def cost(self, a: tuple, b: tuple, t_est: float, cfg: AstarConfig) -> float:
        key = (min(a, b), max(a, b))
        phi = self._phi.get(key)
        pa, pb = self.grid.center(a), self.grid.center(b)
        if phi is None:
            mx, my = 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])
            phi = float(barrier_phi(self.scenario.obstacles, self.scenario.barrier, mx, my))
            self._phi[key] = phi
        return _edge_cost_xy(pa, pb, t_est, self.scenario, cfg, phi)


@dataclass
class GridPath:
    cells: list
    waypoints: np.ndarray
    cost: float
    expanded: int = 0

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.waypoints, axis=0).T)))


def astar_search(scenario: Scenario, grid: GridSpec | None = None, cfg: AstarConfig | None = None,
                 use_heuristic: bool = True) -> GridPath:
    """Least-cost lattice path from start to goal.

    The wind in each edge cost is frozen at the estimated arrival time at
    the edge's tail (accumulated traversal time along the best path).  The
    heuristic is octile distance over ``v_ref``, a lower bound on the
    remaining traversal time; ``use_heuristic=False`` gives Dijkstra.
    """
    cfg = cfg or AstarConfig()
    grid = grid or GridSpec(scenario, cfg.cell)
    graph = _Graph(scenario, grid)
    start, goal = grid.start, grid.goal
    for label, c in (("start", start), ("goal", goal)):
        if graph.blocked[c]:
            raise NoPathError(f"{label} cell is blocked")

    h_scale = grid.cell / cfg.v_ref if use_heuristic else 0.0
    g_cost = {start: 0.0}
    t_arr = {start: 0.0}
    parent = {start: None}
    closed = set()
    counter = 0
    heap = [(h_scale * octile(start, goal), counter, start)]
    while heap:
        _, _, c = heapq.heappop(heap)
        if c in closed:
            continue
        closed.add(c)
        if c == goal:
            break
        for n in graph.neighbours(c):
            if n in closed:
                continue
            step = graph.cost(c, n, t_arr[c], cfg)
            g_new = g_cost[c] + step
            if g_new < g_cost.get(n, math.inf):
                g_cost[n] = g_new
                t_arr[n] = t_arr[c] + grid.cell * (SQRT2 if c[0] != n[0] and c[1] != n[1] else 1.0) / cfg.v_ref
                parent[n] = c
                counter += 1
                heapq.heappush(heap, (g_new + h_scale * octile(n, goal), counter, n))
    else:
        raise NoPathError("goal is unreachable")

    cells = []
    c = goal
    while c is not None:
        cells.append(c)
        c = parent[c]
    cells.reverse()
    pts = np.array([grid.center(c) for c in cells], dtype=float)
    pts[0] = scenario.start[:2]
    pts[-1] = scenario.goal[:2]
    return GridPath(cells, pts, g_cost[goal], expanded=len(closed))


def _densify(points: np.ndarray, bad_knots: set) -> np.ndarray:
    out = [points[0]]
    for k in range(1, len(points)):
        if k in bad_knots or k - 1 in bad_knots:
            out.append(0.5 * (points[k - 1] + points[k]))
        out.append(points[k])
    return np.array(out)


def _spline_samples(points: np.ndarray, scenario: Scenario, cfg: AstarConfig):
    seg = np.hypot(*np.diff(points, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if len(points) == 2:
        spline = CubicSpline(s, points, bc_type=((2, np.zeros(2)), (2, np.zeros(2))))
    else:
        spline = CubicSpline(s, points, bc_type="natural")
    T = s[-1] / cfg.v_ref
    n = max(int(math.ceil(T / cfg.dt)), 2) + 1
    t = np.linspace(0.0, T, n)
    ss = t * cfg.v_ref
    return t, ss, s, spline


def smooth_spline(path, scenario: Scenario, cfg: AstarConfig | None = None) -> TrajectoryRecord:
    """Natural cubic spline through the waypoints, flown at constant ``v_ref``.

    The spline is parameterised by cumulative chord length ``s`` and timed
    as ``t = s / v_ref``.  Controls come from inverting the dynamics,
    ``u = a + c_d v - W(x, y, t)``.  If the spline cuts into an obstacle,
    midpoints are inserted around the offending knots and the fit repeated.
    """
    cfg = cfg or AstarConfig()
    points = np.asarray(path.waypoints if isinstance(path, GridPath) else path, dtype=float)
    if len(points) < 2:
        raise ValueError("need at least 2 waypoints")
    # drop repeated points (zero chord length)
    keep = np.concatenate([[True], np.hypot(*np.diff(points, axis=0).T) > 0])
    points = points[keep]

    for _ in range(cfg.max_refinements + 1):
        t, ss, knots, spline = _spline_samples(points, scenario, cfg)
        pos = spline(ss)
        if min_signed_distance(scenario.obstacles, pos[:, 0], pos[:, 1]) > 0:
            break
        d = np.min([np.hypot(pos[:, 0] - o.cx, pos[:, 1] - o.cy) - o.r for o in scenario.obstacles], axis=0)
        bad_s = ss[d <= 0]
        bad = set(np.searchsorted(knots, bad_s).tolist())
        bad |= {b - 1 for b in bad}
        points = _densify(points, bad)
    else:
        raise NoPathError("spline smoothing could not clear the obstacles")

    vel = spline(ss, 1) * cfg.v_ref
    acc = spline(ss, 2) * cfg.v_ref ** 2
    wx, wy = wind_at(scenario.dynamics.wind, pos[:, 0], pos[:, 1], t)
    c_d = scenario.dynamics.c_d
    u = np.column_stack([acc[:, 0] + c_d * vel[:, 0] - wx, acc[:, 1] + c_d * vel[:, 1] - wy])
    states = np.column_stack([pos, vel])
    return TrajectoryRecord.from_arrays(t, states, u, source="astar",
                                        meta={"waypoints": len(points)})


def plan(scenario: Scenario, cfg: AstarConfig | None = None) -> TrajectoryRecord:
    cfg = cfg or AstarConfig()
    path = astar_search(scenario, GridSpec(scenario, cfg.cell), cfg)
    tr = smooth_spline(path, scenario, cfg)
    tr.meta.update(grid_cost=path.cost, grid_length=path.length)
    return tr
