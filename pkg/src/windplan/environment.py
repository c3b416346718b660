"""Circular obstacles, the barrier potential, and scenario files.

Scenario files are INI documents (read with :mod:`configparser`)::

    [scenario]
    schema_version = 1
    name = standard
    horizon_T = 10.0          ; seconds
    u_max = 5.0               ; m/s^2, optional
    bounds = -1, 12, -1, 8    ; xmin, xmax, ymin, ymax, optional
    start = 0, 0              ; x, y[, vx, vy]; velocities default 0
    goal = 10, 6

    [dynamics]
    c_d = 0.3

    [wind]
    A_x = 0.5
    A_y = 0.5
    L_x = 10
    L_y = 10

    [barrier]
    eps = 0.01
    alpha = 10

    [obstacles]
    ; any key name, value = cx, cy, r ; keys are read in file order
    o1 = 3.0, 2.0, 0.8

Every section except ``[scenario]`` is optional.  Overrides are passed as
``{"section.key": value}`` and win over file contents.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import DynamicsParams, WindParams

SCHEMA_VERSION = 1

DEFAULT_BOUNDS = (-1.0, 12.0, -1.0, 8.0)


class ScenarioError(ValueError):
    """Bad scenario document; ``field`` names the offending key when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class Obstacle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("obstacle radius must be positive")


@dataclass(frozen=True)
class BarrierParams:
    eps: float = 0.25
    alpha: float = 10.0

    def __post_init__(self):
        if not (self.eps > 0 and self.alpha > 0):
            raise ValueError("barrier eps and alpha must be positive")


@dataclass(frozen=True)
class Bounds:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def contains(self, x, y):
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)


@dataclass(frozen=True)
class Scenario:
    start: tuple
    goal: tuple
    horizon_T: float
    bounds: Bounds = Bounds(*DEFAULT_BOUNDS)
    obstacles: tuple = ()
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    barrier: BarrierParams = field(default_factory=BarrierParams)
    u_max: float = 5.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        self.validate()

    def validate(self) -> None:
        for label in ("start", "goal"):
            s = getattr(self, label)
            if len(s) != 4 or not np.all(np.isfinite(s)):
                raise ScenarioError("must be 4 finite numbers", label)
            if not self.bounds.contains(s[0], s[1]):
                raise ScenarioError("lies outside the world bounds", label)
            for i, o in enumerate(self.obstacles):
                if signed_distance(o, s[0], s[1]) <= 0:
                    raise ScenarioError(f"lies inside obstacle {i}", label)
        if not self.horizon_T > 0:
            raise ScenarioError("must be positive", "horizon_T")
        if not self.u_max > 0:
            raise ScenarioError("must be positive", "u_max")
        b = self.bounds
        if not (b.xmax > b.xmin and b.ymax > b.ymin):
            raise ScenarioError("empty rectangle", "bounds")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def signed_distance(o: Obstacle, x, y):
    return np.hypot(np.asarray(x) - o.cx, np.asarray(y) - o.cy) - o.r


def softplus(z):
    return np.logaddexp(0.0, z)


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z)))


def barrier_phi(obstacles, bp: BarrierParams, x, y):
    """Sum over obstacles of ``1/(d^2 + eps) + softplus(-alpha d)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for o in obstacles:
        d = signed_distance(o, x, y)
        total = total + 1.0 / (d * d + bp.eps) + softplus(-bp.alpha * d)
    return total


def barrier_grad(obstacles, bp: BarrierParams, x, y):
    """Analytic ``(dPhi/dx, dPhi/dy)``; undefined at an obstacle centre."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    gx = np.zeros(shape)
    gy = np.zeros(shape)
    for o in obstacles:
        dx = x - o.cx
        dy = y - o.cy
        rho = np.hypot(dx, dy)
        if np.any(rho == 0):
            raise ValueError("barrier gradient is undefined at an obstacle centre")
        d = rho - o.r
        dphi_dd = -2.0 * d / (d * d + bp.eps) ** 2 - bp.alpha * _logistic(-bp.alpha * d)
        gx = gx + dphi_dd * dx / rho
        gy = gy + dphi_dd * dy / rho
    return gx, gy


def min_signed_distance(obstacles, x, y) -> float:
    if not obstacles:
        return float("inf")
    return float(min(np.min(signed_distance(o, x, y)) for o in obstacles))


# --- scenario documents ----------------------------------------------------

_KNOWN = {
    "scenario": {"schema_version", "name", "horizon_t", "u_max", "bounds", "start", "goal"},
    "dynamics": {"c_d"},
    "wind": {"a_x", "a_y", "l_x", "l_y"},
    "barrier": {"eps", "alpha"},
}


def _floats(text: str, key: str, sizes) -> tuple:
    try:
        vals = tuple(float(v) for v in str(text).replace(",", " ").split())
    except ValueError:
        raise ScenarioError(f"not a list of numbers: {text!r}", key) from None
    if len(vals) not in sizes:
        raise ScenarioError(f"expected {' or '.join(map(str, sizes))} numbers, got {len(vals)}", key)
    return vals


def _state(text: str, key: str) -> tuple:
    vals = _floats(text, key, (2, 4))
    return vals if len(vals) == 4 else vals + (0.0, 0.0)


def parse_scenario(text: str, overrides: dict | None = None) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"parse error: {exc}") from None

    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if not name:
            raise ScenarioError("override keys look like section.key", key)
        section = section.lower()
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, str(value))

    if not cp.has_section("scenario"):
        raise ScenarioError("missing [scenario] section")
    for section in cp.sections():
        if section == "obstacles":
            continue
        if section not in _KNOWN:
            raise ScenarioError("unknown section", section)
        for key in cp[section]:
            if key not in _KNOWN[section]:
                raise ScenarioError("unknown key", f"{section}.{key}")

    sc = cp["scenario"]
    version = sc.get("schema_version")
    if version is None:
        raise ScenarioError("required", "scenario.schema_version")
    if version.strip() != str(SCHEMA_VERSION):
        raise ScenarioError(f"unsupported version {version!r}", "scenario.schema_version")

    def num(section: str, key: str, default: float) -> float:
        if not cp.has_option(section, key):
            return default
        try:
            return cp.getfloat(section, key)
        except ValueError:
            raise ScenarioError("not a number", f"{section}.{key}") from None

    for req in ("start", "goal", "horizon_t"):
        if req not in sc:
            raise ScenarioError("required", f"scenario.{req}")

    obstacles = []
    if cp.has_section("obstacles"):
        for key, value in cp["obstacles"].items():
            cx, cy, r = _floats(value, f"obstacles.{key}", (3,))
            if not r > 0:
                raise ScenarioError("radius must be positive", f"obstacles.{key}")
            obstacles.append(Obstacle(cx, cy, r))

    try:
        wind = WindParams(num("wind", "a_x", 0.0), num("wind", "a_y", 0.0),
                          num("wind", "l_x", 10.0), num("wind", "l_y", 10.0))
    except ValueError as exc:
        raise ScenarioError(str(exc), "wind") from None
    c_d = num("dynamics", "c_d", 0.3)
    if not c_d > 0:
        raise ScenarioError("must be positive", "dynamics.c_d")
    eps, alpha = num("barrier", "eps", 0.25), num("barrier", "alpha", 10.0)
    if not (eps > 0 and alpha > 0):
        raise ScenarioError("eps and alpha must be positive", "barrier")

    bounds = _floats(sc["bounds"], "scenario.bounds", (4,)) if "bounds" in sc else DEFAULT_BOUNDS
    return Scenario(
        start=_state(sc["start"], "scenario.start"),
        goal=_state(sc["goal"], "scenario.goal"),
        horizon_T=num("scenario", "horizon_t", 0.0),
        bounds=Bounds(*bounds),
        obstacles=tuple(obstacles),
        dynamics=DynamicsParams(c_d, wind),
        barrier=BarrierParams(eps, alpha),
        u_max=num("scenario", "u_max", 5.0),
        name=sc.get("name", "").strip(),
    )


def load_scenario(source, overrides: dict | None = None) -> Scenario:
    """Load from a path, a bundled scenario name (``standard``), or document text."""
    text = None
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        path = Path(source)
        if path.is_file():
            text = path.read_text()
        else:
            stem = path.name.removesuffix(".scenario")
            res = resources.files("windplan.scenarios") / f"{stem}.scenario"
            if not res.is_file():
                raise ScenarioError(f"no such scenario file: {source}")
            text = res.read_text()
    else:
        text = source
    return parse_scenario(text, overrides)


def scenario_to_text(s: Scenario) -> str:
    w = s.dynamics.wind
    lines = [
        "[scenario]",
        f"schema_version = {SCHEMA_VERSION}",
        f"name = {s.name}",
        f"horizon_T = {s.horizon_T!r}",
        f"u_max = {s.u_max!r}",
        "bounds = " + ", ".join(repr(v) for v in (s.bounds.xmin, s.bounds.xmax, s.bounds.ymin, s.bounds.ymax)),
        "start = " + ", ".join(repr(v) for v in s.start),
        "goal = " + ", ".join(repr(v) for v in s.goal),
        "",
        "[dynamics]",
        f"c_d = {s.dynamics.c_d!r}",
        "",
        "[wind]",
        f"A_x = {w.A_x!r}", f"A_y = {w.A_y!r}", f"L_x = {w.L_x!r}", f"L_y = {w.L_y!r}",
        "",
        "[barrier]",
        f"eps = {s.barrier.eps!r}",
        f"alpha = {s.barrier.alpha!r}",
        "",
        "[obstacles]",
    ]
    lines += [f"o{i + 1} = {o.cx!r}, {o.cy!r}, {o.r!r}" for i, o in enumerate(s.obstacles)]
    return "\n".join(lines) + "\n"
