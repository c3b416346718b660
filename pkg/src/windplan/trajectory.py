"""Uniformly sampled state/control time series shared by every planner."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COLUMNS = ("t", "x", "y", "vx", "vy", "ux", "uy")


class TrajectoryError(ValueError):
    pass


def format_float(value: float) -> str:
    # 9 significant digits; "-0" is normalised so identical runs give identical bytes
    text = f"{float(value):.9g}"
    return "0" if text == "-0" else text


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in COLUMNS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        n = len(self.t)
        if any(len(getattr(self, c)) != n for c in COLUMNS):
            raise TrajectoryError("all columns must have the same length")
        if n < 2:
            raise TrajectoryError("a trajectory needs at least 2 samples")
        if not all(np.all(np.isfinite(getattr(self, c))) for c in COLUMNS):
            raise TrajectoryError("trajectory contains non-finite values")
        if np.any(np.diff(self.t) <= 0):
            raise TrajectoryError("time grid must be strictly increasing")

    @classmethod
    def from_arrays(cls, t, states, controls, source: str = "", meta=None) -> "TrajectoryRecord":
        states = np.asarray(states, dtype=float)
        controls = np.asarray(controls, dtype=float)
        return cls(t, states[:, 0], states[:, 1], states[:, 2], states[:, 3],
                   controls[:, 0], controls[:, 1], source=source, meta=dict(meta or {}))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def states(self) -> np.ndarray:
        return np.column_stack([self.x, self.y, self.vx, self.vy])

    @property
    def controls(self) -> np.ndarray:
        return np.column_stack([self.ux, self.uy])

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in COLUMNS])

    def resample(self, n: int) -> "TrajectoryRecord":
        """Linear interpolation of every column onto ``n`` uniform times."""
        if n < 2:
            raise TrajectoryError("need at least 2 samples")
        tt = np.linspace(self.t[0], self.t[-1], n)
        cols = {c: np.interp(tt, self.t, getattr(self, c)) for c in COLUMNS[1:]}
        return TrajectoryRecord(tt, **cols, source=self.source, meta=dict(self.meta))

    def shifted(self, dt: float) -> "TrajectoryRecord":
        cols = {c: getattr(self, c) for c in COLUMNS[1:]}
        return TrajectoryRecord(self.t + dt, **cols, source=self.source, meta=dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        for row in self.as_matrix():
            buf.write(",".join(format_float(v) for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, source: str = "") -> "TrajectoryRecord":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COLUMNS:
            raise TrajectoryError(f"expected header {','.join(COLUMNS)}, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
        if any(len(r) != len(COLUMNS) for r in rows):
            raise TrajectoryError("row with wrong number of columns")
        data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
        return cls(*data.T, source=source)

    @classmethod
    def read_csv(cls, path, source: str = "") -> "TrajectoryRecord":
        path = Path(path)
        if not source:
            source = path.name.removesuffix("_trajectory.csv")
        return cls.from_csv(path.read_text(), source=source)
