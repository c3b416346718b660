"""Five-number trajectory scorecard and cross-planner comparison."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .environment import signed_distance
from .trajectory import TrajectoryRecord, format_float

EVAL_SAMPLES = 400
METRICS = ("E_ctrl", "S_ctrl", "L_path", "T_flight", "d_min")
# d_min is a benefit (larger is better); the rest are costs
BENEFIT = {"d_min"}


def _trapz(f, t) -> float:
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t)))


def flight_time(tr) -> float:
    t = np.asarray(tr.t if isinstance(tr, TrajectoryRecord) else tr, dtype=float)
    if t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return float(t[-1] - t[0])


def energy_index(tr: TrajectoryRecord) -> float:
    """Time-averaged squared control, ``(1/T) int |u|^2 dt``."""
    return _trapz(tr.ux ** 2 + tr.uy ** 2, tr.t) / flight_time(tr)


def control_rate(tr: TrajectoryRecord):
    """``du/dt`` by central differences, one-sided at the ends."""
    if len(tr) < 3:
        raise ValueError("smoothness needs at least 3 samples")
    return np.gradient(tr.ux, tr.t), np.gradient(tr.uy, tr.t)


def smoothness_index(tr: TrajectoryRecord) -> float:
    dux, duy = control_rate(tr)
    return _trapz(dux ** 2 + duy ** 2, tr.t) / flight_time(tr)


def path_length(tr: TrajectoryRecord) -> float:
    return float(np.sum(np.hypot(np.diff(tr.x), np.diff(tr.y))))


def min_safety_margin(tr: TrajectoryRecord, obstacles, position_fn=None, refine: int = 10) -> float:
    """Smallest signed distance over samples and obstacles (``inf`` if none).

    This is a sampled minimum; the continuous minimum can be lower between
    samples.  Given ``position_fn(t) -> (x, y)`` for a continuously
    evaluable trajectory, the neighbourhood of the worst sample is
    resampled ``refine`` times more finely to tighten the estimate.
    """
    if not obstacles:
        return math.inf
    d = np.min([signed_distance(o, tr.x, tr.y) for o in obstacles], axis=0)
    k = int(np.argmin(d))
    best = float(d[k])
    if position_fn is not None and refine > 1:
        lo, hi = tr.t[max(k - 1, 0)], tr.t[min(k + 1, len(tr) - 1)]
        tt = np.linspace(lo, hi, 2 * refine + 1)
        xs, ys = position_fn(tt)
        best = min(best, float(np.min([signed_distance(o, xs, ys) for o in obstacles])))
    return best


@dataclass
class MetricsReport:
    planner: str
    E_ctrl: float
    S_ctrl: float
    L_path: float
    T_flight: float
    d_min: float

    def values(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}


def evaluate(tr: TrajectoryRecord, scenario, planner: str | None = None,
             n_samples: int = EVAL_SAMPLES, position_fn=None) -> MetricsReport:
    """Score ``tr`` after resampling it onto ``n_samples`` uniform times."""
    rs = tr.resample(n_samples) if n_samples else tr
    return MetricsReport(
        planner=planner or tr.source,
        E_ctrl=energy_index(rs),
        S_ctrl=smoothness_index(rs),
        L_path=path_length(rs),
        T_flight=flight_time(rs),
        d_min=min_safety_margin(rs, scenario.obstacles, position_fn),
    )


@dataclass
class Comparison:
    reports: list
    normalized: dict   # planner -> metric -> value in [0, 1]
    ranking: dict      # metric -> planners, best first

    def table(self) -> str:
        head = f"{'planner':10s}" + "".join(f"{m:>12s}" for m in METRICS)
        lines = [head]
        for r in self.reports:
            lines.append(f"{r.planner:10s}" + "".join(
                f"{'n/a' if math.isinf(v) else f'{v:.4g}':>12s}" for v in r.values().values()))
        return "\n".join(lines)


def _normalize(values: list) -> list:
    finite = [v for v in values if math.isfinite(v)]
    top = max(finite) if finite else 0.0
    out = []
    for v in values:
        if not math.isfinite(v) or top <= 0:
            out.append(1.0 if v == top or not math.isfinite(v) else 0.0)
        else:
            out.append(max(v, 0.0) / top)
    return out


def compare(reports) -> Comparison:
    """Divide every metric by its maximum over planners and rank them."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    normalized = {r.planner: {} for r in reports}
    ranking = {}
    for m in METRICS:
        vals = [getattr(r, m) for r in reports]
        for r, n in zip(reports, _normalize(vals)):
            normalized[r.planner][m] = n
        order = sorted(range(len(reports)), key=lambda i: vals[i], reverse=m in BENEFIT)
        ranking[m] = [reports[i].planner for i in order]
    return Comparison(reports, normalized, ranking)


# --- CSV -----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "n/a" if math.isinf(v) else format_float(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    buf.write("planner," + ",".join(METRICS) + "\n")
    for r in reports:
        buf.write(r.planner + "," + ",".join(_fmt(v) for v in r.values().values()) + "\n")
    return buf.getvalue()


def reports_from_csv(text: str) -> list:
    rows = csv.DictReader(io.StringIO(text))
    out = []
    for row in rows:
        vals = [math.inf if row[m] == "n/a" else float(row[m]) for m in METRICS]
        out.append(MetricsReport(row["planner"], *vals))
    return out


def write_reports(path, reports) -> None:
    Path(path).write_text(reports_to_csv(reports))
