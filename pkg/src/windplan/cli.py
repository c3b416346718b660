"""``windplan plan|compare|plot`` command-line entry point.

Exit codes: 0 success, 1 planner failure, 2 usage or configuration error.

``--set KEY=VALUE`` overrides, highest precedence first: command line, then
the scenario file, then built-in defaults.  Keys in the ``scenario``,
``dynamics``, ``wind`` and ``barrier`` sections edit the scenario; keys
prefixed ``pinn.``, ``net.``, ``weights.``, ``astar.`` or ``kinorrt.``
edit the planner configurations (``pinn.epochs=500``, ``astar.cell=0.5``).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from . import astar, kinorrt, metrics, pinn, svg
from .diffnet import checkpoint
from .environment import ScenarioError, load_scenario
from .trajectory import TrajectoryError, TrajectoryRecord

PLANNERS = ("pinn", "astar", "kinorrt")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PLANNER_SECTIONS = {"pinn", "net", "weights", "astar", "kinorrt"}


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunManifest:
    scenario: str = "standard"
    planners: tuple = PLANNERS
    seed: int = 0
    out: Path = Path(".")
    overrides: dict = dataclasses.field(default_factory=dict)

    def split_overrides(self):
        scen, planner = {}, {}
        for key, value in self.overrides.items():
            section = key.partition(".")[0].lower()
            (planner if section in PLANNER_SECTIONS else scen)[key] = value
        return scen, planner


def _coerce(cls, overrides: dict, prefix: str, base=None):
    """Apply ``prefix.field=value`` strings to a dataclass instance."""
    obj = base if base is not None else cls()
    kinds = {f.name: f.type for f in dataclasses.fields(cls)}
    changes = {}
    for key, raw in overrides.items():
        section, _, name = key.partition(".")
        if section.lower() != prefix:
            continue
        if name not in kinds:
            raise ConfigError(f"unknown setting {key}")
        current = getattr(obj, name)
        try:
            if isinstance(current, bool):
                val = str(raw).lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                val = int(raw)
            elif isinstance(current, float):
                val = float(raw)
            else:
                val = str(raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
        changes[name] = val
    try:
        return dataclasses.replace(obj, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _configs(m: RunManifest):
    _, over = m.split_overrides()
    net = _coerce(pinn.MlpConfig, over, "net")
    train = _coerce(pinn.TrainConfig, over, "pinn", pinn.TrainConfig(seed=m.seed, net=net))
    weights = _coerce(pinn.LossWeights, over, "weights")
    a_cfg = _coerce(astar.AstarConfig, over, "astar")
    r_cfg = _coerce(kinorrt.RrtConfig, over, "kinorrt", kinorrt.RrtConfig(seed=m.seed))
    return train, weights, a_cfg, r_cfg


def run_planner(name: str, scenario, m: RunManifest, log) -> TrajectoryRecord:
    train, weights, a_cfg, r_cfg = _configs(m)
    out = Path(m.out)
    if name == "pinn":
        params, report = pinn.train(scenario, train, weights, checkpoint_path=out / "pinn.ckpt", log=log)
        report.write_csv(out / "train_report.csv")
        tr = pinn.extract_trajectory(params, scenario, metrics.EVAL_SAMPLES)
        log(f"final losses: L_phys {report.L_phys[-1]:.6g} L_bc {report.L_bc[-1]:.6g} "
            f"L_obj {report.L_obj[-1]:.6g}")
        if tr.meta["u_max_exceeded"]:
            log(f"warning: {tr.meta['u_max_exceeded']} samples exceed u_max={scenario.u_max}")
        return tr
    if name == "astar":
        tr = astar.plan(scenario, a_cfg)
        log(f"grid cost {tr.meta['grid_cost']:.6g}, grid path length {tr.meta['grid_length']:.6g} m")
        return tr
    if name == "kinorrt":
        tr = kinorrt.plan(scenario, r_cfg)
        log(f"tree nodes {tr.meta['nodes']}, iterations {tr.meta['iterations']}, "
            f"rewires {tr.meta['rewires']}, cost {tr.meta['cost']:.6g}")
        return tr
    raise ConfigError(f"unknown planner {name}")


PLANNER_ERRORS = (astar.NoPathError, kinorrt.PlanningFailed, pinn.TrainingDiverged)


def _planner_log(out: Path, name: str):
    lines = []

    def log(msg: str):
        lines.append(msg)
        print(f"[{name}] {msg}", file=sys.stderr)

    def flush():
        (out / f"{name}.log").write_text("\n".join(lines) + "\n")
    return log, flush


def cmd_plan(m: RunManifest, scenario) -> int:
    status = EXIT_OK
    for name in m.planners:
        log, flush = _planner_log(m.out, name)
        t0 = time.perf_counter()
        try:
            tr = run_planner(name, scenario, m, log)
        except PLANNER_ERRORS as exc:
            log(f"planner failed: {exc}")
            status = EXIT_FAIL
        else:
            tr.write_csv(m.out / f"{name}_trajectory.csv")
            log(f"wrote {name}_trajectory.csv ({len(tr)} samples)")
        flush()
        print(f"[{name}] done in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return status


def _position_fn(name: str, out: Path, scenario):
    ck = out / "pinn.ckpt"
    if name == "pinn" and ck.is_file():
        return pinn.trajectory_function(checkpoint.load(ck), scenario)
    return None


def cmd_compare(m: RunManifest, scenario) -> int:
    if len(m.planners) < 2:
        raise ConfigError("compare needs at least two planners")
    reports = []
    for name in m.planners:
        path = m.out / f"{name}_trajectory.csv"
        if not path.is_file():
            status = cmd_plan(dataclasses.replace(m, planners=(name,)), scenario)
            if status != EXIT_OK or not path.is_file():
                print(f"error: missing trajectory for {name}", file=sys.stderr)
                return EXIT_FAIL
        tr = TrajectoryRecord.read_csv(path, source=name)
        reports.append(metrics.evaluate(tr, scenario, name, position_fn=_position_fn(name, m.out, scenario)))
    metrics.write_reports(m.out / "metrics.csv", reports)
    cmp = metrics.compare(reports)
    (m.out / "comparison.svg").write_text(svg.comparison_chart(cmp))
    print(cmp.table())
    return EXIT_OK


def cmd_plot(m: RunManifest, scenario, paths) -> int:
    if paths:
        files = [Path(p) for p in paths]
    else:
        files = [m.out / f"{p}_trajectory.csv" for p in m.planners if (m.out / f"{p}_trajectory.csv").is_file()]
    records = [TrajectoryRecord.read_csv(f) for f in files]
    (m.out / "trajectories.svg").write_text(svg.trajectory_figure(scenario, records))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="windplan", description="Wind-aware UAV trajectory planning.")
    ap.add_argument("command", choices=("plan", "compare", "plot"))
    ap.add_argument("--scenario", default="standard",
                    help="scenario file, or the name of a bundled scenario (standard, dense)")
    ap.add_argument("--planner", action="append", choices=PLANNERS, dest="planners",
                    help="planner to run; repeatable (default: all three)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    ap.add_argument("--trajectory", action="append", default=[], metavar="CSV",
                    help="plot: trajectory CSV to draw (default: planner CSVs in --out)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    overrides = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            ap.error(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_USAGE
    m = RunManifest(args.scenario, tuple(args.planners or PLANNERS), args.seed, out, overrides)
    try:
        scen_over, _ = m.split_overrides()
        scenario = load_scenario(m.scenario, scen_over)
        _configs(m)
        if args.command == "plan":
            return cmd_plan(m, scenario)
        if args.command == "compare":
            return cmd_compare(m, scenario)
        return cmd_plot(m, scenario, args.trajectory)
    except (ScenarioError, ConfigError, TrajectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
