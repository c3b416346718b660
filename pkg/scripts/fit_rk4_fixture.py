"""Fit a small sine MLP to an RK4 rollout and store it as a test fixture.

The fitted network is a regression onto simulated states and controls, not a
PINN; the test suite checks that its physics residual is small, which ties
the residual code to the reference integrator.

    python3 scripts/fit_rk4_fixture.py [--steps 15000] [--out tests/data/rk4_fit.ckpt]
"""

import argparse
from pathlib import Path

import numpy as np

from windplan.diffnet import AdamState, MlpConfig, ParamTape, adam_step, checkpoint, init_params
from windplan.dynamics import DynamicsParams, WindParams, simulate

# rollout used by the fixture; tests rebuild the matching scenario from these
HORIZON = 2.0
DT = 0.002
C_D = 0.3
WIND = WindParams(0.5, 0.5, 10.0, 10.0)
START = np.array([1.0, 2.0, 0.5, 0.0])


def rollout():
    t = np.arange(0.0, HORIZON, DT)
    u = np.column_stack([0.8 * np.cos(1.5 * t), 0.6 * np.sin(t) + 0.2])
    return simulate(START, u, DynamicsParams(C_D, WIND), DT, source="rk4")


def fit(steps: int, seed: int = 0, log=print):
    tr = rollout()
    target = np.column_stack([tr.states, tr.controls])
    tau = tr.t / HORIZON
    scale = np.maximum(np.std(target, axis=0), 1e-3)
    cfg = MlpConfig(hidden_layers=3, hidden_width=32, omega0=10.0, seed=seed)
    p = init_params(cfg)
    data = p.data.copy()
    st = AdamState.zeros(p.size, lr=1e-3)
    for k in range(steps):
        tape = ParamTape(p.with_data(data))
        y, _ = tape.run(tau, with_dt=False)
        r = (y - target) * (1.0 / scale)
        loss = (r * r).mean()
        data, st = adam_step(st, data, tape.gradient(loss))
        if k % 1000 == 0 or k == steps - 1:
            log(f"step {k:5d}  scaled mse {float(loss.value):.3e}")
    return p.with_data(data)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=15000)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data" / "rk4_fit.ckpt"))
    args = ap.parse_args()
    params = fit(args.steps)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    checkpoint.save(args.out, params)
    print("wrote", args.out)


if __name__ == "__main__":
    main()
