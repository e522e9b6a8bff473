#!/usr/bin/env python3
"""PID and its ANFIS clone side by side, nominal run plus a load step."""
import warnings

import numpy as np

from mqbqr.config import load, preset_path
from mqbqr.control import (AnfisController, ProfileStep, clone_pid, closed_loop_simulate,
                           nominal_pid)
from mqbqr.control.closed_loop import write_closed_loop_csv

warnings.simplefilter("ignore", RuntimeWarning)
p = load(preset_path("table3_sim")).params
Vref, T = 52.0, 2.0
pid = nominal_pid(p, Vref)
pid_run = closed_loop_simulate(p, pid.copy(), Vref, T)
model, hist, _ = clone_pid(p, Vref, T, pid_run=pid_run)
print(f"clone RMSE after {len(hist)} epochs: {hist[-1]:.3g}")

step = [ProfileStep(1.0, {"R": 500.0})]
runs = {
    "pid": pid_run,
    "anfis": closed_loop_simulate(p, AnfisController(model), Vref, T),
    "pid_loadstep": closed_loop_simulate(p, pid.copy(), Vref, T, step),
    "anfis_loadstep": closed_loop_simulate(p, AnfisController(model), Vref, T, step),
}
print(f"{'run':16s} {'settle(s)':>10s} {'overshoot%':>11s} {'sse(V)':>9s} {'tail max(V)':>12s}")
for name, r in runs.items():
    tail = np.max(np.abs(r.Vo[-len(r.Vo) // 10:] - Vref))
    print(f"{name:16s} {r.settling_time:10.4g} {r.overshoot:11.4g} {r.steady_state_error:9.3g} {tail:12.3g}")
    write_closed_loop_csv(r, f"out/compare_{name}.csv", stride=50)
