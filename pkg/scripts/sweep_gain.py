#!/usr/bin/env python3
"""Dense duty sweep of the switched model against the ideal 3 - D gain.

usage: sweep_gain.py [out.csv] [--rl OHMS]
"""
import argparse
import warnings

import numpy as np

from mqbqr.config import load, preset_path
from mqbqr.model import Parasitics
from mqbqr.simulator import SimConfig, sweep, write_sweep_csv

ap = argparse.ArgumentParser()
ap.add_argument("out", nargs="?", default="out/sweep_dense.csv")
ap.add_argument("--rl", type=float, default=0.0, help="inductor winding resistance")
args = ap.parse_args()

p = load(preset_path("table3_sim")).params
if args.rl:
    p = p.with_(parasitics=Parasitics(RL_copper=args.rl))
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    rows = sweep(p, np.round(np.arange(0.05, 0.96, 0.05), 2), cfg=SimConfig(steps_per_phase=16))
print(write_sweep_csv(rows, args.out))
for r in rows:
    print(f"D={r.D:.2f}  Vo/Vin={r.gain_observed:8.4f}  3-D={r.gain_formula:.2f}  dev={r.deviation:.3f} {r.error}")
