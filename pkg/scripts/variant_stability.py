#!/usr/bin/env python3
"""Cycle-map spectral radius of both model variants across duty.

Printed as 1 - rho: negative means the orbit is unstable.
"""
import numpy as np

from mqbqr.config import load, preset_path
from mqbqr.model import ModelVariant, SourceInputs
from mqbqr.simulator import SimConfig, spectral_radius, conserved_directions, cycle_map

p = load(preset_path("table3_sim")).params
cfg = SimConfig(steps_per_phase=4)
print(f"{'D':>5s} " + " ".join(f"{v.value:>14s}" for v in ModelVariant))
for D in np.round(np.arange(0.1, 0.91, 0.1), 2):
    q = p.with_(D=D)
    u = SourceInputs.from_params(q)
    rho = []
    for v in ModelVariant:
        Phi, _ = cycle_map(q, v, u, cfg)
        rho.append(spectral_radius(Phi, len(conserved_directions(q, v, u))))
    print(f"{D:5.2f} " + " ".join(f"{1 - r:14.3e}" for r in rho))
