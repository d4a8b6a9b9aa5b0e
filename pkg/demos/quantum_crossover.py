"""Finite-S quantum control crossover.

Born-sampled trajectories at spin sizes 16/32/64 across the control
rate, recording the squared displacement, transverse fluctuations, and
target fidelity at t = S. The classical transition survives as a
crossover that sharpens with S; curves land in runs/demo_quantum/.
"""

import numpy as np

from kickedtop import critical_probability
from kickedtop.harness import build_config, run_experiment

P_GRID = [0.60, 0.66, 0.72, 0.78, 0.84, 0.90, 0.95]

table = run_experiment(build_config({
    "experiment": {"engine": "quantum", "seed": 2024, "workers": 2,
                   "block_size": 100, "out": "runs/demo_quantum"},
    "grid": {"k": [6.0], "theta": [np.pi / 2], "p": P_GRID, "S": [16, 32, 64]},
    "run": {"n_traj": 300},
}))

pc = critical_probability(6.0, float(np.cos(np.pi / 4)))
for obs in ("R2", "s_perp2", "F"):
    print(f"\n{obs} vs p (classical p_c = {pc:.3f})")
    print("       " + " ".join(f"{p:>7.2f}" for p in P_GRID))
    for S in (16, 32, 64):
        vals = [r["mean"] for r in table.records
                if r["observable"] == obs and r["S"] == S]
        print(f"S={S:4.0f} " + " ".join(f"{v:7.4f}" for v in vals))
print("\nnote the fan-out above p_c: fluctuations head to 1/(S+1) while the")
print("fidelity saturates below 1 by a quantum-noise deficit")
print("table written to runs/demo_quantum/table.csv")
