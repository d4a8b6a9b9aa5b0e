"""Control phase diagram in the (a, p) plane at k = 6.

A coarse grid of the order parameter O^2 with the extracted transition
lines; the analytic critical curve for the overlay comes from a second,
closed-form sweep. Both tables land in runs/ for the figure frontend.
"""

from kickedtop.harness import build_config, run_experiment

A_GRID = [0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85]
P_GRID = [round(0.1 * i, 1) for i in range(1, 10)]

table = run_experiment(build_config({
    "experiment": {"engine": "classical", "seed": 77, "workers": 2,
                   "block_size": 400, "out": "runs/demo_phase_diagram"},
    "grid": {"k": [6.0], "a": A_GRID, "p": P_GRID},
    "run": {"steps": 1500, "n_traj": 400, "with_mu": False},
}))

run_experiment(build_config({
    "experiment": {"engine": "analytics", "seed": 77,
                   "out": "runs/demo_phase_diagram_analytics"},
    "grid": {"k": [6.0], "a": A_GRID},
}))

print("O^2 over the (a, p) grid (rows: a, columns: p)")
print("      " + " ".join(f"{p:>7.1f}" for p in P_GRID))
for a in A_GRID:
    vals = [r["mean"] for r in table.records
            if r["observable"] == "O2" and r["a"] == a]
    print(f"a={a:4.2f} " + " ".join(f"{v:7.4f}" for v in vals))
print("\nextracted transition line:")
for rec in table.records:
    if rec["observable"] == "p_c_O2":
        print(f"  a = {rec['a']:4.2f}: p_c(O2) = {rec['mean']:.3f}")
print("tables in runs/demo_phase_diagram*/ (heatmap + analytic overlay)")
