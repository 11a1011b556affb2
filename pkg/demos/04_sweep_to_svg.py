"""
From a sweep to a chart
=======================

The harness writes one CSV row per (trial, estimator); the plot module
turns a CSV into an SVG line chart. Same as

    ccest preset --name fig4-desk --trials 5 --out fig4.csv
    ccest plot --in fig4.csv --out fig4.svg
"""
import os
import tempfile

from ccest.harness import presets, sweep
from ccest.harness.plot import plot_csv

out_dir = tempfile.mkdtemp(prefix="ccest-")
cfg = presets.get("fig4-desk").with_values({"sweep.trials": 5, "estimator.solvers": ("omp",)})
table = sweep.run_sweep(cfg)
csv_path = sweep.emit_csv(table, os.path.join(out_dir, "fig4.csv"))
svg_path = plot_csv(csv_path, os.path.join(out_dir, "fig4.svg"))
print("rows:", len(table.rows))
for key, pts in sorted(table.curves().items()):
    print("/".join(key[1:]), " ".join("%d:%.1f" % (p["axis_value"], p["mse_db"]) for p in pts))
print("wrote", csv_path, "and", svg_path)
