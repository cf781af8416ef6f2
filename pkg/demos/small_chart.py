"""A coarse Lyapunov chart of the (M1, M2) plane at B = -0.8.

Writes chart.csv, chart.ppm and manifest.json into ``chart_demo/``.
Run with ``python3 demos/small_chart.py``.
"""
# %%
from __future__ import annotations

import collections

from discrete_lorenz.chart import Axis, ChartSpec, compute_chart, export_chart

# %%
spec = ChartSpec(family="henon3d", fixed={"B": -0.8}, axis1=Axis("M1", 1.45, 2.45, 80),
                 axis2=Axis("M2", -1.1, -0.6, 40), s0=(0.5, 0.5, 0.5), workers=4)
result = compute_chart(spec)
print(f"{result.L1.size} cells in {result.elapsed:.1f} s")
counts = collections.Counter(result.cls(i, j).value for i in range(spec.axis1.n) for j in range(spec.axis2.n))
for name, n in counts.most_common():
    print(f"  {name:15s} {n}")

# %%
paths = export_chart(result, "chart_demo")
print("wrote", ", ".join(str(p) for p in paths.values()))
