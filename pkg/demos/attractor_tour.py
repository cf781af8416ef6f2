"""A short tour of one discrete Lorenz-like attractor.

Run with ``python3 demos/attractor_tour.py``.
"""
# %%
from __future__ import annotations

import numpy as np

from discrete_lorenz.lyapunov import classify_orbit
from discrete_lorenz.maps import MapSpec, orbit
from discrete_lorenz.pseudohyp import lmp_graph, lmp_verdict, strong_contracting_field
from discrete_lorenz.spectral import classify, find_fixed_points

# %% [markdown]
# The 3D Henon map x' = y, y' = z, z' = M1 + B x + M2 y - z^2.
# At (M1, M2, B) = (0, 0.815, 0.7) it has two fixed points on the diagonal.

# %%
m = MapSpec.henon(0.0, 0.815, 0.7)
for rec in find_fixed_points(m):
    rep = classify(rec)
    print(f"x = {rec.point[0]:+.5f}  type {rec.topo_type}  sigma {rep.saddle_value:.4f}  "
          f"Lorenz-like {rep.lorenz_like}")

# %% [markdown]
# The saddle at x = 0.55 satisfies the multiplier conditions. The orbit from
# a nearby seed has one positive exponent and contracts volume at rate ln B.

# %%
sp, cls = classify_orbit(m, (0.1, 0.1, 0.1), 10_000, 1_000_000)
print("exponents", np.round(sp.exponents, 5), "sum", round(sum(sp.exponents), 5),
      "ln B", round(np.log(0.7), 5), "->", cls.value)

# %% [markdown]
# Strong-contracting directions along the orbit, and the angle-vs-distance
# test of their continuity.

# %%
seg = orbit(m, (0.1, 0.1, 0.1), 10_000, 200_000)
field = strong_contracting_field(m, seg)
graph = lmp_graph(field, n_pairs=50_000, seed=0)
v = lmp_verdict(graph)
print(v.verdict.value, f"smallest-bin p95 {v.smallest_bin_p95:.1e}", f"slope {v.trend_slope:.2f}")
for lo, hi, n, p in zip(graph.bin_edges[:-1], graph.bin_edges[1:], graph.bin_count, graph.bin_p95):
    if n >= 20:
        print(f"  dx in [{lo:.1e}, {hi:.1e})  pairs {n:6d}  p95 angle {p:.2e}")
