"""Local bifurcations and the homoclinic butterfly at B = -0.8, M2 = -1.05.

Run with ``python3 demos/bifurcations.py``.
"""
# %%
from __future__ import annotations

from discrete_lorenz.bifurcation import continue_branch, scenario_probe, switch_period_doubling
from discrete_lorenz.manifolds import ButterflySettings, butterfly_bisect
from discrete_lorenz.maps import MapSpec
from discrete_lorenz.spectral import find_fixed_points

# %% [markdown]
# Continue the stable fixed point from M1 = 2 in both directions. It loses
# stability through a Neimark-Sacker event below and a period doubling
# above, and disappears in a fold further down.

# %%
T = MapSpec.henon(2.0, -1.05, -0.8)
sink = next(r for r in find_fixed_points(T) if r.topo_type == (3, 0))
branch = continue_branch(T, "M1", (-2.1, 2.3), 1e-2, sink, start=2.0)
for e in branch.events:
    print(f"{e.kind.value:16s} period {e.period}  M1 = {e.param_value:.6f}")

# %% [markdown]
# Switch to the doubled cycle and follow it to its own doubling.

# %%
pd = next(e for e in branch.events if e.kind.value == "PeriodDoubling")
mu, cycle = switch_period_doubling(T, "M1", pd, +1.0)
for e in continue_branch(T, "M1", (mu, 2.3), 1e-2, cycle).events:
    print(f"{e.kind.value:16s} period {e.period}  M1 = {e.param_value:.6f}")

# %% [markdown]
# The ordered sequence of events and observed attractor classes.

# %%
log = scenario_probe(T, "M1", (2.1, 2.35))
for s in log.stages:
    print(f"  {s.param:.5f}  {s.kind.value:6s} {s.detail}")
print("label:", log.label)

# %% [markdown]
# Both separatrices of the period-2 saddle cycle return to it near
# M1 = 2.278; bisection on the sign of the return locates the butterfly.

# %%
res = butterfly_bisect(T, "M1", (2.27, 2.28), ButterflySettings(seed=(0.28, 0.97, 0.28)))
print(f"butterfly at M1 = {res.value:.6f}, bracket {res.bracket[0]:.6f} .. {res.bracket[1]:.6f}")
