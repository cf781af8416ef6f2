"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL`` line with the measured
values, then asserts. Runtimes are measured with the compiled kernels warm.
"""
from __future__ import annotations

import math
import os
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from discrete_lorenz.bifurcation import (EventKind, continue_branch, normal_form_coeffs,
                                         switch_period_doubling)
from discrete_lorenz.chart import Axis, ChartSpec, compute_chart
from discrete_lorenz.lyapunov import AttractorClass, check_sign_conditions, spectrum
from discrete_lorenz.manifolds import ButterflySettings, butterfly_bisect
from discrete_lorenz.maps import MapSpec, jacobian, orbit
from discrete_lorenz.pseudohyp import Verdict, lmp_graph, lmp_verdict, strong_contracting_field
from discrete_lorenz.spectral import classify, find_cycle, find_fixed_points

pytestmark = pytest.mark.acceptance

HERE = Path(__file__).parent


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return emit


def _best_time(fn, repeat=20):
    fn()
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def test_c01_fixed_point_algebra(report):
    m = MapSpec.henon(0.0, 0.85, 0.7)
    recs, dt = _best_time(lambda: find_fixed_points(m))
    xs = sorted(float(r.point[0]) for r in recs)
    diag = all(np.ptp(r.point) == 0.0 for r in recs)
    res = max(r.residual for r in recs)
    ok = (len(recs) == 2 and diag and abs(xs[0]) < 1e-12 and abs(xs[1] - 0.55) < 1e-12
          and res < 1e-12 and dt < 1e-3)
    report(1, ok, f"x = {xs}, residual {res:.1e}, {dt * 1e3:.3f} ms")


def test_c02_triple_multiplier_point(report):
    m = MapSpec.henon(-0.25, 1.0, 1.0)
    recs, dt = _best_time(lambda: find_fixed_points(m))
    rec = min(recs, key=lambda r: np.linalg.norm(r.point - 0.5))
    mults = sorted(rec.multipliers, key=lambda z: z.real)
    err = max(abs(a - b) for a, b in zip(mults, (-1, -1, 1)))
    ok = np.allclose(rec.point, 0.5, atol=1e-12) and err < 1e-8 and dt < 1e-3
    report(2, ok, f"point {rec.point}, max multiplier error {err:.1e}, {dt * 1e3:.3f} ms")


def test_c03_lorenz_conditions(report):
    m = MapSpec.henon(0.0, 0.85, 0.7)

    def run():
        rec = next(r for r in find_fixed_points(m) if r.point[0] > 0.1)
        return rec, classify(rec)

    (rec, rep), dt = _best_time(run)
    # independent oracle: roots of det(J - l I) from the numerical Jacobian
    J = jacobian(m, rec.point)
    oracle = np.roots(np.poly(J))
    err = max(min(abs(z - w) for w in oracle) for z in rec.multipliers)
    ok = rep.cond_a and rep.cond_b and rep.cond_c and rep.saddle_value > 1 and err < 1e-8 and dt < 1e-3
    report(3, ok, f"conds {rep.cond_a, rep.cond_b, rep.cond_c}, sigma {rep.saddle_value:.4f}, "
                  f"oracle error {err:.1e}, {dt * 1e3:.3f} ms")


SUM_CASES = [(0.0, 0.85, 0.7, (0.1, 0.1, 0.1)), (0.0, 0.815, 0.7, (0.1, 0.1, 0.1)),
             (2.0, -1.05, -0.8, (0.5, 0.5, 0.5)), (2.29, -1.05, -0.8, (0.5, 0.5, 0.5)),
             (1.732, -0.814, -0.8, (0.5, 0.5, 0.5)), (0.3, 0.3, 0.1, (0.1, 0.1, 0.1)),
             (1.77, -0.925, -0.95, (0.86, 0.13, 0.86))]


def test_c04_lyapunov_sum_identity(report):
    worst, slow = 0.0, 0.0
    for M1, M2, B, s0 in SUM_CASES:
        m = MapSpec.henon(M1, M2, B)
        t0 = time.perf_counter()
        sp = spectrum(m, s0, 10_000, 1_000_000)
        slow = max(slow, time.perf_counter() - t0)
        assert not sp.escaped
        worst = max(worst, abs(sum(sp.exponents) - math.log(abs(B))))
        if B == 0.7:
            assert abs(sum(sp.exponents) - (-0.35667)) < 1e-3
    report(4, worst < 1e-3 and slow < 2.0,
           f"max |sum - ln|B|| {worst:.1e} over {len(SUM_CASES)} runs, slowest {slow:.2f} s")


def test_c05_sign_pattern(report):
    lines, ok = [], True
    for M2 in (0.85, 0.815):
        t0 = time.perf_counter()
        sp = spectrum(MapSpec.henon(0.0, M2, 0.7), (0.1, 0.1, 0.1), 10_000, 1_000_000)
        dt = time.perf_counter() - t0
        a, b, c = check_sign_conditions(sp, 1e-3)
        ok &= a and b and c and dt < 2.0
        L = sp.exponents
        lines.append(f"M2={M2}: L=({L[0]:.4f},{L[1]:.4f},{L[2]:.4f}) {dt:.2f} s")
    report(5, ok, "; ".join(lines))


def _lmp(M2):
    t0 = time.perf_counter()
    m = MapSpec.henon(0.0, M2, 0.7)
    seg = orbit(m, (0.1, 0.1, 0.1), 10_000, 1_000_000)
    g = lmp_graph(strong_contracting_field(m, seg), n_pairs=100_000, seed=0)
    return lmp_verdict(g), time.perf_counter() - t0


def test_c06_lmp_dichotomy(report):
    good, t_good = _lmp(0.815)
    bad, t_bad = _lmp(0.85)
    ok = (good.verdict is Verdict.CONSISTENT and good.smallest_bin_p95 < 0.1
          and bad.verdict is Verdict.VIOLATED and bad.smallest_bin_p95 > 0.5
          and t_good < 30 and t_bad < 30)
    report(6, ok, f"M2=0.815: {good.verdict.value} p95 {good.smallest_bin_p95:.1e} ({t_good:.1f} s); "
                  f"M2=0.85: {bad.verdict.value} p95 {bad.smallest_bin_p95:.1e}, "
                  f"{bad.n_small_violations} small-distance violations ({t_bad:.1f} s)")


def test_c07_period_two_cycle(report):
    m = MapSpec.henon(1.77, -0.925, -0.95)
    rec = find_cycle(m, 2, (0.85, 0.126, 0.85))
    p = min(rec.points, key=lambda q: abs(q[0] - 0.85))
    ok = rec.period == 2 and abs(p[0] - 0.85) < 0.01 and abs(p[1] - 0.126) < 0.01
    report(7, ok, f"p = ({p[0]:.4f}, {p[1]:.4f}, {p[2]:.4f})")


def test_c08_bifurcation_values(report):
    T = MapSpec.henon(2.0, -1.05, -0.8)
    sink = next(r for r in find_fixed_points(T) if r.topo_type == (3, 0))
    t0 = time.perf_counter()
    br = continue_branch(T, "M1", (-2.1, 2.3), 1e-2, sink, start=2.0)
    t1 = time.perf_counter() - t0
    pd = next(e for e in br.events if e.kind is EventKind.PERIOD_DOUBLING)
    low = min(e.param_value for e in br.events)
    fold = next(e for e in br.events if e.param_value == low)
    ns = next(e for e in br.events if e.kind is EventKind.NEIMARK_SACKER)
    t0 = time.perf_counter()
    mu, child = switch_period_doubling(T, "M1", pd, +1.0)
    br2 = continue_branch(T, "M1", (mu, 2.3), 1e-2, child)
    t2 = time.perf_counter() - t0
    pd2 = next(e for e in br2.events if e.kind is EventKind.PERIOD_DOUBLING)

    def minus_one(e):
        return min(abs(z + 1) for z in e.evidence)

    ok = (abs(pd.param_value - 2.172) < 0.005 and abs(pd2.param_value - 2.223) < 0.005
          and fold.kind is EventKind.FOLD and abs(fold.param_value + 2.03) < 0.01
          and minus_one(pd) < 1e-6 and minus_one(pd2) < 1e-6 and t1 < 10 and t2 < 10)
    report(8, ok, f"PD {pd.param_value:.6f}, PD2 {pd2.param_value:.6f}, lower boundary "
                  f"{fold.kind.value} {fold.param_value:.6f} (NS of O at {ns.param_value:.6f}), "
                  f"|mult+1| {max(minus_one(pd), minus_one(pd2)):.1e}, {t1:.2f} s / {t2:.2f} s")


def test_c09_butterfly_bracket(report):
    T = MapSpec.henon(2.275, -1.05, -0.8)
    t0 = time.perf_counter()
    res = butterfly_bisect(T, "M1", (2.27, 2.28), ButterflySettings(seed=(0.28, 0.97, 0.28)))
    dt = time.perf_counter() - t0
    lo, hi = res.bracket
    ok = 2.27 < lo < hi < 2.28 and hi - lo <= 1e-4 and dt < 60
    report(9, ok, f"M1 = {res.value:.7f}, bracket width {hi - lo:.1e}, {dt:.1f} s")


def test_c10_prop1(report):
    def value(a, b, c):
        a, b, c = (Fraction(v) for v in (a, b, c))
        return (c - a) * (a - b + c)

    h = normal_form_coeffs(MapSpec.henon(0.0, 0.85, 0.7))
    mi = normal_form_coeffs(MapSpec.mira(0.0, 0.85, 0.7))
    vh, vm = value(h.a, h.b, h.c), value(mi.a, mi.b, mi.c)
    ok = ((h.a, h.b, h.c) == (0, 0, -1) and (mi.a, mi.b, mi.c) == (-1, 0, 0)
          and vh > 0 and vm < 0 and h.prop1_holds and not mi.prop1_holds)
    report(10, ok, f"Henon (a,b,c)=({h.a:g},{h.b:g},{h.c:g}) -> {vh}; "
                   f"Mira (a,b,c)=({mi.a:g},{mi.b:g},{mi.c:g}) -> {vm}")


def test_c11_chart(report):
    spec = ChartSpec(family="henon3d", fixed={"B": -0.8}, axis1=Axis("M1", 1.45, 2.45, 500),
                     axis2=Axis("M2", -1.1, -0.6, 250), n_transient=10_000, n_iter=20_000,
                     s0=(0.5, 0.5, 0.5), workers=8)
    r8 = compute_chart(spec)
    r1 = compute_chart(ChartSpec.from_dict(dict(spec.to_dict(), workers=1)))
    a1, a2 = spec.axis1, spec.axis2

    def at(M1, M2):
        return r8.cls(a1.nearest(M1), a2.nearest(M2))

    c_a, c_c, c_o = at(2.29, -1.05), at(1.732, -0.814), at(2.0, -1.05)
    same = r1.classes.tobytes() == r8.classes.tobytes() and r1.L1.tobytes() == r8.L1.tobytes()
    cores = os.cpu_count() or 1
    ok = (c_a is AttractorClass.CHAOTIC and c_c is AttractorClass.CHAOTIC
          and c_o in (AttractorClass.STABLE_POINT, AttractorClass.STABLE_CYCLE)
          and same and r8.elapsed < 600)
    report(11, ok, f"(2.29,-1.05) {c_a.value}, (1.732,-0.814) {c_c.value}, (2.0,-1.05) {c_o.value}; "
                   f"1 vs 8 workers identical: {same}; 500x250 in {r8.elapsed:.0f} s with 8 workers "
                   f"on {cores} core(s)")


PROPERTY_TESTS = [
    "test_maps.py::test_jacobian_matches_central_differences",
    "test_maps.py::test_det_equals_b",
    "test_maps.py::test_inverse_round_trip",
    "test_maps.py::test_inverse_round_trip_b07_tight",
    "test_maps.py::test_jacobian_power_chain_rule",
    "test_pseudohyp.py::test_field_invariance_along_attractor",
    "test_pseudohyp.py::test_field_at_saddle_is_strong_stable_eigenvector",
    "test_pseudohyp.py::test_field_of_diagonal_map_is_middle_axis",
    "test_pseudohyp.py::test_linear_maps_analytic_direction",
    "test_manifolds.py::test_self_consistency",
    "test_manifolds.py::test_minus_branch_is_image_of_plus",
    "test_manifolds.py::test_linear_saddle_stays_on_eigenline",
]


def test_c12_property_suite(report):
    t0 = time.perf_counter()
    r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                        *(str(HERE / t) for t in PROPERTY_TESTS)],
                       capture_output=True, text=True, cwd=HERE.parent)
    dt = time.perf_counter() - t0
    summary = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    report(12, r.returncode == 0 and dt < 300, f"{summary} ({dt:.0f} s)")
