"""Command-line front end.

Every subcommand writes its data files plus a ``manifest.json`` into the
output directory (``--out``, else ``$DISCRETE_LORENZ_OUT``, else ``.``).
Exit status: 0 success, 1 domain error (escape, bad bracket, lost cycle),
2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import (EventKind, ScenarioSettings, continue_branch, scenario_probe,
                          switch_period_doubling)
from .chart import Axis, ChartSpec, compute_chart, export_chart
from .lyapunov import DEFAULT_S0, DEFAULT_TOL, classify_orbit, spectrum
from .manifolds import (Branch, ButterflySettings, butterfly_bisect, trace_separatrix)
from .maps import Family, MapError, MapSpec, PARAM_NAMES, fmt, orbit, write_orbit_csv
from .pseudohyp import lmp_graph, lmp_verdict, strong_contracting_field
from .spectral import classify, find_cycle, find_fixed_points

OUT_ENV = "DISCRETE_LORENZ_OUT"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# config file


@dataclass
class ConfigFile:
    """``key = value`` lines, ``[section]`` headers, ``#`` comments.

    Keys before any header apply to every subcommand; keys in ``[name]``
    apply only to subcommand ``name``.
    """

    path: Path
    sections: dict[str, dict[str, tuple[int, str]]] = field(default_factory=dict)

    @classmethod
    def read(cls, path) -> ConfigFile:
        path = Path(path)
        cfg = cls(path)
        sec = ""
        try:
            lines = path.read_text().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        for no, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                sec = line[1:-1].strip()
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected 'key = value'")
            k, v = (t.strip() for t in line.split("=", 1))
            cfg.sections.setdefault(sec, {})[k] = (no, v)
        return cfg

    def values_for(self, command: str) -> dict[str, tuple[int, str]]:
        out = dict(self.sections.get("", {}))
        out.update(self.sections.get(command, {}))
        return out


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, cfg: ConfigFile,
                  command: str):
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help",)}
    defaults = {}
    for key, (no, raw) in cfg.values_for(command).items():
        dest = key.replace("-", "_")
        act = actions.get(dest)
        if act is None or dest in ("config", "command"):
            raise UsageError(f"{cfg.path}:{no}: unknown key {key!r} for '{command}'")
        try:
            if isinstance(act, argparse._AppendAction):
                defaults[dest] = [t for t in raw.replace(",", " ").split() if t]
            elif isinstance(act, argparse._StoreTrueAction):
                defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[dest] = act.type(raw) if act.type else raw
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{cfg.path}:{no}: bad value for {key!r}: {exc}") from None
    sub.set_defaults(**defaults)


# --------------------------------------------------------------------------
# manifest


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    argv: list[str]
    config: dict
    seed: int
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str = ""
    outputs: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command_line": self.argv, "config": self.config, "seed": self.seed,
                "version": self.version, "started": self.started, "finished": self.finished,
                "outputs": self.outputs}


class Run:
    """Tracks the files written into one output directory."""

    def __init__(self, out: Path, manifest: RunManifest):
        self.out = out
        self.manifest = manifest
        self.files: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p

    def close(self, extra: dict | None = None):
        self.manifest.finished = _now()
        self.manifest.outputs = {p.name: _sha256(p) for p in self.files if p.exists()}
        body = self.manifest.to_dict()
        body.update(extra or {})
        (self.out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True,
                                                           default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# --------------------------------------------------------------------------
# parsing helpers


def _triple(text: str) -> tuple[float, float, float]:
    parts = [float(t) for t in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three numbers, got {text!r}")
    return tuple(parts)


def _pair(text: str) -> tuple[float, float]:
    parts = [float(t) for t in text.replace(",", " ").split()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return tuple(parts)


def _fixed(args) -> dict[str, float]:
    out = {}
    for item in args.fix or []:
        if "=" not in item:
            raise UsageError(f"--fix expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"--fix {item!r}: not a number") from None
    return out


def _map(args, free: tuple[str, ...] = ()) -> MapSpec:
    fam = Family(args.family)
    vals = _fixed(args)
    names = PARAM_NAMES[fam]
    unknown = set(vals) - set(names)
    if unknown:
        raise UsageError(f"{fam.value} has no parameter(s) {sorted(unknown)}; known: {', '.join(names)}")
    for n in free:
        vals.setdefault(n, 0.0)
    missing = [n for n in names if n not in vals]
    if missing:
        raise UsageError(f"missing --fix for {', '.join(missing)}")
    return MapSpec(fam, tuple(vals[n] for n in names))


def _record_rows(rec, m: MapSpec | None = None):
    rep = classify(rec)
    sig = rec.saddle_value
    for p in rec.points:
        row = [rec.period, *(fmt(v) for v in p)]
        for z in rec.multipliers:
            row += [fmt(z.real), fmt(z.imag)]
        row += [fmt(sig) if not math.isnan(sig) else "nan", rec.topo_type[0], rec.topo_type[1],
                rep.variant.value if rep.variant else ""]
        yield row


RECORD_HEADER = ["period", "x", "y", "z", "re1", "im1", "re2", "im2", "re3", "im3", "sigma",
                 "type_s", "type_u", "variant"]


def _write_records(path: Path, recs):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in recs:
            for row in _record_rows(r):
                w.writerow(row)


def _report_dict(rep) -> dict:
    d = dict(rep.__dict__)
    d["lorenz_like"] = rep.lorenz_like
    return d


# --------------------------------------------------------------------------
# subcommands


def cmd_orbit(args, run: Run):
    m = _map(args)
    seg = orbit(m, args.s0, args.transient, args.keep, args.escape_bound)
    write_orbit_csv(seg, run.path("orbit.csv"))
    if seg.escaped:
        raise MapError(f"orbit escaped at iterate {seg.escape_index}")
    print(f"{len(seg)} points written to {run.out / 'orbit.csv'}")


def cmd_fixed_points(args, run: Run):
    recs = find_fixed_points(_map(args))
    _write_records(run.path("fixed_points.csv"), recs)
    for r in recs:
        print(f"x={r.point[0]:.12g} type={r.topo_type} multipliers="
              + ", ".join(f"{z:.6g}" for z in r.multipliers))
    if not recs:
        print("no fixed points")


def cmd_cycle(args, run: Run):
    rec = find_cycle(_map(args), args.period, args.seed_point)
    _write_records(run.path("cycle.csv"), [rec])
    for p in rec.points:
        print(" ".join(f"{v:.12g}" for v in p))


def cmd_classify(args, run: Run):
    m = _map(args)
    recs = ([find_cycle(m, args.period, args.seed_point)] if args.seed_point
            else find_fixed_points(m))
    reports = [_report_dict(classify(r)) | {"point": r.point, "period": r.period} for r in recs]
    run.write_json("classify.json", reports)
    for rep in reports:
        print(f"x={rep['point'][0]:.8g} type={tuple(rep['topo_type'])} sigma={rep['saddle_value']:.6g} "
              f"a={rep['cond_a']} b={rep['cond_b']} c={rep['cond_c']} variant="
              f"{rep['variant'].value if rep['variant'] else '-'}")


def cmd_lyapunov(args, run: Run):
    m = _map(args)
    sp = spectrum(m, args.s0, args.transient, args.iters)
    sp.require_bounded()
    _, cls = classify_orbit(m, args.s0, args.transient, args.iters, args.tol)
    with run.path("lyapunov.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L1", "L2", "L3", "sum", "tail_variation", "class"])
        w.writerow([*(fmt(v) for v in sp.exponents), fmt(sp.total), fmt(sp.tail_variation), cls.value])
    print("L = " + ", ".join(f"{v:.6g}" for v in sp.exponents) + f"  sum={sp.total:.6g}  {cls.value}")


def _lmp(m: MapSpec, s0, transient, n, warmup, pairs, stride, seed, phi_tol):
    seg = orbit(m, s0, transient, n)
    if seg.escaped:
        raise MapError(f"orbit escaped at iterate {seg.escape_index}")
    f = strong_contracting_field(m, seg, warmup)
    g = lmp_graph(f, pairs, stride, seed)
    return g, lmp_verdict(g, phi_tol)


def cmd_lmp(args, run: Run, prefix: str = "lmp"):
    g, v = _lmp(_map(args), args.s0, args.transient, args.iters, args.warmup, args.pairs, args.stride,
                args.seed, args.phi_tol)
    g.write_csv(run.path(f"{prefix}.csv"))
    run.write_json(f"{prefix}.json", v.to_json(g))
    print(f"{v.verdict.value}: smallest-bin p95 {v.smallest_bin_p95:.3g} rad, slope {v.trend_slope:.3g}")


def cmd_manifold(args, run: Run):
    m = _map(args)
    rec = find_cycle(m, args.period, args.seed_point) if args.seed_point else _saddle(m)
    with run.path("manifold.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch", "i", "x", "y", "z"])
        for br in (Branch.PLUS, Branch.MINUS):
            poly = trace_separatrix(m, rec, br, args.arclength, args.spacing, power=args.power,
                                    index=args.index)
            for i, p in enumerate(poly.points):
                w.writerow([br.value, i, *(fmt(v) for v in p)])
            print(f"{br.value}: {len(poly.points)} points, arclength {poly.arclength:.4g}")


def _saddle(m: MapSpec):
    for r in find_fixed_points(m):
        if r.topo_type == (2, 1):
            return r
    raise MapError(f"{m} has no fixed point of type (2,1); pass --seed-point")


def cmd_butterfly(args, run: Run):
    m = _map(args, free=(args.axis,))
    st = ButterflySettings(period=args.period, branch=Branch(args.branch), index=args.index,
                           arclength_budget=args.arclength, max_spacing=args.spacing,
                           capture_radius=args.capture_radius, tol_param=args.tol,
                           seed=args.seed_point)
    res = butterfly_bisect(m, args.axis, args.bracket, st)
    run.write_json("butterfly.json", {"param_axis": res.param_axis, "bracket": list(res.bracket),
                                      "value": res.value, "iterations": res.iterations,
                                      "functional_history": [list(h) for h in res.functional_history]})
    print(f"butterfly at {args.axis} = {res.value:.7f}  bracket [{res.bracket[0]:.7f}, {res.bracket[1]:.7f}]")


def _events_jsonl(path: Path, events):
    with path.open("w") as fh:
        for e in events:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


def _branch_csv(path: Path, br):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "x", "y", "z", "re1", "im1", "re2", "im2", "re3", "im3"])
        for bp in br.points:
            row = [fmt(bp.param_value), *(fmt(v) for v in bp.record.point)]
            for z in bp.record.multipliers:
                row += [fmt(z.real), fmt(z.imag)]
            w.writerow(row)


def cmd_scan(args, run: Run):
    m = _map(args, free=(args.axis,))
    lo, hi = args.range
    if args.scenario:
        log = scenario_probe(m, args.axis, (lo, hi), ScenarioSettings(step=args.step, s0=args.s0))
        _events_jsonl(run.path("events.jsonl"), log.events)
        run.write_json("scenario.json", {
            "label": log.label, "axis": log.axis, "range": list(log.param_range),
            "stages": [{"kind": s.kind.value, "param": s.param, "period": s.period, "detail": s.detail}
                       for s in log.stages]})
        print(f"scenario: {log.label}")
        for s in log.stages:
            print(f"  {s.param:.6f}  {s.kind.value:6s} p={s.period}  {s.detail}")
        return
    start = lo if args.start is None else args.start
    m0 = m.with_param(args.axis, start)
    if args.seed_point:
        rec = find_cycle(m0, args.period, args.seed_point)
    else:
        recs = find_fixed_points(m0)
        if not recs:
            raise MapError(f"no fixed point at {args.axis}={start}")
        rec = next((r for r in recs if r.topo_type == (3, 0)), recs[0])
    br = continue_branch(m, args.axis, (lo, hi), args.step, rec, start=start)
    events = list(br.events)
    if args.follow_pd:
        pd = next((e for e in events if e.kind is EventKind.PERIOD_DOUBLING), None)
        if pd is not None:
            mu, child = switch_period_doubling(m, args.axis, pd, +1.0)
            br2 = continue_branch(m, args.axis, (mu, hi), args.step, child)
            events += br2.events
            _branch_csv(run.path("branch_doubled.csv"), br2)
    _events_jsonl(run.path("events.jsonl"), events)
    _branch_csv(run.path("branch.csv"), br)
    for e in events:
        print(f"{e.kind.value:14s} period {e.period}  {args.axis} = {e.param_value:.9f}")


def _chart_spec(args) -> ChartSpec:
    a1, a2 = Axis.parse(args.axis1), Axis.parse(args.axis2)
    fixed = _fixed(args)
    return ChartSpec(Family(args.family), fixed, a1, a2, n_transient=args.transient, n_iter=args.iters,
                     s0=args.s0, s0_policy=args.s0_policy, tol=args.tol, workers=args.threads,
                     seed=args.seed)


def cmd_chart(args, run: Run):
    res = compute_chart(_chart_spec(args))
    run.files += [run.out / "chart.csv", run.out / "chart.ppm"]
    run.chart = res
    print(f"{res.L1.shape[0]}x{res.L1.shape[1]} chart in {res.elapsed:.1f} s")


# --------------------------------------------------------------------------
# reproduction recipes

REPRO_TARGETS = ("fig1a", "fig1b", "fig1d", "fig5", "fig7", "fig10", "fig11", "fig12", "fig13")


def _ns(**kw) -> argparse.Namespace:
    base = dict(family="henon3d", s0=DEFAULT_S0, transient=10_000, iters=1_000_000, tol=DEFAULT_TOL,
                warmup=1000, pairs=100_000, stride=1, phi_tol=0.1, seed=0, escape_bound=1e6)
    base.update(kw)
    return argparse.Namespace(**base)


def _fix(M1, M2, B):
    return [f"M1={M1}", f"M2={M2}", f"B={B}"]


def cmd_repro(args, run: Run):
    t = args.target
    q = args.quick
    n_orbit = 10_000 if q else 100_000
    n_lyap = 100_000 if q else 1_000_000
    if t in ("fig1a", "fig1b"):
        fix = _fix(0, 0.85 if t == "fig1a" else 0.815, 0.7)
        cmd_orbit(_ns(fix=fix, keep=n_orbit), run)
        cmd_lyapunov(_ns(fix=fix, iters=n_lyap), run)
        cmd_classify(_ns(fix=fix, seed_point=None), run)
    elif t == "fig1d":
        fix = _fix(1.77, -0.925, -0.95)
        cmd_cycle(_ns(fix=fix, period=2, seed_point=(0.85, 0.126, 0.85)), run)
        cmd_orbit(_ns(fix=fix, s0=(0.86, 0.13, 0.86), keep=n_orbit), run)
    elif t == "fig5":
        cmd_scan(_ns(fix=["M2=0.85", "B=0.7"], axis="M1", range=(-0.07, 0.0), step=2e-3, scenario=True,
                     s0=None), run)
    elif t == "fig7":
        for M2 in (0.85, 0.815):
            print(f"M2 = {M2}: ", end="")
            cmd_lmp(_ns(fix=_fix(0, M2, 0.7), iters=n_lyap, pairs=n_lyap // 10, seed=args.seed), run,
                    prefix=f"lmp_M2_{M2}")
    elif t == "fig10":
        fix = ["M2=-1.05", "B=-0.8"]
        cmd_scan(_ns(fix=fix, axis="M1", range=(2.1, 2.35), step=2e-3, scenario=True,
                     s0=(0.5, 0.5, 0.5)), run)
        cmd_butterfly(_ns(fix=fix, axis="M1", bracket=(2.27, 2.28), period=2, branch="plus", index=0,
                          arclength=20.0, spacing=1e-3, capture_radius=0.06, tol=1e-4,
                          seed_point=(0.28, 0.97, 0.28)), run)
    elif t == "fig11":
        fix = _fix(2.29, -1.05, -0.8)
        s0 = (0.5, 0.5, 0.5)
        cmd_orbit(_ns(fix=fix, s0=s0, keep=n_orbit), run)
        cmd_cycle(_ns(fix=fix, period=2, seed_point=(0.28, 0.97, 0.28)), run)
        cmd_lmp(_ns(fix=fix, s0=s0, iters=n_lyap, pairs=n_lyap // 10, stride=4, seed=args.seed), run)
    elif t == "fig12":
        fix = _fix(1.732, -0.814, -0.8)
        s0 = (0.5, 0.5, 0.5)
        cmd_classify(_ns(fix=fix, seed_point=None), run)
        cmd_orbit(_ns(fix=fix, s0=s0, keep=n_orbit), run)
        cmd_lyapunov(_ns(fix=fix, s0=s0, iters=n_lyap), run)
        cmd_lmp(_ns(fix=fix, s0=s0, iters=n_lyap, pairs=n_lyap // 10, seed=args.seed), run)
    elif t == "fig13":
        n1, n2 = (50, 25) if q else (500, 250)
        cmd_chart(_ns(fix=["B=-0.8"], axis1=f"M1:1.45:2.45:{n1}", axis2=f"M2:-1.1:-0.6:{n2}",
                      iters=20_000, s0=(0.5, 0.5, 0.5), s0_policy="fixed", threads=args.threads,
                      seed=args.seed), run)


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, params=True):
    p.add_argument("--config", help="key = value file; CLI flags override it")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=0, help="top-level random seed")
    p.add_argument("--threads", type=int, default=1)
    if params:
        p.add_argument("--family", default="henon3d", choices=[f.value for f in Family])
        p.add_argument("--fix", action="append", metavar="NAME=VALUE", help="set a map parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="discrete-lorenz", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit", help="dump an orbit as CSV")
    _common(p)
    p.add_argument("--s0", type=_triple, default=DEFAULT_S0)
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--keep", type=int, default=100_000)
    p.add_argument("--escape-bound", type=float, default=1e6)

    p = sub.add_parser("fixed-points", help="fixed points with multipliers")
    _common(p)

    p = sub.add_parser("cycle", help="Newton search for a periodic orbit")
    _common(p)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--seed-point", type=_triple, required=True)

    p = sub.add_parser("classify", help="Lorenz multiplier conditions of fixed points or a cycle")
    _common(p)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--seed-point", type=_triple)

    p = sub.add_parser("lyapunov", help="Lyapunov spectrum and attractor class")
    _common(p)
    p.add_argument("--s0", type=_triple, default=DEFAULT_S0)
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=1_000_000)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("lmp", help="angle-vs-distance graph of the strong-contracting field")
    _common(p)
    p.add_argument("--s0", type=_triple, default=DEFAULT_S0)
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=1_000_000, help="orbit length")
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--phi-tol", type=float, default=0.1)

    p = sub.add_parser("manifold", help="trace both unstable separatrices of a saddle")
    _common(p)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--seed-point", type=_triple)
    p.add_argument("--power", type=int)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--arclength", type=float, default=20.0)
    p.add_argument("--spacing", type=float, default=1e-3)

    p = sub.add_parser("butterfly-scan", help="bisect for a homoclinic butterfly")
    _common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--bracket", type=_pair, required=True)
    p.add_argument("--period", type=int, default=2)
    p.add_argument("--seed-point", type=_triple, required=True)
    p.add_argument("--branch", default="plus", choices=["plus", "minus"])
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--arclength", type=float, default=20.0)
    p.add_argument("--spacing", type=float, default=1e-3)
    p.add_argument("--capture-radius", type=float, default=0.06)
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("scan", help="continue a fixed point or cycle along one parameter")
    _common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--range", type=_pair, required=True)
    p.add_argument("--start", type=float)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--seed-point", type=_triple)
    p.add_argument("--follow-pd", action="store_true", help="also continue the doubled cycle")
    p.add_argument("--scenario", action="store_true", help="run the scenario probe instead")
    p.add_argument("--s0", type=_triple, help="seed for attractor classification in --scenario")

    p = sub.add_parser("chart", help="Lyapunov chart over a parameter window")
    _common(p)
    p.add_argument("--axis1", required=True, metavar="NAME:lo:hi:n")
    p.add_argument("--axis2", required=True, metavar="NAME:lo:hi:n")
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=20_000)
    p.add_argument("--s0", type=_triple, default=DEFAULT_S0)
    p.add_argument("--s0-policy", default="fixed", choices=["fixed", "inherit"])
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)

    p = sub.add_parser("repro", help="built-in reproduction recipes")
    _common(p, params=False)
    p.add_argument("target", choices=REPRO_TARGETS)
    p.add_argument("--quick", action="store_true", help="smaller runs for smoke testing")
    return ap


COMMANDS = {"orbit": cmd_orbit, "fixed-points": cmd_fixed_points, "cycle": cmd_cycle,
            "classify": cmd_classify, "lyapunov": cmd_lyapunov, "lmp": cmd_lmp,
            "manifold": cmd_manifold, "butterfly-scan": cmd_butterfly, "scan": cmd_scan,
            "chart": cmd_chart, "repro": cmd_repro}


def _parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        sub = ap._subparsers._group_actions[0].choices[args.command]
        _apply_config(ap, sub, ConfigFile.read(args.config), args.command)
        args = ap.parse_args(argv)
    return ap, args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = None
    try:
        ap, args = _parse(argv)
        out = Path(args.out or os.environ.get(OUT_ENV) or ".")
        if args.command == "repro":
            out = out / args.target
        config = {k: v for k, v in vars(args).items()}
        run = Run(out, RunManifest(argv=["discrete-lorenz", *argv], config=config, seed=args.seed))
        COMMANDS[args.command](args, run)
        chart = getattr(run, "chart", None)
        if chart is not None:
            run.manifest.finished = _now()
            export_chart(chart, out, extra={"run": run.manifest.to_dict() | {"outputs": None}})
            files = [p for p in run.files if p.name not in ("chart.csv", "chart.ppm")]
            if files:
                raise UsageError("chart output cannot be combined with other outputs")
        else:
            run.close()
        return 0
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except UsageError as exc:
        if ap is not None:
            ap.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        if ap is not None:
            ap.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
