"""One-parameter continuation of fixed points and cycles, local bifurcation events,
normal-form data at the (+1, -1, -1) point and scenario logs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lyapunov import AttractorClass, classify_orbit
from .maps import Family, MapError, MapSpec, jacobian_power
from .spectral import (ConvergenceError, EquilibriumRecord, find_cycle, find_fixed_points)

EVENT_TOL = 1e-9


class EventKind(str, enum.Enum):
    PERIOD_DOUBLING = "PeriodDoubling"
    NEIMARK_SACKER = "NeimarkSacker"
    FOLD = "Fold"
    LOSS_OF_RETURN = "LossOfReturn"


class ContinuationError(MapError):
    pass


@dataclass
class BranchPoint:
    param_value: float
    record: EquilibriumRecord


@dataclass
class BifurcationEvent:
    kind: EventKind
    param_value: float
    evidence: tuple[complex, complex, complex]
    period: int
    record: EquilibriumRecord | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "param": self.param_value, "period": self.period,
                "multipliers": [[z.real, z.imag] for z in self.evidence]}


@dataclass
class Branch:
    axis: str
    period: int
    points: list[BranchPoint]
    events: list[BifurcationEvent]
    step_halvings: int = 0


# --------------------------------------------------------------------------
# continuation


def _test_values(mults) -> tuple[float, float, float]:
    """Test functions whose sign changes mark PD, fold and NS crossings.

    ``prod(1 + l)``, ``prod(l - 1)`` and ``prod_{i<j}(l_i l_j - 1)``; the last
    also vanishes at a neutral real saddle pair, which refinement filters out.
    """
    l = [complex(z) for z in mults]
    pd = (1 + l[0]) * (1 + l[1]) * (1 + l[2])
    fold = (l[0] - 1) * (l[1] - 1) * (l[2] - 1)
    ns = (l[0] * l[1] - 1) * (l[0] * l[2] - 1) * (l[1] * l[2] - 1)
    return pd.real, fold.real, ns.real


def _solve(template, axis, period, mu, seed):
    return find_cycle(template.with_param(axis, mu), period, seed)


def _refine(template, axis, period, mu_a, rec_a, mu_b, slot, tol):
    """Bisect on the sign of one test function between ``mu_a`` and ``mu_b``."""
    a, b, ra = mu_a, mu_b, rec_a
    fa = _test_values(ra.multipliers)[slot]
    while abs(b - a) > tol:
        mid = 0.5 * (a + b)
        r = _solve(template, axis, period, mid, ra.point)
        fm = _test_values(r.multipliers)[slot]
        if (fm > 0) == (fa > 0):
            a, ra, fa = mid, r, fm
        else:
            b = mid
    mid = 0.5 * (a + b)
    return mid, _solve(template, axis, period, mid, ra.point)


def _is_genuine(kind, mults, tol=1e-5) -> bool:
    if kind is EventKind.PERIOD_DOUBLING:
        return any(z.imag == 0.0 and abs(z.real + 1.0) < tol for z in mults)
    if kind is EventKind.FOLD:
        return any(z.imag == 0.0 and abs(z.real - 1.0) < tol for z in mults)
    return any(z.imag != 0.0 and abs(abs(z) - 1.0) < tol for z in mults)


def _refine_termination(template, axis, period, mu_ok, rec_ok, mu_bad, tol):
    a, b, ra = mu_ok, mu_bad, rec_ok
    while abs(b - a) > tol:
        mid = 0.5 * (a + b)
        try:
            ra = _solve(template, axis, period, mid, ra.point)
            a = mid
        except ConvergenceError:
            b = mid
    return a, ra


_EVENT_SLOTS = ((0, EventKind.PERIOD_DOUBLING), (1, EventKind.FOLD), (2, EventKind.NEIMARK_SACKER))


def _continue_one_way(template, axis, start, stop, step, rec0, refine_tol, min_step):
    period = rec0.period
    sign = 1.0 if stop >= start else -1.0
    pts = [BranchPoint(start, rec0)]
    events: list[BifurcationEvent] = []
    halvings = 0
    mu, rec = start, rec0
    prev = None  # (mu, point) of the point before ``rec`` for the secant predictor
    h = abs(step)
    while sign * (stop - mu) > 1e-13:
        h_eff = min(h, abs(stop - mu))
        mu_new = mu + sign * h_eff
        seed = rec.point
        if prev is not None:
            seed = rec.point + (rec.point - prev[1]) * (h_eff / abs(mu - prev[0]))
        try:
            new = _solve(template, axis, period, mu_new, seed)
            jump = np.max(np.abs(new.point - seed))
            ref = np.max(np.abs(rec.point - prev[1])) / abs(mu - prev[0]) if prev else math.inf
            if jump > 10.0 * h_eff * max(1.0, ref):
                raise ConvergenceError(f"branch jump of {jump:.3g} at {mu_new}")
        except ConvergenceError:
            if h_eff > min_step:
                h = h_eff / 2.0
                halvings += 1
                continue
            mu_end, rec_end = _refine_termination(template, axis, period, mu, rec, mu_new, refine_tol)
            near_one = any(z.imag == 0.0 and abs(z.real - 1.0) < 0.05 for z in rec_end.multipliers)
            kind = EventKind.FOLD if near_one else EventKind.LOSS_OF_RETURN
            events.append(BifurcationEvent(kind, mu_end, rec_end.multipliers, period, rec_end))
            break
        t_old, t_new = _test_values(rec.multipliers), _test_values(new.multipliers)
        found = []
        for slot, kind in _EVENT_SLOTS:
            if (t_old[slot] > 0) != (t_new[slot] > 0):
                mu_ev, rec_ev = _refine(template, axis, period, mu, rec, mu_new, slot, refine_tol)
                if _is_genuine(kind, rec_ev.multipliers):
                    found.append(BifurcationEvent(kind, mu_ev, rec_ev.multipliers, period, rec_ev))
        events.extend(sorted(found, key=lambda e: sign * e.param_value))
        prev = (mu, rec.point)
        mu, rec = mu_new, new
        pts.append(BranchPoint(mu, rec))
        h = min(abs(step), 2.0 * h)
    return pts, events, halvings


def continue_branch(template: MapSpec, axis: str, param_range: tuple[float, float], step: float,
                    seed_record: EquilibriumRecord, start: float | None = None,
                    refine_tol: float = EVENT_TOL, min_step: float | None = None) -> Branch:
    """Natural-parameter continuation of ``seed_record`` across ``param_range``.

    ``seed_record`` must be a solution at ``start`` (default: the lower end
    of the range). When ``start`` lies inside the range the branch is
    continued in both directions. Events are located by sign changes of the
    multiplier signature and refined by bisection to ``refine_tol``.
    """
    lo, hi = map(float, param_range)
    start = lo if start is None else float(start)
    if not lo <= start <= hi:
        raise ValueError("start outside the parameter range")
    min_step = abs(step) / 1024 if min_step is None else min_step
    rec0 = _solve(template, axis, seed_record.period, start, seed_record.point)
    pts_dn, ev_dn, h_dn = ([], [], 0)
    if start > lo:
        pts_dn, ev_dn, h_dn = _continue_one_way(template, axis, start, lo, step, rec0, refine_tol, min_step)
    pts_up, ev_up, h_up = ([BranchPoint(start, rec0)], [], 0)
    if start < hi:
        pts_up, ev_up, h_up = _continue_one_way(template, axis, start, hi, step, rec0, refine_tol, min_step)
    points = list(reversed(pts_dn[1:])) + pts_up
    events = sorted(ev_dn + ev_up, key=lambda e: e.param_value)
    return Branch(axis=axis, period=rec0.period, points=points, events=events,
                  step_halvings=h_dn + h_up)


def switch_period_doubling(template: MapSpec, axis: str, event: BifurcationEvent, direction: float,
                           offset: float = 1e-3) -> tuple[float, EquilibriumRecord]:
    """Seed the doubled-period cycle just past a period-doubling event.

    ``direction`` is +1 or -1: the side of the event where the parent cycle
    has a multiplier below -1.
    """
    if event.kind is not EventKind.PERIOD_DOUBLING or event.record is None:
        raise ValueError("need a refined period-doubling event")
    period = event.period
    mu = event.param_value + math.copysign(offset, direction)
    m = template.with_param(axis, mu)
    parent = find_cycle(m, period, event.record.point)
    _, D = jacobian_power(m, parent.point, period)
    lam = min((z for z in parent.multipliers if z.imag == 0.0), key=lambda z: abs(z.real + 1.0)).real
    from .manifolds import _null_vector

    v = _null_vector(D - lam * np.eye(3))
    for h in (0.3, 1.0, 3.0, 0.1, 10.0):
        for sgn in (1.0, -1.0):
            seed = parent.point + sgn * h * math.sqrt(offset) * v
            try:
                return mu, find_cycle(m, 2 * period, seed)
            except ConvergenceError:
                continue
    raise ContinuationError(f"no period-{2 * period} cycle found near {axis}={mu}")


# --------------------------------------------------------------------------
# normal form data


@dataclass
class NormalFormData:
    A: float
    C: float
    B: float
    a: float
    b: float
    c: float
    fixed_point: np.ndarray

    @property
    def epsilons(self) -> tuple[float, float, float]:
        return (1.0 - self.B, 1.0 - self.C, -(1.0 + self.A))

    @property
    def prop1_value(self) -> float:
        """``(c - a)(a - b + c)``; positive means the local Lorenz-like attractor criterion holds."""
        return (self.c - self.a) * (self.a - self.b + self.c)

    @property
    def prop1_holds(self) -> bool:
        return self.prop1_value > 0

    def to_map(self) -> MapSpec:
        e1, e2, e3 = self.epsilons
        return MapSpec.epsilon_normal_form(e1, e2, e3, self.a, self.b, self.c)


def normal_form_coeffs(m: MapSpec, fixed_point=None) -> NormalFormData:
    """Coefficients of ``z' = B x + C y + A z + a y^2 + b y z + c z^2`` after moving a fixed point to 0.

    The default fixed point is the one nearest the origin.
    """
    if m.kind != _kernels.COMPANION:
        raise ValueError("normal form data needs a quadratic companion-form map")
    B, g0, gy, gz, gyy, gyz, gzz = (float(v) for v in m.coef)
    if fixed_point is None:
        recs = find_fixed_points(m)
        if not recs:
            raise ValueError(f"{m} has no fixed point")
        fixed_point = min((r.point for r in recs), key=lambda p: float(np.max(np.abs(p))))
    p = np.asarray(fixed_point, dtype=float)
    x = p[1]  # y* = z* = x* on the diagonal
    C = gy + 2.0 * gyy * x + gyz * p[2]
    A = gz + gyz * x + 2.0 * gzz * p[2]
    return NormalFormData(A=A, C=C, B=B, a=gyy, b=gyz, c=gzz, fixed_point=p)


# --------------------------------------------------------------------------
# scenario log


class StageKind(str, enum.Enum):
    SINK = "sink"
    EVENT = "event"
    CLASS = "class"
    GAP = "gap"


@dataclass
class Stage:
    kind: StageKind
    param: float
    period: int
    detail: str


@dataclass
class ScenarioSettings:
    step: float = 2e-3
    n_samples: int = 101
    n_transient: int = 10_000
    n_iter: int = 20_000
    tol: float = 1e-3
    s0: tuple[float, float, float] | None = None
    max_period: int = 8


@dataclass
class ScenarioStageLog:
    axis: str
    param_range: tuple[float, float]
    stages: list[Stage] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)
    classes: list[tuple[float, AttractorClass]] = field(default_factory=list)
    label: str | None = None

    @property
    def empty(self) -> bool:
        # no local event and a single observed class over the whole range
        return not self.events and sum(s.kind is StageKind.CLASS for s in self.stages) <= 1


def _stable_record(m: MapSpec) -> EquilibriumRecord | None:
    for r in find_fixed_points(m):
        if r.topo_type == (3, 0):
            return r
    return None


def scenario_probe(template: MapSpec, axis: str, param_range: tuple[float, float],
                   settings: ScenarioSettings | None = None) -> ScenarioStageLog:
    """Order local events and attractor-class changes along a parameter sweep.

    The cascade sink -> PD -> ... is followed through successive period
    doublings; the first Neimark-Sacker event on the deepest branch and the
    observed class right after it decide between the [sc1]/[sc2] shapes
    (curve born, i.e. supercritical, versus chaos directly) and [sc3]
    (second doubling before the torus). Labels are descriptive only.
    """
    st = settings or ScenarioSettings()
    lo, hi = map(float, param_range)
    log = ScenarioStageLog(axis=axis, param_range=(lo, hi))
    rec = _stable_record(template.with_param(axis, lo))
    if rec is None:
        log.stages.append(Stage(StageKind.GAP, lo, 1, "no stable fixed point at range start"))
        return log
    log.stages.append(Stage(StageKind.SINK, lo, 1, "stable fixed point"))

    start, period = lo, 1
    ns_event = None
    while period <= st.max_period:
        br = continue_branch(template, axis, (start, hi), st.step, rec)
        evs = [e for e in br.events if e.kind in (EventKind.PERIOD_DOUBLING, EventKind.NEIMARK_SACKER)]
        if not evs:
            break
        ev = evs[0]
        log.events.append(ev)
        log.stages.append(Stage(StageKind.EVENT, ev.param_value, period, ev.kind.value))
        if ev.kind is EventKind.NEIMARK_SACKER:
            ns_event = ev
            break
        try:
            start, rec = switch_period_doubling(template, axis, ev, +1.0)
        except (ContinuationError, ConvergenceError):
            log.stages.append(Stage(StageKind.GAP, ev.param_value, 2 * period, "doubled cycle not found"))
            break
        period *= 2
        log.stages.append(Stage(StageKind.SINK, start, period, f"period-{period} cycle"))

    seed = np.asarray(st.s0 if st.s0 is not None else rec.point + 1e-3, dtype=float)
    prev = None
    for mu in np.linspace(lo, hi, st.n_samples):
        _, cls = classify_orbit(template.with_param(axis, float(mu)), seed, st.n_transient, st.n_iter, st.tol)
        log.classes.append((float(mu), cls))
        if cls != prev:
            log.stages.append(Stage(StageKind.CLASS, float(mu), 0, cls.value))
            prev = cls
    log.stages.sort(key=lambda s: (s.param, s.kind is not StageKind.EVENT))
    log.label = _label(log, ns_event)
    return log


def _label(log: ScenarioStageLog, ns_event: BifurcationEvent | None) -> str | None:
    pds = [e for e in log.events if e.kind is EventKind.PERIOD_DOUBLING]
    if not pds and ns_event is None:
        return None
    chaos = [p for p, c in log.classes if c is AttractorClass.CHAOTIC]
    if ns_event is None:
        return "period-doubling only" + (", then chaos" if chaos else "")
    after = [c for p, c in log.classes if p > ns_event.param_value]
    first = after[0] if after else None
    if ns_event.period >= 4 and len(pds) >= 2:
        base = "[sc3]"
    elif first is AttractorClass.INVARIANT_CURVE:
        base = "[sc2]"
    else:
        base = "[sc1]"
    return base + (" -> chaotic" if any(p > ns_event.param_value for p in chaos) else "")
