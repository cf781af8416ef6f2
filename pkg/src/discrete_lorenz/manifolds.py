"""One-dimensional unstable separatrices and homoclinic-butterfly detection.

A separatrix is grown generation by generation: each new generation is the
image of the previous one under ``F = T^(power*k)``, where ``k = 2`` when the
unstable multiplier is negative (the two branches are then swapped by a
single application and only the even power keeps a branch in place).
Whenever consecutive images are further apart than ``max_spacing`` a point
is inserted whose preimage is the midpoint of the corresponding chord of the
previous generation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .maps import DEFAULT_ESCAPE_BOUND, MapError, MapSpec, evaluate_many, jacobian_power
from .spectral import ConvergenceError, EquilibriumRecord, find_cycle

MAX_POINTS = 2_000_000


class UnsupportedSaddleError(MapError):
    pass


class NotReturnedError(MapError):
    pass


class InvalidBracketError(MapError):
    pass


class Branch(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> float:
        return 1.0 if self is Branch.PLUS else -1.0


@dataclass
class UnstableDirection:
    point: np.ndarray
    gamma: float
    vector: np.ndarray  # unit right eigenvector, largest component positive
    left: np.ndarray  # left eigenvector scaled so left @ vector == 1
    power: int


@dataclass
class SeparatrixPolyline:
    branch: Branch
    points: np.ndarray
    preimages: np.ndarray  # NaN rows for the seed segment
    generation: np.ndarray
    seed_offset: float
    max_spacing: float
    arclength: float
    saddle: UnstableDirection
    step_power: int  # number of applications of T between generations
    escaped: bool = False
    converged: bool = False

    @property
    def n_seed(self) -> int:
        return int(np.sum(self.generation == 0))


@dataclass
class ClosestApproach:
    entry_index: int
    entry_point: np.ndarray
    unstable_component: float
    distance: float


def _null_vector(M: np.ndarray) -> np.ndarray:
    rows = [np.cross(M[i], M[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    v = max(rows, key=np.linalg.norm)
    return v / np.linalg.norm(v)


def unstable_direction(m: MapSpec, saddle: EquilibriumRecord, power: int | None = None,
                       index: int = 0) -> UnstableDirection:
    """Unstable eigen-data of ``T^power`` at ``saddle.points[index]``.

    ``power`` defaults to the record's period.
    """
    power = saddle.period if power is None else power
    p = np.asarray(saddle.points[index], dtype=float)
    img, D = jacobian_power(m, p, power)
    from .spectral import eigenvalues3, _spectrum_facts

    mults = eigenvalues3(D)
    facts = _spectrum_facts(mults)
    if facts["topo_type"] != (2, 1) or not facts["hyperbolic"]:
        raise UnsupportedSaddleError(f"saddle type {facts['topo_type']} is not (2, 1)")
    gamma = next(z for z in mults if abs(z) > 1.0)
    if gamma.imag != 0.0:
        raise UnsupportedSaddleError("complex unstable multiplier")
    g = gamma.real
    v = _null_vector(D - g * np.eye(3))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    w = _null_vector(D.T - g * np.eye(3))
    w = w / (w @ v)
    return UnstableDirection(point=p, gamma=g, vector=v, left=w, power=power)


def _apply(m: MapSpec, pts: np.ndarray, n: int, bound: float) -> np.ndarray:
    out = pts
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            out = evaluate_many(m, out)
            out[~np.all(np.abs(out) < bound, axis=1)] = np.nan
    return out


def trace_separatrix(m: MapSpec, saddle: EquilibriumRecord, branch: Branch | str = Branch.PLUS,
                     arclength_budget: float = 20.0, max_spacing: float = 1e-3,
                     power: int | None = None, index: int = 0, seed_offset: float | None = None,
                     n_seed: int = 16, escape_bound: float = DEFAULT_ESCAPE_BOUND,
                     max_points: int = MAX_POINTS, max_generations: int = 20_000,
                     min_growth: float = 1e-6) -> SeparatrixPolyline:
    """Grow one branch of the unstable manifold of a (2, 1) saddle of ``T^power``."""
    branch = Branch(branch)
    ud = unstable_direction(m, saddle, power, index)
    k = 2 if ud.gamma < 0 else 1
    nstep = ud.power * k
    p = ud.point
    eps = 1e-7 * (1.0 + np.linalg.norm(p)) if seed_offset is None else float(seed_offset)

    q0 = p + branch.sign * eps * ud.vector
    q1 = _apply(m, q0[None, :], nstep, escape_bound)[0]
    t = np.linspace(0.0, 1.0, n_seed)[:, None]
    cur = q0 + t * (q1 - q0)

    pts = [cur]
    pre = [np.full_like(cur, np.nan)]
    gen = [np.zeros(len(cur), dtype=int)]
    length = float(np.sum(np.linalg.norm(np.diff(cur, axis=0), axis=1)))
    escaped = False
    converged = False
    g = 0
    total = len(cur)
    while length < arclength_budget and total < max_points:
        g += 1
        new, new_pre = _next_generation(m, cur, nstep, max_spacing, escape_bound)
        bad = ~np.all(np.isfinite(new), axis=1)
        if bad.any():
            cut = int(np.argmax(bad))
            new, new_pre = new[:cut], new_pre[:cut]
            escaped = True
        # first image duplicates the last point of the previous generation
        seg = np.linalg.norm(np.diff(new, axis=0), axis=1)
        cum = length + np.cumsum(seg)
        stop = len(seg)
        over = np.nonzero(cum >= arclength_budget)[0]
        if over.size:
            stop = int(over[0]) + 1
        stop = min(stop, max_points - total)
        pts.append(new[1:stop + 1])
        pre.append(new_pre[1:stop + 1])
        gen.append(np.full(len(pts[-1]), g))
        total += len(pts[-1])
        gen_length = float(np.sum(seg[:stop]))
        length = float(cum[stop - 1]) if stop > 0 else length
        if escaped or stop < len(seg) or len(new) < 2:
            break
        if gen_length < min_growth * max_spacing or g >= max_generations:
            # the branch has collapsed onto an attracting set and stopped growing
            converged = True
            break
        cur = new
    return SeparatrixPolyline(branch=branch, points=np.concatenate(pts), preimages=np.concatenate(pre),
                              generation=np.concatenate(gen), seed_offset=eps,
                              max_spacing=max_spacing, arclength=length, saddle=ud,
                              step_power=nstep, escaped=escaped, converged=converged)


def _next_generation(m, cur, nstep, max_spacing, bound, max_rounds=60):
    """Images of ``cur`` with midpoint-preimage insertion until spacing <= max_spacing."""
    # each entry: preimage point on the polyline ``cur`` and its image
    pre = cur.copy()
    img = _apply(m, pre, nstep, bound)
    for _ in range(max_rounds):
        gap = np.linalg.norm(np.diff(img, axis=0), axis=1)
        pgap = np.linalg.norm(np.diff(pre, axis=0), axis=1)
        # stop refining chords that are already at round-off scale
        need = (gap > max_spacing) & (pgap > 1e-14 * (1.0 + np.abs(pre[:-1]).max(axis=1)))
        need &= np.isfinite(gap)
        if not need.any():
            break
        idx = np.nonzero(need)[0]
        mid = 0.5 * (pre[idx] + pre[idx + 1])
        mid_img = _apply(m, mid, nstep, bound)
        pre = np.insert(pre, idx + 1, mid, axis=0)
        img = np.insert(img, idx + 1, mid_img, axis=0)
    return img, pre


def closest_approach(poly: SeparatrixPolyline, capture_radius: float) -> ClosestApproach:
    """Closest point of the first return of the polyline into the ball about the saddle.

    The polyline starts inside the ball; the first passage is the first run of
    points back inside after it has left. The reported point is the one of
    that passage nearest the saddle. ``unstable_component`` is its coordinate
    along the unstable eigenvector in the eigenbasis (left-eigenvector
    projection), so its sign tells on which side of the local stable manifold
    the separatrix returns.
    """
    p = poly.saddle.point
    d = np.linalg.norm(poly.points - p, axis=1)
    inside = d <= capture_radius
    outside = np.nonzero(~inside)[0]
    if outside.size == 0:
        raise NotReturnedError("polyline never leaves the capture ball")
    after = np.nonzero(inside[outside[0]:])[0]
    if after.size == 0:
        raise NotReturnedError(
            f"separatrix does not return within r={capture_radius:g} "
            f"(arclength {poly.arclength:.3g})")
    start = int(outside[0] + after[0])
    leave = np.nonzero(~inside[start:])[0]
    end = start + (int(leave[0]) if leave.size else len(d) - start)
    i = start + int(np.argmin(d[start:end]))
    q = poly.points[i]
    u = float(poly.saddle.left @ (q - p))
    return ClosestApproach(entry_index=i, entry_point=q, unstable_component=u, distance=float(d[i]))


# --------------------------------------------------------------------------
# butterfly detection


@dataclass
class ButterflySettings:
    period: int = 2
    branch: Branch = Branch.PLUS
    index: int = 0
    arclength_budget: float = 20.0
    max_spacing: float = 1e-3
    capture_radius: float = 0.06
    tol_param: float = 1e-4
    seed: tuple[float, float, float] | None = None
    max_iter: int = 60


@dataclass
class ButterflyResult:
    param_axis: str
    bracket: tuple[float, float]
    value: float
    iterations: int
    functional_history: list[tuple[float, float]] = field(default_factory=list)


def butterfly_functional(m: MapSpec, settings: ButterflySettings, seed=None):
    """Return ``(unstable_component, record)`` at one parameter value."""
    seed = settings.seed if seed is None else seed
    if seed is None:
        raise ValueError("a cycle seed is required")
    rec = find_cycle(m, settings.period, seed)
    poly = trace_separatrix(m, rec, settings.branch, settings.arclength_budget,
                            settings.max_spacing, power=settings.period, index=settings.index)
    ca = closest_approach(poly, settings.capture_radius)
    return ca.unstable_component, rec


def bisect_sign_change(f, lo: float, hi: float, tol: float, max_iter: int = 100):
    """Bisection on the sign of ``f``; returns ``(lo, hi, history)``.

    ``f`` must return a real number; a raised :class:`MapError` propagates
    with the parameter value attached to the message.
    """
    def call(x):
        try:
            return f(x)
        except MapError as exc:
            raise type(exc)(f"at parameter {x!r}: {exc}") from exc

    flo, fhi = call(lo), call(hi)
    hist = [(lo, flo), (hi, fhi)]
    if flo == 0.0:
        return lo, lo, hist
    if fhi == 0.0:
        return hi, hi, hist
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise InvalidBracketError(f"functional has the same sign at {lo} ({flo:.3e}) and {hi} ({fhi:.3e})")
    n = 0
    while hi - lo > tol and n < max_iter:
        mid = 0.5 * (lo + hi)
        fm = call(mid)
        hist.append((mid, fm))
        n += 1
        if fm == 0.0:
            return mid, mid, hist
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo, hi, hist


def butterfly_bisect(template: MapSpec, param_axis: str, bracket: tuple[float, float],
                     settings: ButterflySettings) -> ButterflyResult:
    """Locate a homoclinic butterfly by bisection on the separatrix-return side."""
    state = {"seed": settings.seed}

    def f(x):
        val, rec = butterfly_functional(template.with_param(param_axis, x), settings, state["seed"])
        return val

    lo, hi = bracket
    try:
        lo, hi, hist = bisect_sign_change(f, float(lo), float(hi), settings.tol_param, settings.max_iter)
    except ConvergenceError as exc:
        raise NotReturnedError(f"cycle lost: {exc}") from exc
    return ButterflyResult(param_axis=param_axis, bracket=(lo, hi), value=0.5 * (lo + hi),
                           iterations=len(hist) - 2, functional_history=hist)
