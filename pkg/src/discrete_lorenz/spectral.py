"""Fixed points, periodic cycles, multipliers and their classification."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .maps import MapError, MapSpec, evaluate, iterate, jacobian, jacobian_power

UNIT_TOL = 1e-9
RESONANCE_WINDOW = 0.1


class ConvergenceError(MapError):
    """Newton failed to converge, or converged to an orbit of lower period."""


class Variant(str, enum.Enum):
    ORIENTABLE_NEGATIVE = "orientable-negative"  # 0<l1<1, -1<l2<0, g<-1
    NONORIENTABLE_POSITIVE_PAIR = "nonorientable-positive-pair"  # 0<l2<l1<1, g<-1
    POSITIVE_UNSTABLE = "positive-unstable"  # 0<l1,l2<1<g


# --------------------------------------------------------------------------
# cubic roots


def _sort_key(z: complex):
    return (-abs(z), -z.real, -z.imag)


def sort_multipliers(mults) -> tuple[complex, complex, complex]:
    """Descending modulus; ties by descending real, then imaginary part."""
    return tuple(sorted((complex(z) for z in mults), key=_sort_key))


def cubic_roots(a2: float, a1: float, a0: float) -> list[complex]:
    """Roots of ``l^3 + a2 l^2 + a1 l + a0`` (real coefficients).

    Closed form (trigonometric for three real roots, Cardano otherwise),
    followed by one Newton step per root. Repeated roots are snapped when the
    discriminant vanishes relative to its terms.
    """
    shift = -a2 / 3.0
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + a0
    h = q / 2.0
    k = p / 3.0
    disc = h * h + k ** 3
    scale = h * h + abs(k) ** 3
    if scale == 0.0:
        ts = [0.0, 0.0, 0.0]
    elif abs(disc) <= 1e-12 * scale:
        # repeated root: t1 simple, t2 double
        t1 = 3.0 * q / p
        t2 = -1.5 * q / p
        ts = [t1, t2, t2]
    elif disc < 0.0:
        r = 2.0 * math.sqrt(-k)
        arg = max(-1.0, min(1.0, -h / math.sqrt(-k ** 3)))
        th = math.acos(arg) / 3.0
        ts = [r * math.cos(th - 2.0 * math.pi * j / 3.0) for j in range(3)]
    else:
        sd = math.sqrt(disc)
        # take the larger-magnitude cube first; uv = -k recovers the other without cancellation
        w = -h - math.copysign(sd, h)
        u = math.copysign(abs(w) ** (1.0 / 3.0), w)
        v = -k / u if u != 0.0 else 0.0
        t1 = u + v
        re = -(u + v) / 2.0
        im = (u - v) * math.sqrt(3.0) / 2.0
        ts = [t1, complex(re, im), complex(re, -im)]

    def f(z):
        return ((z + a2) * z + a1) * z + a0

    def df(z):
        return (3.0 * z + 2.0 * a2) * z + a1

    roots = []
    for t in ts:
        z = t + shift
        d = df(z)
        if abs(d) > 1e-8:
            zn = z - f(z) / d
            if abs(f(zn)) <= abs(f(z)):
                z = zn
        if isinstance(z, complex) and z.imag == 0.0:
            z = complex(z.real, 0.0)
        roots.append(complex(z))
    # a real cubic's complex roots come in exact conjugate pairs
    cplx = [z for z in roots if z.imag != 0.0]
    if len(cplx) == 2:
        z = cplx[0]
        roots = [r for r in roots if r.imag == 0.0] + [complex(z.real, abs(z.imag)),
                                                       complex(z.real, -abs(z.imag))]
    return roots


def eigenvalues3(M: np.ndarray) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix via its characteristic cubic."""
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    minors = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
              + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
              + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
    det = (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
           - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
           + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    return sort_multipliers(cubic_roots(-tr, minors, -det))


# --------------------------------------------------------------------------
# records


@dataclass
class EquilibriumRecord:
    period: int
    points: np.ndarray  # (period, 3)
    multipliers: tuple[complex, complex, complex]
    topo_type: tuple[int, int]
    saddle_value: float
    orientation: int
    is_saddle_focus: bool
    resonance_angle: float | None
    hyperbolic: bool = True
    residual: float = 0.0

    @property
    def point(self) -> np.ndarray:
        return self.points[0]

    def relabel(self, shift: int) -> EquilibriumRecord:
        """Same cycle starting from ``points[shift]``."""
        pts = np.roll(self.points, -shift, axis=0)
        return EquilibriumRecord(**{**self.__dict__, "points": pts})


@dataclass
class LorenzConditionReport:
    cond_a: bool
    cond_b: bool
    cond_c: bool
    variant: Variant | None
    saddle_value: float
    topo_type: tuple[int, int]
    is_saddle_focus: bool
    hyperbolic: bool
    resonance_angle: float | None = None
    near_resonance_1_4: bool = False
    near_resonance_1_3: bool = False
    lambda1: complex | None = None
    lambda2: complex | None = None
    gamma: complex | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def lorenz_like(self) -> bool:
        return self.cond_a and self.cond_b and self.cond_c


def cycle_jacobian(m: MapSpec, points) -> np.ndarray:
    """Ordered product ``DT(p_{n-1}) ... DT(p_0)`` over the cycle."""
    D = np.eye(3)
    for p in np.atleast_2d(points):
        D = jacobian(m, p) @ D
    return D


def multipliers(m: MapSpec, rec_or_points) -> tuple[complex, complex, complex]:
    pts = rec_or_points.points if isinstance(rec_or_points, EquilibriumRecord) else rec_or_points
    return eigenvalues3(cycle_jacobian(m, pts))


def _make_record(m: MapSpec, points: np.ndarray, residual: float) -> EquilibriumRecord:
    mults = multipliers(m, points)
    info = _spectrum_facts(mults)
    return EquilibriumRecord(period=len(points), points=np.asarray(points, dtype=float) + 0.0,
                             multipliers=mults, residual=residual, **info)


def _spectrum_facts(mults) -> dict:
    mods = [abs(z) for z in mults]
    hyperbolic = all(abs(r - 1.0) > UNIT_TOL for r in mods)
    stable = [z for z in mults if abs(z) < 1.0 - UNIT_TOL]
    unstable = [z for z in mults if abs(z) > 1.0 + UNIT_TOL]
    if stable and unstable:
        lam = max(stable, key=abs)
        gam = min(unstable, key=abs)
        sigma = abs(lam) * abs(gam)
    else:
        sigma = math.nan
    prod = mults[0] * mults[1] * mults[2]
    cplx = [z for z in mults if abs(z.imag) > 0.0]
    phi = abs(cmath.phase(cplx[0])) if cplx else None
    return dict(
        topo_type=(len(stable), len(unstable)),
        saddle_value=sigma,
        orientation=1 if prod.real > 0 else -1,
        is_saddle_focus=bool(cplx) and bool(stable) and bool(unstable),
        resonance_angle=phi,
        hyperbolic=hyperbolic,
    )


# --------------------------------------------------------------------------
# finding fixed points and cycles


def find_fixed_points(m: MapSpec, seeds=None, tol: float = 1e-12) -> list[EquilibriumRecord]:
    """All fixed points of ``m``.

    Companion families have only diagonal fixed points ``x = y = z`` solving
    ``q2 x^2 + (B + gy + gz - 1) x + g0 = 0``; affine maps are solved
    linearly. ``seeds`` are accepted for API symmetry and used only as a
    Newton fallback when the closed form is unavailable.
    """
    c = m.coef
    if m.kind == _kernels.AFFINE:
        A = c[:9].reshape(3, 3)
        try:
            p = np.linalg.solve(np.eye(3) - A, c[9:])
        except np.linalg.LinAlgError:
            return []
        return [_make_record(m, p[None, :], _res(m, p, 1))]
    B, g0, gy, gz, gyy, gyz, gzz = c
    qa = gyy + gyz + gzz
    qb = B + gy + gz - 1.0
    qc = g0
    xs: list[float] = []
    if qa == 0.0:
        if qb != 0.0:
            xs = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            xs = []
        elif disc == 0.0:
            xs = [-qb / (2.0 * qa)]
        else:
            sq = math.sqrt(disc)
            # stable quadratic formula
            t = -0.5 * (qb + math.copysign(sq, qb))
            xs = sorted({t / qa, qc / t} if t != 0.0 else {0.0, -qb / qa})
    out = []
    for x in xs:
        p = np.array([x, x, x])
        p = _polish(m, p, 1)
        r = _res(m, p, 1)
        if r < max(tol, 1e-10):
            out.append(_make_record(m, p[None, :], r))
    if not out and seeds is not None:
        for s in seeds:
            try:
                out.append(find_cycle(m, 1, s))
            except ConvergenceError:
                pass
    return out


def _res(m: MapSpec, p, period: int) -> float:
    return float(np.max(np.abs(iterate(m, p, period) - p)))


def _polish(m: MapSpec, p: np.ndarray, period: int, steps: int = 2) -> np.ndarray:
    best, rbest = p, _res(m, p, period)
    for _ in range(steps):
        if rbest == 0.0:
            break
        img, D = jacobian_power(m, best, period)
        try:
            q = best - np.linalg.solve(D - np.eye(3), img - best)
        except np.linalg.LinAlgError:
            break
        rq = _res(m, q, period)
        if rq < rbest:
            best, rbest = q, rq
        else:
            break
    return best


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n) if n % d == 0]


def newton_cycle(m: MapSpec, period: int, seed, max_iter: int = 50, tol: float = 1e-12):
    """Damped Newton on ``T^p(s) - s``; returns ``(point, residual)`` or raises."""
    s = np.asarray(seed, dtype=float).reshape(3).copy()
    try:
        img, D = jacobian_power(m, s, period)
    except MapError as exc:
        raise ConvergenceError(f"seed {tuple(s)} escapes: {exc}") from None
    F = img - s
    r = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if r < tol:
            break
        try:
            delta = np.linalg.solve(D - np.eye(3), -F)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Newton system") from None
        t = 1.0
        for _ in range(30):
            cand = s + t * delta
            try:
                img_c, D_c = jacobian_power(m, cand, period)
                F_c = img_c - cand
                r_c = float(np.max(np.abs(F_c)))
            except MapError:
                r_c = math.inf
            if math.isfinite(r_c) and r_c < r:
                break
            t *= 0.5
        else:
            raise ConvergenceError(f"Newton stalled at residual {r:.3e}")
        s, D, F, r = cand, D_c, F_c, r_c
    if not r < tol:
        # final residual may sit at round-off just above tol; accept if polishing cannot improve
        if r > 1e-10:
            raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {r:.3e})")
    return s, r


def find_cycle(m: MapSpec, period: int, seed, max_iter: int = 50,
               lower_period_tol: float = 1e-8) -> EquilibriumRecord:
    """Newton search for a cycle of exact period ``period`` from ``seed``."""
    if period < 1:
        raise ValueError("period must be >= 1")
    s, r = newton_cycle(m, period, seed, max_iter=max_iter)
    for d in _divisors(period):
        if np.max(np.abs(iterate(m, s, d) - s)) < lower_period_tol:
            raise ConvergenceError(f"converged to an orbit of period {d}, not {period}")
    pts = [s]
    for _ in range(period - 1):
        pts.append(evaluate(m, pts[-1]))
    return _make_record(m, np.array(pts), r)


# --------------------------------------------------------------------------
# classification


def classify(rec_or_mults) -> LorenzConditionReport:
    """Check the Lorenz-type multiplier conditions for a record or a multiplier triple."""
    if isinstance(rec_or_mults, EquilibriumRecord):
        mults = rec_or_mults.multipliers
    else:
        mults = sort_multipliers(rec_or_mults)
    facts = _spectrum_facts(mults)
    phi = facts["resonance_angle"]
    rep = LorenzConditionReport(
        cond_a=False, cond_b=False, cond_c=False, variant=None,
        saddle_value=facts["saddle_value"], topo_type=facts["topo_type"],
        is_saddle_focus=facts["is_saddle_focus"], hyperbolic=facts["hyperbolic"],
        resonance_angle=phi,
        near_resonance_1_4=phi is not None and abs(phi - math.pi / 2) < RESONANCE_WINDOW,
        near_resonance_1_3=phi is not None and abs(phi - 2 * math.pi / 3) < RESONANCE_WINDOW,
    )
    if not rep.hyperbolic:
        rep.notes.append("non-hyperbolic: a multiplier lies on the unit circle")
        return rep
    rep.cond_c = rep.saddle_value > 1.0
    if rep.topo_type != (2, 1):
        return rep
    stable = sorted((z for z in mults if abs(z) < 1.0), key=_sort_key)
    gamma = next(z for z in mults if abs(z) > 1.0)
    rep.gamma = gamma
    real = all(z.imag == 0.0 for z in mults)
    if real:
        pos = [z.real for z in stable if z.real > 0]
        neg = [z.real for z in stable if z.real < 0]
        g = gamma.real
        if len(pos) == 1 and len(neg) == 1:
            l1, l2 = pos[0], neg[0]
            rep.cond_a = -1 < l2 < 0 < l1 < 1 and g < -1 and abs(l1 * l2 * g) < 1
            if g < -1:
                rep.variant = Variant.ORIENTABLE_NEGATIVE
        else:
            l1, l2 = stable[0].real, stable[1].real
            if len(pos) == 2 and g < -1:
                rep.variant = Variant.NONORIENTABLE_POSITIVE_PAIR
            elif len(pos) == 2 and g > 1:
                rep.variant = Variant.POSITIVE_UNSTABLE
        rep.lambda1, rep.lambda2 = complex(l1), complex(l2)
        rep.cond_b = abs(l1) > abs(l2)
    else:
        rep.lambda1, rep.lambda2 = stable
        rep.cond_b = abs(stable[0]) > abs(stable[1])
    return rep
