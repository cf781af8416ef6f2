"""Strong-contracting direction field along an orbit and the angle-vs-distance
continuity test for it (the LMP graph).

Directions are lines: the angle between two samples is measured as
``atan2(|u x v|, |u . v|)`` which equals ``arccos(|u . v|)`` but keeps full
precision for tiny angles. Angles live in ``[0, pi/2]``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .maps import MapSpec, NotInvertibleError, OrbitSegment, fmt

DEFAULT_WARMUP = 1000
DEFAULT_PAIRS = 100_000
DEFAULT_BINS = 24
DEFAULT_DX_MIN = 1e-7
DEFAULT_PHI_TOL = 0.1
MIN_BIN_COUNT = 20
TAIL_FRACTION = 1e-3  # "small scale" = dx below this fraction of the diameter


def line_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Angle between line directions, row-wise for ``(n, 3)`` inputs."""
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    cr = np.linalg.norm(np.cross(u, v), axis=1)
    dt = np.abs(np.einsum("ij,ij->i", u, v))
    return np.arctan2(cr, dt)


@dataclass
class DirectionSample:
    point: np.ndarray
    direction: np.ndarray
    convergence_residual: float
    flagged: bool


@dataclass
class DirectionField:
    """Column storage of direction samples along an orbit.

    ``residuals[k]`` is the angle between ``DT(p_k) d_k`` and ``d_{k+1}``;
    ``spread[k]`` is the angle between the fields obtained from two
    transverse starting vectors, a direct measure of non-convergence.
    """

    points: np.ndarray
    directions: np.ndarray
    residuals: np.ndarray
    spread: np.ndarray
    tol: float

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k: int) -> DirectionSample:
        return DirectionSample(self.points[k], self.directions[k], float(self.residuals[k]),
                               bool(self.flagged[k]))

    @property
    def flagged(self) -> np.ndarray:
        return (self.residuals > self.tol) | (self.spread > self.tol)


def strong_contracting_field(m: MapSpec, orbit: OrbitSegment | np.ndarray, warmup: int = DEFAULT_WARMUP,
                             tol: float = 1e-6) -> DirectionField:
    """Field N1 of most strongly contracted directions along a stored orbit.

    A unit vector is carried backwards along the orbit by the inverse
    differential, so it converges to the direction that forward products
    contract the most. The last ``warmup`` orbit points (where the backward
    run has not yet converged) are dropped.
    """
    if isinstance(orbit, OrbitSegment):
        if orbit.escaped:
            raise ValueError("orbit escaped; no direction field")
        pts = orbit.points
    else:
        pts = np.asarray(orbit, dtype=float)
    if len(pts) <= warmup + 1:
        raise ValueError(f"orbit of {len(pts)} points is too short for warm-up {warmup}")
    if m.det == 0.0:
        raise NotInvertibleError(f"{m} has a singular differential")
    pts = np.ascontiguousarray(pts)
    d1 = _kernels.contracting_field(m.kind, m.coef, pts, np.array([1.0, 0.6, 0.3]))
    d2 = _kernels.contracting_field(m.kind, m.coef, pts, np.array([-0.3, 0.2, 1.0]))
    n = len(pts) - warmup
    res = _kernels.push_residuals(m.kind, m.coef, pts[: n + 1], d1[: n + 1])
    return DirectionField(points=pts[:n], directions=d1[:n], residuals=res[:n],
                          spread=line_angle(d1[:n], d2[:n]), tol=tol)


# --------------------------------------------------------------------------
# LMP graph


@dataclass
class LMPGraph:
    dx: np.ndarray
    dphi: np.ndarray
    stride: int
    seed: int
    diameter: float
    bin_edges: np.ndarray
    bin_count: np.ndarray
    bin_p95: np.ndarray
    bin_max: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.dx)

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.dx, self.dphi])

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dx", "dphi"])
            for a, b in zip(self.dx, self.dphi):
                w.writerow([fmt(a), fmt(b)])
        return path


def _bin(dx, dphi, edges):
    n = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, dx, side="right") - 1, 0, n - 1)
    count = np.bincount(idx, minlength=n)
    p95 = np.full(n, np.nan)
    mx = np.full(n, np.nan)
    order = np.argsort(idx, kind="stable")
    splits = np.split(dphi[order], np.cumsum(count)[:-1])
    for k, chunk in enumerate(splits):
        if len(chunk):
            p95[k] = np.percentile(chunk, 95)
            mx[k] = chunk.max()
    return count, p95, mx


def lmp_graph(samples: DirectionField, n_pairs: int = DEFAULT_PAIRS, stride: int = 1, seed: int = 0,
              n_bins: int = DEFAULT_BINS, dx_min: float = DEFAULT_DX_MIN,
              neighbour_fraction: float = 0.5, k_max: int = 32) -> LMPGraph:
    """Sample ``n_pairs`` point pairs and record ``(dx, dphi)`` for each.

    Uniform pairs on a fractal attractor almost never come closer than a
    few 1e-4, so a ``neighbour_fraction`` of the pairs join a random sample
    point to its k-th nearest neighbour (k uniform in ``1..k_max``). That
    fills the small-distance end of the graph, which is where continuity is
    decided.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pts = samples.points[::stride]
    dirs = samples.directions[::stride]
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    n_nn = int(round(n_pairs * neighbour_fraction)) if n > k_max + 1 else 0
    n_uni = n_pairs - n_nn
    i = rng.integers(0, n, n_uni)
    j = (i + rng.integers(1, n, n_uni)) % n
    if n_nn:
        tree = cKDTree(pts)
        a = rng.integers(0, n, n_nn)
        k = rng.integers(1, k_max + 1, n_nn)
        _, nb = tree.query(pts[a], k=k_max + 1)
        b = nb[np.arange(n_nn), k]
        i = np.concatenate([i, a])
        j = np.concatenate([j, b])
    dx = np.linalg.norm(pts[i] - pts[j], axis=1)
    dphi = line_angle(dirs[i], dirs[j])
    diameter = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    edges = np.logspace(math.log10(dx_min), math.log10(max(diameter, 10 * dx_min)), n_bins + 1)
    count, p95, mx = _bin(dx, dphi, edges)
    return LMPGraph(dx=dx, dphi=dphi, stride=stride, seed=seed, diameter=diameter, bin_edges=edges,
                    bin_count=count, bin_p95=p95, bin_max=mx)


# --------------------------------------------------------------------------
# verdict


class Verdict(str, enum.Enum):
    CONSISTENT = "ConsistentPseudohyperbolic"
    VIOLATED = "ContinuityViolated"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class LMPVerdict:
    verdict: Verdict
    smallest_bin_p95: float
    trend_slope: float
    phi_tol: float
    span_decades: float
    n_small: int
    n_small_violations: int
    notes: list[str] = field(default_factory=list)

    def to_json(self, graph: LMPGraph | None = None) -> dict:
        out = {"verdict": self.verdict.value, "smallest_bin_p95": self.smallest_bin_p95,
               "trend_slope": self.trend_slope, "phi_tol": self.phi_tol,
               "span_decades": self.span_decades, "n_small": self.n_small,
               "n_small_violations": self.n_small_violations, "notes": self.notes}
        if graph is not None:
            out.update(stride=graph.stride, n_pairs=graph.n_pairs, seed=graph.seed)
        return out

    def write_json(self, path, graph: LMPGraph | None = None) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(graph), indent=2, sort_keys=True) + "\n")
        return path


def lmp_verdict(graph: LMPGraph, phi_tol: float = DEFAULT_PHI_TOL,
                min_count: int = MIN_BIN_COUNT) -> LMPVerdict:
    """Continuity verdict for the field behind ``graph``.

    Consistent: p95 angle of the smallest populated bin below ``phi_tol``,
    binned p95 increasing with distance (positive log-log slope), and no
    cluster of large angles among small-distance pairs. Violated: either
    angle test fails. Inconclusive: too few pairs, less than three populated
    decades, or a flat/decreasing trend with small angles.
    """
    pop = graph.bin_count >= min_count
    centers = np.sqrt(graph.bin_edges[:-1] * graph.bin_edges[1:])
    notes: list[str] = []
    if not pop.any():
        return LMPVerdict(Verdict.INCONCLUSIVE, math.nan, math.nan, phi_tol, 0.0, 0, 0, ["no populated bin"])
    lo, hi = np.flatnonzero(pop)[[0, -1]]
    span = float(math.log10(graph.bin_edges[hi + 1] / graph.bin_edges[lo]))
    smallest = float(graph.bin_p95[lo])
    x = np.log10(centers[pop])
    y = np.log10(np.maximum(graph.bin_p95[pop], 1e-16))
    slope = float(np.polyfit(x, y, 1)[0]) if pop.sum() >= 2 else math.nan

    small = graph.dx < TAIL_FRACTION * graph.diameter
    n_small = int(small.sum())
    n_bad = int(np.count_nonzero(graph.dphi[small] > phi_tol))
    tail_bad = n_bad >= max(3, 1e-4 * n_small)

    if graph.n_pairs < 1000 or span < 3.0:
        notes.append(f"insufficient data: {graph.n_pairs} pairs over {span:.2f} decades")
        v = Verdict.INCONCLUSIVE
    elif smallest >= phi_tol or tail_bad:
        if tail_bad:
            notes.append(f"{n_bad} of {n_small} small-distance pairs exceed {phi_tol:g} rad")
        v = Verdict.VIOLATED
    elif slope > 0:
        v = Verdict.CONSISTENT
    else:
        notes.append("angles do not shrink with distance")
        v = Verdict.INCONCLUSIVE
    return LMPVerdict(v, smallest, slope, phi_tol, span, n_small, n_bad, notes)
