"""Two-parameter charts of the leading Lyapunov exponent and attractor class."""
from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .lyapunov import DEFAULT_S0, DEFAULT_TOL, AttractorClass, classify_orbit
from .maps import Family, MapSpec, PARAM_NAMES, fmt

PALETTE: dict[AttractorClass, tuple[int, int, int]] = {
    AttractorClass.STABLE_POINT: (0, 0, 255),
    AttractorClass.STABLE_CYCLE: (0, 0, 255),
    AttractorClass.INVARIANT_CURVE: (0, 200, 0),
    AttractorClass.CHAOTIC: (255, 105, 180),
    AttractorClass.DIVERGENT: (255, 255, 255),
}


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"axis {self.name}: resolution must be >= 2")
        if not self.hi > self.lo:
            raise ValueError(f"axis {self.name}: empty window [{self.lo}, {self.hi}]")

    @classmethod
    def parse(cls, text: str) -> Axis:
        """``NAME:lo:hi:n``."""
        try:
            name, lo, hi, n = text.split(":")
            return cls(name, float(lo), float(hi), int(n))
        except ValueError as exc:
            raise ValueError(f"bad axis {text!r} (expected NAME:lo:hi:n): {exc}") from None

    def values(self) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * np.arange(self.n) / (self.n - 1)

    def nearest(self, v: float) -> int:
        return int(np.argmin(np.abs(self.values() - v)))


@dataclass(frozen=True)
class ChartSpec:
    family: Family
    fixed: dict[str, float]
    axis1: Axis
    axis2: Axis
    n_transient: int = 10_000
    n_iter: int = 20_000
    s0: tuple[float, float, float] = DEFAULT_S0
    s0_policy: str = "fixed"  # or "inherit"
    tol: float = DEFAULT_TOL
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        names = set(PARAM_NAMES[self.family])
        swept = {self.axis1.name, self.axis2.name}
        if self.axis1.name == self.axis2.name:
            raise ValueError("the two axes must differ")
        missing = names - swept - set(self.fixed)
        unknown = (swept | set(self.fixed)) - names
        if unknown:
            raise ValueError(f"unknown parameters for {self.family.value}: {sorted(unknown)}")
        if missing:
            raise ValueError(f"parameters not fixed: {sorted(missing)}")
        if self.s0_policy not in ("fixed", "inherit"):
            raise ValueError(f"s0_policy must be 'fixed' or 'inherit', not {self.s0_policy!r}")

    def map_at(self, i: int, j: int) -> MapSpec:
        vals = dict(self.fixed)
        vals[self.axis1.name] = float(self.axis1.values()[i])
        vals[self.axis2.name] = float(self.axis2.values()[j])
        return MapSpec(self.family, tuple(vals[n] for n in PARAM_NAMES[self.family]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        d["s0"] = list(self.s0)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ChartSpec:
        d = dict(d)
        d["axis1"] = Axis(**d["axis1"])
        d["axis2"] = Axis(**d["axis2"])
        d["s0"] = tuple(d["s0"])
        return cls(**d)


@dataclass
class ChartResult:
    spec: ChartSpec
    L1: np.ndarray  # (n1, n2), indexed [i, j]
    classes: np.ndarray  # class codes, same shape
    elapsed: float = 0.0
    version: str = ""

    def cls(self, i: int, j: int) -> AttractorClass:
        return AttractorClass.from_code(self.classes[i, j])

    def manifest(self) -> dict:
        return {"spec": self.spec.to_dict(), "version": self.version, "elapsed_s": self.elapsed,
                "shape": list(self.L1.shape)}


def _row(spec: ChartSpec, j: int) -> tuple[int, np.ndarray, np.ndarray]:
    n1 = spec.axis1.n
    L = np.empty(n1)
    c = np.empty(n1, dtype=np.int8)
    for i in range(n1):
        sp, k = classify_orbit(spec.map_at(i, j), spec.s0, spec.n_transient, spec.n_iter, spec.tol)
        L[i] = sp.exponents[0]
        c[i] = k.code
    return j, L, c


def _inherit(spec: ChartSpec, L, C):
    # Serpentine sweep: along axis1 on even rows, back on odd rows.
    s = np.asarray(spec.s0, dtype=float)
    for j in range(spec.axis2.n):
        cols = range(spec.axis1.n) if j % 2 == 0 else range(spec.axis1.n - 1, -1, -1)
        for i in cols:
            sp, k = classify_orbit(spec.map_at(i, j), s, spec.n_transient, spec.n_iter, spec.tol)
            L[i, j] = sp.exponents[0]
            C[i, j] = k.code
            s = np.asarray(spec.s0, dtype=float) if sp.escaped else sp.final_state.copy()


def compute_chart(spec: ChartSpec, executor: Executor | None = None) -> ChartResult:
    """One Lyapunov run per cell.

    Rows of constant axis2 are dispatched as independent tasks; results are
    placed by index, so the grid does not depend on scheduling. With the
    ``inherit`` seed policy cells are visited in a fixed serpentine order on
    the calling thread and ``workers`` is ignored.
    """
    from . import __version__

    t0 = time.perf_counter()
    n1, n2 = spec.axis1.n, spec.axis2.n
    L = np.empty((n1, n2))
    C = np.empty((n1, n2), dtype=np.int8)
    if spec.s0_policy == "inherit":
        _inherit(spec, L, C)
    else:
        own = None
        if executor is None and spec.workers > 1:
            executor = own = ThreadPoolExecutor(spec.workers)
        try:
            rows = executor.map(lambda j: _row(spec, j), range(n2)) if executor else map(
                lambda j: _row(spec, j), range(n2))
            for j, Lr, Cr in rows:
                L[:, j] = Lr
                C[:, j] = Cr
        finally:
            if own is not None:
                own.shutdown()
    return ChartResult(spec, L, C, time.perf_counter() - t0, __version__)


def render_chart(result: ChartResult, palette: dict | None = None, modulate: bool = False) -> bytes:
    """Binary PPM (P6): one pixel per cell, top row at the largest axis2 value.

    With ``modulate`` the chaotic colour is blended towards white for small
    positive leading exponents.
    """
    pal = dict(PALETTE, **(palette or {}))
    n1, n2 = result.L1.shape
    img = np.empty((n2, n1, 3), dtype=np.uint8)
    lut = np.array([pal[AttractorClass.from_code(k)] for k in range(len(AttractorClass))], dtype=float)
    for j in range(n2):
        row = lut[result.classes[:, j].astype(int)]
        if modulate:
            chaos = result.classes[:, j] == AttractorClass.CHAOTIC.code
            lmax = max(float(np.nanmax(np.where(result.classes == AttractorClass.CHAOTIC.code,
                                                result.L1, 0.0))), 1e-12)
            w = np.clip(result.L1[:, j] / lmax, 0.0, 1.0)[:, None]
            row = np.where(chaos[:, None], 255.0 - w * (255.0 - row), row)
        img[n2 - 1 - j] = np.rint(row).astype(np.uint8)
    return f"P6\n{n1} {n2}\n255\n".encode() + img.tobytes()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_chart(result: ChartResult, out_dir, extra: dict | None = None) -> dict[str, Path]:
    """Write ``chart.csv``, ``chart.ppm`` and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        a1, a2 = result.spec.axis1.values(), result.spec.axis2.values()
        csv_path = out / "chart.csv"
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "p1", "p2", "L1", "class"])
            for j in range(len(a2)):
                for i in range(len(a1)):
                    w.writerow([i, j, fmt(a1[i]), fmt(a2[j]), fmt(result.L1[i, j]),
                                result.cls(i, j).value])
        ppm_path = out / "chart.ppm"
        ppm_path.write_bytes(render_chart(result))
        manifest = result.manifest()
        manifest["outputs"] = {p.name: _sha256(p) for p in (csv_path, ppm_path)}
        manifest.update(extra or {})
        man_path = out / "manifest.json"
        man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"chart export to {out} failed: {exc}") from exc
    return {"csv": csv_path, "ppm": ppm_path, "manifest": man_path}
