"""Three-dimensional map families, their differentials, inverses and orbits.

All quadratic families share the companion structure ``x' = y, y' = z,
z' = B x + G(y, z)`` and therefore a constant Jacobian determinant ``B``.

Fixed point note: for the Henon family with ``M1 = 0`` the nonzero diagonal
fixed point sits at ``x = y = z = B + M2 - 1`` (e.g. 0.55 for ``B = 0.7``,
``M2 = 0.85``). The sign-flipped expression ``1 - M2 - B`` that also appears
in the literature is not a fixed point.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels

DEFAULT_ESCAPE_BOUND = 1e6


class MapError(ValueError):
    """Base class for domain errors raised by map evaluation."""


class OverflowMapError(MapError):
    def __init__(self, state):
        self.state = tuple(float(v) for v in state)
        super().__init__(f"non-finite image of state {self.state}")


class NotInvertibleError(MapError):
    pass


class Family(str, enum.Enum):
    HENON = "henon3d"
    GENERALIZED_HENON = "generalized3d"
    MIRA = "mira3d"
    EPSILON_NORMAL_FORM = "epsilon"
    AFFINE = "affine"


PARAM_NAMES: dict[Family, tuple[str, ...]] = {
    Family.HENON: ("M1", "M2", "B"),
    Family.MIRA: ("M1", "M2", "B"),
    Family.GENERALIZED_HENON: ("B", "g0", "gy", "gz", "gyy", "gyz", "gzz"),
    Family.EPSILON_NORMAL_FORM: ("eps1", "eps2", "eps3", "a", "b", "c"),
    Family.AFFINE: tuple(f"A{i}{j}" for i in range(3) for j in range(3)) + ("c0", "c1", "c2"),
}


@dataclass(frozen=True)
class MapSpec:
    """A member of one of the supported families.

    Use the constructors (:meth:`henon`, :meth:`mira`, ...) rather than
    building the parameter tuple by hand.
    """

    family: Family
    params: tuple[float, ...]
    _coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        p = tuple(float(v) for v in self.params)
        if len(p) != len(PARAM_NAMES[fam]):
            raise ValueError(f"{fam.value} expects {len(PARAM_NAMES[fam])} parameters, got {len(p)}")
        if not all(math.isfinite(v) for v in p):
            raise ValueError(f"non-finite parameters {p}")
        object.__setattr__(self, "params", p)
        coef = _lower(fam, p)
        coef.setflags(write=False)
        object.__setattr__(self, "_coef", coef)

    # constructors -------------------------------------------------------
    @classmethod
    def henon(cls, M1: float, M2: float, B: float) -> MapSpec:
        return cls(Family.HENON, (M1, M2, B))

    @classmethod
    def mira(cls, M1: float, M2: float, B: float) -> MapSpec:
        return cls(Family.MIRA, (M1, M2, B))

    @classmethod
    def generalized(cls, B: float, g0=0.0, gy=0.0, gz=0.0, gyy=0.0, gyz=0.0, gzz=0.0) -> MapSpec:
        return cls(Family.GENERALIZED_HENON, (B, g0, gy, gz, gyy, gyz, gzz))

    @classmethod
    def epsilon_normal_form(cls, eps1, eps2, eps3, a, b, c) -> MapSpec:
        return cls(Family.EPSILON_NORMAL_FORM, (eps1, eps2, eps3, a, b, c))

    @classmethod
    def affine(cls, A, c=(0.0, 0.0, 0.0)) -> MapSpec:
        A = np.asarray(A, dtype=float).reshape(3, 3)
        return cls(Family.AFFINE, tuple(A.ravel()) + tuple(np.asarray(c, dtype=float)))

    # parameter access ---------------------------------------------------
    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.family]

    def param(self, name: str) -> float:
        return self.params[self._index(name)]

    def with_param(self, name: str, value: float) -> MapSpec:
        p = list(self.params)
        p[self._index(name)] = value
        return MapSpec(self.family, tuple(p))

    def _index(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise KeyError(f"{self.family.value} has no parameter {name!r}; "
                           f"known: {', '.join(self.param_names)}") from None

    # lowered form -------------------------------------------------------
    @property
    def kind(self) -> int:
        return _kernels.AFFINE if self.family is Family.AFFINE else _kernels.COMPANION

    @property
    def coef(self) -> np.ndarray:
        return self._coef

    @property
    def det(self) -> float:
        """The constant Jacobian determinant."""
        if self.kind == _kernels.COMPANION:
            return float(self._coef[0])
        return float(np.linalg.det(self._coef[:9].reshape(3, 3)))

    @property
    def quadratic_coefficients(self) -> tuple[float, float, float]:
        """Coefficients of ``y^2, y z, z^2`` in ``z'`` (companion families only)."""
        if self.kind != _kernels.COMPANION:
            raise ValueError("affine maps have no quadratic part")
        return tuple(float(v) for v in self._coef[4:7])

    def __str__(self):
        body = ", ".join(f"{n}={v:g}" for n, v in zip(self.param_names, self.params))
        return f"{self.family.value}({body})"


def _lower(fam: Family, p: tuple[float, ...]) -> np.ndarray:
    if fam is Family.HENON:
        M1, M2, B = p
        return np.array([B, M1, M2, 0.0, 0.0, 0.0, -1.0])
    if fam is Family.MIRA:
        M1, M2, B = p
        return np.array([B, M1, 0.0, M2, -1.0, 0.0, 0.0])
    if fam is Family.GENERALIZED_HENON:
        return np.array(p)
    if fam is Family.EPSILON_NORMAL_FORM:
        e1, e2, e3, a, b, c = p
        return np.array([1.0 - e1, 0.0, 1.0 - e2, -(1.0 + e3), a, b, c])
    return np.array(p)


@dataclass
class OrbitSegment:
    points: np.ndarray  # (n, 3)
    transient_discarded: int
    escaped: bool
    escape_index: int | None = None

    def __len__(self):
        return len(self.points)


def _as_state(s) -> np.ndarray:
    a = np.asarray(s, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise OverflowMapError(a)
    return a


def evaluate(m: MapSpec, s) -> np.ndarray:
    s = _as_state(s)
    out = np.array(_kernels.step(m.kind, m.coef, s[0], s[1], s[2]))
    if not np.all(np.isfinite(out)):
        raise OverflowMapError(s)
    return out


def evaluate_many(m: MapSpec, pts: np.ndarray) -> np.ndarray:
    """Vectorized image of an ``(n, 3)`` array of states."""
    pts = np.asarray(pts, dtype=float)
    c = m.coef
    if m.kind == _kernels.AFFINE:
        return pts @ c[:9].reshape(3, 3).T + c[9:]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    zn = c[0] * x + c[1] + c[2] * y + c[3] * z + c[4] * y * y + c[5] * y * z + c[6] * z * z
    return np.column_stack([y, z, zn])


def iterate(m: MapSpec, s, n: int) -> np.ndarray:
    """``T^n(s)``."""
    s = _as_state(s)
    for _ in range(n):
        s = evaluate(m, s)
    return s


def jacobian(m: MapSpec, s) -> np.ndarray:
    s = _as_state(s)
    J = np.empty((3, 3))
    _kernels.jacobian_into(m.kind, m.coef, s[0], s[1], s[2], J)
    return J


def jacobian_power(m: MapSpec, s, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(T^n(s), D(T^n)(s))`` by the chain rule."""
    s = _as_state(s)
    D = np.eye(3)
    for _ in range(n):
        D = jacobian(m, s) @ D
        s = evaluate(m, s)
    return s, D


def inverse_evaluate(m: MapSpec, s) -> np.ndarray:
    s = _as_state(s)
    c = m.coef
    if m.kind == _kernels.AFFINE:
        A = c[:9].reshape(3, 3)
        if np.linalg.det(A) == 0.0:
            raise NotInvertibleError(f"{m} is singular")
        return np.linalg.solve(A, s - c[9:])
    B = c[0]
    if B == 0.0:
        raise NotInvertibleError(f"{m} has B = 0")
    # (X, Y, Z) = (y, z, B x + G(y, z))
    y, z = s[0], s[1]
    g = c[1] + c[2] * y + c[3] * z + c[4] * y * y + c[5] * y * z + c[6] * z * z
    out = np.array([(s[2] - g) / B, y, z])
    if not np.all(np.isfinite(out)):
        raise OverflowMapError(s)
    return out


def orbit(m: MapSpec, s0=(0.1, 0.1, 0.1), n_transient: int = 10_000, n_keep: int = 100_000,
          escape_bound: float = DEFAULT_ESCAPE_BOUND) -> OrbitSegment:
    """Iterate from ``s0``, drop ``n_transient`` iterates and keep the next ``n_keep``.

    Escape (max-norm above ``escape_bound``) during the transient yields an
    empty, escaped segment; later escape truncates the stored points.
    """
    if n_keep < 1:
        raise ValueError("n_keep must be >= 1")
    s0 = _as_state(s0)
    pts, escaped, idx = _kernels.orbit(m.kind, m.coef, s0, int(n_transient), int(n_keep),
                                       float(escape_bound))
    return OrbitSegment(points=pts, transient_discarded=int(n_transient), escaped=bool(escaped),
                        escape_index=int(idx) if escaped else None)


def write_orbit_csv(seg: OrbitSegment, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "x", "y", "z"])
        for i, p in enumerate(seg.points):
            w.writerow([i, *(fmt(v) for v in p)])
    return path


def fmt(v: float) -> str:
    """17 significant digits, the round-trip width for binary64."""
    return f"{float(v) + 0.0:.17g}"
