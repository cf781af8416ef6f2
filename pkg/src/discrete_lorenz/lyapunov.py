"""Lyapunov spectra by QR re-orthonormalized tangent propagation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .maps import DEFAULT_ESCAPE_BOUND, MapError, MapSpec

DEFAULT_TOL = 1e-3
DEFAULT_S0 = (0.1, 0.1, 0.1)


class EscapeError(MapError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"orbit escaped at iterate {index}")


class AttractorClass(str, enum.Enum):
    DIVERGENT = "Divergent"
    STABLE_POINT = "StablePoint"
    STABLE_CYCLE = "StableCycle"
    INVARIANT_CURVE = "InvariantCurve"
    CHAOTIC = "Chaotic"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> AttractorClass:
        return _FROM_CODE[int(code)]


_CODES = {c: i for i, c in enumerate(AttractorClass)}
_FROM_CODE = {i: c for c, i in _CODES.items()}


@dataclass
class LyapunovSpectrum:
    exponents: tuple[float, float, float]
    n_iter: int
    tail_variation: float
    escaped: bool
    escape_index: int | None = None
    final_state: np.ndarray | None = None

    @property
    def total(self) -> float:
        return float(sum(self.exponents))

    def require_bounded(self) -> LyapunovSpectrum:
        if self.escaped:
            raise EscapeError(self.escape_index)
        return self


def random_frame(seed: int) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((3, 3)))
    return q * np.sign(np.diag(r))


def spectrum(m: MapSpec, s0=DEFAULT_S0, n_transient: int = 10_000, n_iter: int = 1_000_000,
             frame: np.ndarray | None = None,
             escape_bound: float = DEFAULT_ESCAPE_BOUND) -> LyapunovSpectrum:
    """Lyapunov exponents (nats per iteration) of the orbit of ``s0``.

    An escaping orbit returns ``escaped=True`` with NaN exponents rather than
    raising; call :meth:`LyapunovSpectrum.require_bounded` for the strict form.
    """
    if n_iter < 1000:
        raise ValueError("n_iter must be >= 1000")
    Q0 = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    sums, tail, esc, idx, final = _kernels.lyapunov(
        m.kind, m.coef, np.asarray(s0, dtype=float).reshape(3), int(n_transient), int(n_iter),
        Q0, float(escape_bound))
    if esc:
        return LyapunovSpectrum((math.nan,) * 3, int(n_iter), math.inf, True, int(idx), final)
    ex = tuple(sorted((float(v) / n_iter for v in sums), reverse=True))
    return LyapunovSpectrum(ex, int(n_iter), float(tail), False, None, final)


def check_sign_conditions(sp, tol: float = DEFAULT_TOL) -> tuple[bool, bool, bool]:
    """``(L1 > tol, L1 + L2 > tol, L1 + L2 + L3 < -tol)``."""
    l1, l2, l3 = _exponents(sp)
    return (l1 > tol, l1 + l2 > tol, l1 + l2 + l3 < -tol)


def classify_spectrum(sp, tol: float = DEFAULT_TOL, periodic: bool | None = None) -> AttractorClass:
    """Attractor class from the spectrum.

    A negative leading exponent cannot tell a sink point from a sink cycle;
    pass ``periodic=True`` to get ``StableCycle``, otherwise ``StablePoint``
    is reported for the whole bucket.
    """
    if isinstance(sp, LyapunovSpectrum) and sp.escaped:
        return AttractorClass.DIVERGENT
    l1, l2, _ = _exponents(sp)
    if l1 > tol:
        return AttractorClass.CHAOTIC
    if l1 < -tol:
        return AttractorClass.STABLE_CYCLE if periodic else AttractorClass.STABLE_POINT
    if l2 < -tol:
        return AttractorClass.INVARIANT_CURVE
    # |L1| and |L2| both within tol: not resolvable at this tolerance
    return AttractorClass.INVARIANT_CURVE


def _exponents(sp):
    ex = sp.exponents if isinstance(sp, LyapunovSpectrum) else tuple(sp)
    return tuple(float(v) for v in ex)


def classify_orbit(m: MapSpec, s0=DEFAULT_S0, n_transient: int = 10_000, n_iter: int = 10_000,
                   tol: float = DEFAULT_TOL) -> tuple[LyapunovSpectrum, AttractorClass]:
    """Spectrum plus class, splitting the sink bucket by testing ``T(s) = s`` at the end."""
    sp = spectrum(m, s0, n_transient, n_iter)
    if sp.escaped:
        return sp, AttractorClass.DIVERGENT
    cls = classify_spectrum(sp, tol)
    if cls is AttractorClass.STABLE_POINT:
        s = sp.final_state
        img = np.array(_kernels.step(m.kind, m.coef, s[0], s[1], s[2]))
        if np.max(np.abs(img - s)) > 1e-6 * (1.0 + np.max(np.abs(s))):
            cls = AttractorClass.STABLE_CYCLE
    return sp, cls
