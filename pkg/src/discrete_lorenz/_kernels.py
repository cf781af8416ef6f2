"""Compiled inner loops shared by the orbit, Lyapunov, direction-field and chart code.

Every map is lowered to ``(kind, coef)``:

* ``kind == 0`` (companion form) ``x' = y, y' = z, z' = B x + G(y, z)`` with
  ``coef = [B, g0, gy, gz, gyy, gyz, gzz]`` and
  ``G = g0 + gy*y + gz*z + gyy*y^2 + gyz*y*z + gzz*z^2``.
* ``kind == 1`` (affine) ``s' = A s + c`` with ``coef = [A (row-major, 9), c (3)]``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

COMPANION = 0
AFFINE = 1


@njit(cache=True, nogil=True)
def step(kind, c, x, y, z):
    if kind == COMPANION:
        zn = c[0] * x + c[1] + c[2] * y + c[3] * z + c[4] * y * y + c[5] * y * z + c[6] * z * z
        return y, z, zn
    return (
        c[0] * x + c[1] * y + c[2] * z + c[9],
        c[3] * x + c[4] * y + c[5] * z + c[10],
        c[6] * x + c[7] * y + c[8] * z + c[11],
    )


@njit(cache=True, nogil=True)
def jacobian_into(kind, c, x, y, z, J):
    if kind == COMPANION:
        J[0, 0] = 0.0
        J[0, 1] = 1.0
        J[0, 2] = 0.0
        J[1, 0] = 0.0
        J[1, 1] = 0.0
        J[1, 2] = 1.0
        J[2, 0] = c[0]
        J[2, 1] = c[2] + 2.0 * c[4] * y + c[5] * z
        J[2, 2] = c[3] + c[5] * y + 2.0 * c[6] * z
    else:
        for i in range(3):
            for j in range(3):
                J[i, j] = c[3 * i + j]


@njit(cache=True, nogil=True)
def orbit(kind, c, s0, n_transient, n_keep, bound):
    """Return ``(points, escaped, escape_index)``; ``points[0]`` is ``T^n_transient(s0)``.

    ``escape_index`` counts iterations from ``s0`` (transient included); -1 when bounded.
    """
    x, y, z = s0[0], s0[1], s0[2]
    for n in range(n_transient):
        if not (abs(x) < bound and abs(y) < bound and abs(z) < bound):
            return np.empty((0, 3)), True, n
        x, y, z = step(kind, c, x, y, z)
    pts = np.empty((n_keep, 3))
    for n in range(n_keep):
        if not (abs(x) < bound and abs(y) < bound and abs(z) < bound):
            return pts[:n].copy(), True, n_transient + n
        pts[n, 0] = x
        pts[n, 1] = y
        pts[n, 2] = z
        if n + 1 < n_keep:
            x, y, z = step(kind, c, x, y, z)
    return pts, False, -1


@njit(cache=True, nogil=True)
def _tangent_step(J, Q, W, logs):
    """``Q <- orthonormal factor of J Q`` by modified Gram-Schmidt; ``logs`` gets ``log diag R``."""
    for i in range(3):
        for j in range(3):
            W[i, j] = J[i, 0] * Q[0, j] + J[i, 1] * Q[1, j] + J[i, 2] * Q[2, j]
    for j in range(3):
        for k in range(j):
            d = W[0, j] * Q[0, k] + W[1, j] * Q[1, k] + W[2, j] * Q[2, k]
            W[0, j] -= d * Q[0, k]
            W[1, j] -= d * Q[1, k]
            W[2, j] -= d * Q[2, k]
        r = math.sqrt(W[0, j] ** 2 + W[1, j] ** 2 + W[2, j] ** 2)
        logs[j] = math.log(r)
        Q[0, j] = W[0, j] / r
        Q[1, j] = W[1, j] / r
        Q[2, j] = W[2, j] / r


@njit(cache=True, nogil=True)
def lyapunov(kind, c, s0, n_transient, n_iter, Q0, bound):
    """Benettin scheme with a modified Gram-Schmidt QR at every step.

    The tangent frame is already propagated during the transient (without
    accumulating), so it starts the measured run aligned with the Lyapunov
    directions. Returns ``(log_sums, tail_variation, escaped, escape_index,
    final_state)``; the exponents are ``log_sums / n_iter``. ``tail_variation``
    is the largest max-min spread of any running exponent over the last 10%
    of iterations.
    """
    x, y, z = s0[0], s0[1], s0[2]
    final = np.empty(3)
    sums = np.zeros(3)
    logs = np.empty(3)
    J = np.empty((3, 3))
    Q = Q0.copy()
    W = np.empty((3, 3))
    for n in range(n_transient):
        jacobian_into(kind, c, x, y, z, J)
        _tangent_step(J, Q, W, logs)
        x, y, z = step(kind, c, x, y, z)
        if not (abs(x) < bound and abs(y) < bound and abs(z) < bound):
            final[0], final[1], final[2] = x, y, z
            return sums, np.inf, True, n + 1, final

    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    tail_start = n_iter - max(1, n_iter // 10)
    for n in range(n_iter):
        jacobian_into(kind, c, x, y, z, J)
        _tangent_step(J, Q, W, logs)
        for j in range(3):
            sums[j] += logs[j]
        x, y, z = step(kind, c, x, y, z)
        if not (abs(x) < bound and abs(y) < bound and abs(z) < bound):
            final[0], final[1], final[2] = x, y, z
            return sums, np.inf, True, n_transient + n + 1, final
        if n >= tail_start:
            for j in range(3):
                v = sums[j] / (n + 1)
                if v < lo[j]:
                    lo[j] = v
                if v > hi[j]:
                    hi[j] = v
    tail = 0.0
    for j in range(3):
        if hi[j] - lo[j] > tail:
            tail = hi[j] - lo[j]
    final[0], final[1], final[2] = x, y, z
    return sums, tail, False, -1, final


@njit(cache=True, nogil=True)
def _solve3(J, b, out):
    # Cramer's rule; J is a 3x3 with nonzero determinant.
    det = (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )
    out[0] = (
        b[0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (b[1] * J[2, 2] - J[1, 2] * b[2])
        + J[0, 2] * (b[1] * J[2, 1] - J[1, 1] * b[2])
    ) / det
    out[1] = (
        J[0, 0] * (b[1] * J[2, 2] - J[1, 2] * b[2])
        - b[0] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * b[2] - b[1] * J[2, 0])
    ) / det
    out[2] = (
        J[0, 0] * (J[1, 1] * b[2] - b[1] * J[2, 1])
        - J[0, 1] * (J[1, 0] * b[2] - b[1] * J[2, 0])
        + b[0] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    ) / det


@njit(cache=True, nogil=True)
def contracting_field(kind, c, pts, v0):
    """Transport a unit vector backwards along ``pts`` with the inverse differential.

    ``out[k]`` is the normalized ``DT(pts[k])^{-1} out[k+1]``; the last row is ``v0``.
    Backward transport aligns the vector with the most strongly contracted
    forward direction, so after a warm-up the rows form the field N1.
    """
    n = pts.shape[0]
    out = np.empty((n, 3))
    out[n - 1] = v0 / math.sqrt(v0[0] ** 2 + v0[1] ** 2 + v0[2] ** 2)
    J = np.empty((3, 3))
    w = np.empty(3)
    for k in range(n - 2, -1, -1):
        jacobian_into(kind, c, pts[k, 0], pts[k, 1], pts[k, 2], J)
        _solve3(J, out[k + 1], w)
        r = math.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
        out[k, 0] = w[0] / r
        out[k, 1] = w[1] / r
        out[k, 2] = w[2] / r
        # Keep a consistent sign so downstream line-angle code sees smooth vectors.
        if out[k, 0] * out[k + 1, 0] + out[k, 1] * out[k + 1, 1] + out[k, 2] * out[k + 1, 2] < 0.0:
            out[k, 0] = -out[k, 0]
            out[k, 1] = -out[k, 1]
            out[k, 2] = -out[k, 2]
    return out


@njit(cache=True, nogil=True)
def push_residuals(kind, c, pts, dirs):
    """Angle between ``DT(pts[k]) dirs[k]`` and ``dirs[k+1]`` as lines (length n-1)."""
    n = pts.shape[0]
    res = np.zeros(max(n - 1, 0))
    J = np.empty((3, 3))
    for k in range(n - 1):
        jacobian_into(kind, c, pts[k, 0], pts[k, 1], pts[k, 2], J)
        w0 = J[0, 0] * dirs[k, 0] + J[0, 1] * dirs[k, 1] + J[0, 2] * dirs[k, 2]
        w1 = J[1, 0] * dirs[k, 0] + J[1, 1] * dirs[k, 1] + J[1, 2] * dirs[k, 2]
        w2 = J[2, 0] * dirs[k, 0] + J[2, 1] * dirs[k, 1] + J[2, 2] * dirs[k, 2]
        r = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
        # Cross-product norm gives the sine; accurate for tiny angles unlike arccos.
        u0, u1, u2 = dirs[k + 1, 0], dirs[k + 1, 1], dirs[k + 1, 2]
        cx = w1 * u2 - w2 * u1
        cy = w2 * u0 - w0 * u2
        cz = w0 * u1 - w1 * u0
        s = math.sqrt(cx * cx + cy * cy + cz * cz) / r
        d = abs(w0 * u0 + w1 * u1 + w2 * u2) / r
        res[k] = math.atan2(s, d)
    return res
