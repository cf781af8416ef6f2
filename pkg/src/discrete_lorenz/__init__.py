"""Discrete Lorenz-like attractors of three-dimensional quadratic maps."""
from __future__ import annotations

__version__ = "0.1.0"

from .maps import MapSpec, Family, evaluate, jacobian, inverse_evaluate, orbit  # noqa: E402,F401
