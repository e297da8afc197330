"""Rescaled cubic Henon-Heiles system.

After the rescaling x -> x/C, y -> y/C the equations of motion are

    x'' + A x + 2 lam x y = 0
    y'' + B y + lam x**2 - y**2 = 0

with lam = D/C.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidParameterError
from .exact import as_fraction

__all__ = [
    "ModelParams",
    "PhaseState",
    "rescale_parameters",
    "vector_field",
    "energy",
    "energy_rate",
]


def _exact(value, name) -> Fraction:
    if isinstance(value, float):
        raise InvalidParameterError(
            f"{name} must be an exact rational such as '-24/23', not a float")
    try:
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidParameterError(f"cannot read {name}={value!r}: {exc}") from exc


@dataclass(frozen=True)
class ModelParams:
    """Constants of the rescaled system plus the +/- branch of a_000."""

    A: float
    B: float
    lam: Fraction
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lam", _exact(self.lam, "lambda"))
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "B", float(self.B))
        if self.lam == 0:
            raise InvalidParameterError("lambda must be nonzero (C, D nonzero)")
        if self.A == 0 or self.B == 0:
            raise InvalidParameterError("A and B must be nonzero")
        if self.sign not in (1, -1):
            raise InvalidParameterError("sign must be +1 or -1")

    @property
    def lam_float(self) -> float:
        return float(self.lam)


@dataclass(frozen=True)
class PhaseState:
    x: complex
    u: complex
    y: complex
    v: complex
    t: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.u, self.y, self.v])):
            raise ValueError("phase state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.u, self.y, self.v])

    @classmethod
    def from_array(cls, w, t=0.0) -> PhaseState:
        x, u, y, v = w
        return cls(x, u, y, v, t)


def rescale_parameters(A, B, C, D) -> ModelParams:
    """Return the rescaled parameters (A, B, lam = D/C)."""
    c = Fraction(str(C)) if isinstance(C, float) else as_fraction(C)
    d = Fraction(str(D)) if isinstance(D, float) else as_fraction(D)
    if c == 0 or d == 0:
        raise InvalidParameterError("C and D must be nonzero")
    return ModelParams(A, B, d / c)


def _components(s):
    if isinstance(s, PhaseState):
        return s.x, s.u, s.y, s.v
    x, u, y, v = s
    return x, u, y, v


def vector_field(s, p: ModelParams) -> np.ndarray:
    """Time derivative (x', u', y', v') of the first-order system."""
    x, u, y, v = _components(s)
    lam = p.lam_float
    return np.array([u, -p.A * x - 2 * lam * x * y, v, -p.B * y - lam * x * x + y * y])


def energy(s, p: ModelParams):
    # Rescaled invariant; d/dt vanishes identically along vector_field
    # (checked symbolically in tests/test_model.py).
    x, u, y, v = _components(s)
    lam = p.lam_float
    return 0.5 * (u * u + v * v + p.A * x * x + p.B * y * y) + lam * x * x * y - y ** 3 / 3


def energy_rate(s, p: ModelParams):
    """Directional derivative of ``energy`` along ``vector_field``."""
    x, u, y, v = _components(s)
    lam = p.lam_float
    dx, du, dy, dv = vector_field(s, p)
    grad = (p.A * x + 2 * lam * x * y, u, p.B * y + lam * x * x - y * y, v)
    return grad[0] * dx + grad[1] * du + grad[2] * dy + grad[3] * dv
