"""Dispersion laws for the profile evolution and the exact Fourier multipliers.

Three laws are supported:

``ZERO``
    pure wave equation, ``b(xi) = 0``.
``CUBIC``
    linearized KdV correction, ``b(xi) = b3 * xi**3``.
``FULL_SQRT``
    weakly dispersive wave equation with exact phase
    ``sqrt(c**2 k**2 + eps**2 d0 k**4) t``; its profile law is the cubic
    one with ``b3 = d0 / (2 c)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "DispersionKind",
    "DispersionSpec",
    "eval_b",
    "exact_multiplier_phase",
    "taylor_remainder",
]


class DispersionKind(enum.Enum):
    ZERO = "zero"
    CUBIC = "cubic"
    FULL_SQRT = "fullsqrt"

    @classmethod
    def parse(cls, text: str) -> "DispersionKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ConfigurationError(
                f"unknown dispersion kind {text!r}; expected one of {names}") from None


@dataclass(frozen=True)
class DispersionSpec:
    kind: DispersionKind = DispersionKind.ZERO
    b3: float = 0.0
    c: float = 1.0
    d0: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        if not isinstance(self.kind, DispersionKind):
            object.__setattr__(self, "kind", DispersionKind.parse(str(self.kind)))
        for name in ("c", "d0", "epsilon"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if not np.isfinite(self.b3):
            raise ConfigurationError("b3 must be finite")

    @classmethod
    def zero(cls, c=1.0, epsilon=0.1) -> "DispersionSpec":
        return cls(DispersionKind.ZERO, 0.0, c=c, epsilon=epsilon)

    @classmethod
    def cubic(cls, b3, c=1.0, epsilon=0.1) -> "DispersionSpec":
        return cls(DispersionKind.CUBIC, float(b3), c=c, epsilon=epsilon)

    @classmethod
    def full_sqrt(cls, c=1.0, d0=1.0, epsilon=0.1) -> "DispersionSpec":
        return cls(DispersionKind.FULL_SQRT, d0 / (2.0 * c), c=c, d0=d0, epsilon=epsilon)

    @classmethod
    def effective_cubic(cls, c=1.0, d0=1.0, epsilon=0.1) -> "DispersionSpec":
        """Cubic law reduced from the weakly dispersive equation."""
        return cls(DispersionKind.CUBIC, d0 / (2.0 * c), c=c, d0=d0, epsilon=epsilon)

    @property
    def effective_b3(self) -> float:
        if self.kind is DispersionKind.ZERO:
            return 0.0
        if self.kind is DispersionKind.FULL_SQRT:
            return self.d0 / (2.0 * self.c)
        return self.b3

    def with_epsilon(self, epsilon: float) -> "DispersionSpec":
        return replace(self, epsilon=epsilon)


def eval_b(spec: DispersionSpec, xi):
    """Profile dispersion law ``b(xi)``."""
    xi = np.asarray(xi, dtype=float)
    if spec.kind is DispersionKind.ZERO:
        return np.zeros_like(xi)
    return spec.effective_b3 * xi**3


def exact_multiplier_phase(spec: DispersionSpec, k_norm, t, epsilon=None):
    """Total phase ``Phi`` with ``u_hat(k, t) = exp(-i Phi) u0_hat(k)``."""
    k = np.asarray(k_norm, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(k < 0) or np.any(t < 0):
        raise ValueError("k_norm and t must be non-negative")
    eps = spec.epsilon if epsilon is None else epsilon
    if spec.kind is DispersionKind.FULL_SQRT:
        return np.sqrt(spec.c**2 * k**2 + eps**2 * spec.d0 * k**4) * t
    return spec.c * k * t + eval_b(spec, k) * eps**2 * t


def taylor_remainder(spec: DispersionSpec, k_norm, tau, epsilon):
    """``Phi_full(k, tau/eps^2) - (c k tau/eps^2 + d0 k^3 tau / (2c))``.

    Evaluated without the cancellation of the two O(eps^-2) phases:
    ``sqrt(a^2 + s) - a - s/(2a) = -s^2 / (2a (sqrt(a^2+s) + a)^2)``.
    """
    k = np.asarray(k_norm, dtype=float)
    a = spec.c * k
    s = epsilon**2 * spec.d0 * k**4
    root = np.sqrt(a * a + s)
    with np.errstate(invalid="ignore", divide="ignore"):
        rem = -s * s / (2.0 * a * (root + a) ** 2)
    rem = np.where(k > 0, rem, 0.0)
    return rem * tau / epsilon**2
