r"""Stationary phase on the sphere and the one-dimensional oscillatory integral.

The spherical functional is

.. math::

    A^N_\phi = (2\pi i)^{-(d-1)/2} N^{(d-1)/2}
               \int_{S^{d-1}} e^{i(1 - q\cdot\kappa)N}\,\phi(q)\,dS(q),

which tends to :math:`\phi(\kappa)` for :math:`C^1` functions supported on the
half sphere :math:`q\cdot\kappa \ge 0`.  The integral

.. math::

    I_N = \int_0^{N^{-\beta}} N^{1/2} e^{i(1-\cos\theta)N}\,d\theta

tends to :math:`\tfrac12\sqrt{\pi}(1+i)` for :math:`\beta \in (1/6, 1/2)`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np

from .errors import ConfigurationError, ResolutionError

__all__ = [
    "SphereQuadrature",
    "HalfSphereTestFn",
    "OscillatoryIntegralSpec",
    "sphere_area",
    "min_theta_nodes",
    "frame_for",
    "stationary_phase_functional",
    "oscillatory_integral",
    "oscillatory_integral_substituted",
    "fresnel_oracle",
    "TEST_FUNCTIONS",
    "make_test_function",
    "FRESNEL_LIMIT",
]

FRESNEL_LIMIT = 0.5 * math.sqrt(math.pi) * (1 + 1j)


def sphere_area(d: int) -> float:
    return {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[d]


def min_theta_nodes(n_osc: float) -> int:
    """Node count that puts >= 8 nodes per 2*pi of the phase ``(1 - cos)*N``."""
    return int(math.ceil(8.0 * n_osc / (2.0 * math.pi))) + 16


def frame_for(pole) -> np.ndarray:
    """Orthonormal matrix whose first column is ``pole`` (unit vector)."""
    pole = np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    d = pole.size
    if d == 1:
        return pole.reshape(1, 1)
    if d == 2:
        return np.array([[pole[0], -pole[1]], [pole[1], pole[0]]])
    # Householder reflection mapping e1 to pole, then fix orientation
    e1 = np.array([1.0, 0.0, 0.0])
    v = e1 - pole
    if np.linalg.norm(v) < 1e-14:
        return np.eye(3)
    h = np.eye(3) - 2.0 * np.outer(v, v) / (v @ v)
    frame = h.copy()
    if np.linalg.det(frame) < 0:
        frame[:, 2] *= -1.0
    return frame


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Nodes and weights on ``S^{d-1}`` in coordinates attached to a pole.

    d = 1: the two points ``+pole`` and ``-pole``.
    d = 2: trapezoid rule in the angle ``theta in (-pi, pi]`` from the pole.
    d = 3: Gauss-Legendre in ``cos(theta)`` times uniform azimuth.  The
    ``cos(theta)`` rule is composite: an even number of panels of at most 16
    nodes, so the equator ``cos(theta) = 0`` is always a panel edge.  Nodes
    are ordered theta-major, ``index = i_theta * n_azimuth + i_azimuth``.
    """

    d: int
    nodes: np.ndarray
    weights: np.ndarray
    frame: np.ndarray
    theta: Optional[np.ndarray] = None
    azimuth: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.d}")
        for arr in (self.nodes, self.weights, self.frame):
            arr.setflags(write=False)

    @classmethod
    def build(cls, d: int, n_theta: int = 64, n_azimuth: Optional[int] = None,
              pole=None) -> "SphereQuadrature":
        if d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {d}")
        if pole is None:
            pole = np.eye(d)[0]
        frame = frame_for(pole)
        if d == 1:
            nodes = np.array([[1.0], [-1.0]]) * frame[0, 0]
            return cls(1, nodes, np.array([1.0, 1.0]), frame)
        if d == 2:
            if n_theta < 3:
                raise ConfigurationError("d=2 quadrature needs at least 3 nodes")
            # a multiple of 4 puts nodes on the equator q.pole = 0, where the
            # C^1 half-sphere functions have their kink; their odd derivatives
            # vanish there, so the trapezoid rule keeps its high order
            n_theta = 4 * int(math.ceil(n_theta / 4))
            theta = -np.pi + 2.0 * np.pi * np.arange(1, n_theta + 1) / n_theta
            local = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            weights = np.full(n_theta, 2.0 * np.pi / n_theta)
            return cls(2, local @ frame.T, weights, frame, theta=theta)
        if n_azimuth is None:
            n_azimuth = max(8, n_theta)
        if n_theta < 2 or n_azimuth < 3:
            raise ConfigurationError("d=3 quadrature needs n_theta >= 2 and n_azimuth >= 3")
        u, wu = _composite_gauss(n_theta)
        theta = np.arccos(u)
        azimuth = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
        st = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
        local = np.stack([
            np.repeat(u, n_azimuth),
            np.outer(st, np.cos(azimuth)).ravel(),
            np.outer(st, np.sin(azimuth)).ravel(),
        ], axis=-1)
        weights = np.outer(wu, np.full(n_azimuth, 2.0 * np.pi / n_azimuth)).ravel()
        return cls(3, local @ frame.T, weights, frame, theta=theta, azimuth=azimuth)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def pole(self) -> np.ndarray:
        return self.frame[:, 0]

    @property
    def n_theta(self) -> int:
        return 2 if self.d == 1 else len(self.theta)

    @property
    def n_azimuth(self) -> int:
        return 1 if self.d < 3 else len(self.azimuth)

    def integrate(self, values) -> complex:
        """Quadrature over the last axis of ``values``."""
        return np.asarray(values) @ self.weights

    def aligned_with(self, kappa) -> bool:
        kappa = np.asarray(kappa, dtype=float)
        return abs(abs(self.pole @ kappa) - np.linalg.norm(kappa)) <= 1e-12

    def require_resolution(self, n_osc: float, kappa=None):
        """Raise :class:`ResolutionError` if ``exp(i N (1 - q.kappa))`` is under-resolved."""
        if self.d == 1:
            return
        need = min_theta_nodes(n_osc)
        if self.n_theta < need:
            raise ResolutionError(
                f"sphere quadrature has {self.n_theta} polar nodes, "
                f"oscillation N={n_osc:.6g} needs at least {need}")
        if self.d == 3 and kappa is not None and not self.aligned_with(kappa):
            if self.n_azimuth < need:
                raise ResolutionError(
                    f"sphere quadrature has {self.n_azimuth} azimuthal nodes and is not "
                    f"aligned with kappa; N={n_osc:.6g} needs at least {need}")

    def interpolation_stencil(self, q):
        """Node indices and weights interpolating node data at directions ``q``.

        d = 2 uses periodic four-point (cubic) Lagrange weights in the angle,
        d = 3 bilinear weights in (theta, azimuth), d = 1 picks the matching node.
        Returns arrays of shape ``(P, m)``.
        """
        q = np.asarray(q, dtype=float).reshape(-1, self.d)
        local = q @ self.frame
        if self.d == 1:
            idx = np.where(local[:, 0] >= 0, 0, 1)[:, None]
            return idx, np.ones_like(idx, dtype=float)
        if self.d == 2:
            n = self.n_theta
            ang = np.arctan2(local[:, 1], local[:, 0])
            # node j sits at -pi + 2 pi (j + 1)/n
            pos = (ang + np.pi) * n / (2.0 * np.pi) - 1.0
            base = np.floor(pos).astype(int)
            frac = pos - base
            offs = np.arange(-1, 3)
            idx = (base[:, None] + offs[None, :]) % n
            return idx, _lagrange4(frac)
        n_t, n_a = self.n_theta, self.n_azimuth
        ct = np.clip(local[:, 0], -1.0, 1.0)
        th = np.arccos(ct)
        az = np.mod(np.arctan2(local[:, 2], local[:, 1]), 2.0 * np.pi)
        i_t = np.clip(np.searchsorted(self.theta, th) - 1, 0, n_t - 2)
        t0, t1 = self.theta[i_t], self.theta[i_t + 1]
        ft = np.clip((th - t0) / (t1 - t0), 0.0, 1.0)
        pos = az * n_a / (2.0 * np.pi)
        i_a = np.floor(pos).astype(int) % n_a
        fa = pos - np.floor(pos)
        j_a = (i_a + 1) % n_a
        idx = np.stack([i_t * n_a + i_a, i_t * n_a + j_a,
                        (i_t + 1) * n_a + i_a, (i_t + 1) * n_a + j_a], axis=-1)
        w = np.stack([(1 - ft) * (1 - fa), (1 - ft) * fa, ft * (1 - fa), ft * fa], axis=-1)
        return idx, w


def _composite_gauss(n_min):
    """At least ``n_min`` Gauss-Legendre nodes on [-1, 1], theta increasing."""
    panels = max(2, 2 * math.ceil(n_min / 32))
    order = max(1, math.ceil(n_min / panels))
    x, w = _gauss(order)
    edges = np.linspace(1.0, -1.0, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    # b < a, so increasing x maps to decreasing u (increasing theta) in every panel
    u = (0.5 * (a + b) + 0.5 * (b - a) * x[None, :]).ravel()
    wu = (0.5 * (a - b) * w[None, :]).ravel()
    return u, wu


def _lagrange4(frac):
    """Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2."""
    t = np.asarray(frac, dtype=float)
    return np.stack([
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ], axis=-1)


@dataclass(frozen=True, eq=False)
class HalfSphereTestFn:
    """A C^1 function on the sphere supported in ``{q . kappa >= 0}``."""

    fn: Callable[[np.ndarray], np.ndarray]
    kappa: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        kappa = np.asarray(self.kappa, dtype=float)
        norm = np.linalg.norm(kappa)
        if kappa.ndim != 1 or kappa.size not in (1, 2, 3) or norm == 0:
            raise ConfigurationError("kappa must be a nonzero vector in dimension 1, 2 or 3")
        object.__setattr__(self, "kappa", kappa / norm)

    @property
    def d(self) -> int:
        return self.kappa.size

    def __call__(self, q) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(q, dtype=float)))

    def support_violations(self, q) -> int:
        """Number of sampled directions with ``q.kappa < 0`` and ``phi(q) != 0``."""
        q = np.asarray(q, dtype=float).reshape(-1, self.d)
        back = q @ self.kappa < 0
        return int(np.count_nonzero(self(q[back]) != 0))

    def rotated(self, rotation) -> "HalfSphereTestFn":
        """``q -> phi(R^T q)`` with pole ``R kappa``."""
        rot = np.asarray(rotation, dtype=float)
        fn = self.fn
        return HalfSphereTestFn(lambda q: fn(q @ rot), rot @ self.kappa, self.name + "-rot")


def _cap_squared(kappa):
    kappa = np.asarray(kappa, dtype=float)
    kappa = kappa / np.linalg.norm(kappa)

    def fn(q):
        return np.maximum(q @ kappa, 0.0) ** 2
    return HalfSphereTestFn(fn, kappa, "cap2")


def _cap_squared_tilted(kappa):
    kappa = np.asarray(kappa, dtype=float)
    kappa = kappa / np.linalg.norm(kappa)
    d = kappa.size
    side = frame_for(kappa)[:, 1] if d > 1 else np.zeros(1)

    def fn(q):
        c = np.maximum(q @ kappa, 0.0)
        return c**2 * (1.0 + 0.5 * (q @ side))
    return HalfSphereTestFn(fn, kappa, "cap2-tilted")


TEST_FUNCTIONS = {
    "cap2": _cap_squared,
    "cap2-tilted": _cap_squared_tilted,
}


def make_test_function(name: str, d: int, kappa=None) -> HalfSphereTestFn:
    try:
        factory = TEST_FUNCTIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown test function {name!r}; known: {', '.join(sorted(TEST_FUNCTIONS))}") from None
    if kappa is None:
        kappa = np.eye(d)[0]
    return factory(kappa)


def _branch(d: int) -> complex:
    """(2 pi i)^{-(d-1)/2} on the principal branch."""
    return (2.0 * np.pi) ** (-(d - 1) / 2.0) * np.exp(-1j * np.pi * (d - 1) / 4.0)


def stationary_phase_functional(phi: HalfSphereTestFn, n_osc: float,
                                quad: SphereQuadrature) -> complex:
    """Quadrature value of ``A^N_phi`` with ``N = n_osc``."""
    if quad.d != phi.d:
        raise ConfigurationError("test function and quadrature dimensions differ")
    kappa = phi.kappa
    q = quad.nodes
    values = phi(q)
    if phi.d == 1:
        # the two-point sphere: exact sum, phase is 0 at q = kappa and 2N at -kappa
        total = 0j
        for qi, vi in zip(q[:, 0], values):
            total += vi if qi * kappa[0] > 0 else np.exp(2j * n_osc) * vi
        return complex(total)
    quad.require_resolution(n_osc, kappa)
    gap = 0.5 * np.sum((q - kappa) ** 2, axis=-1)  # 1 - q.kappa without cancellation
    integrand = np.exp(1j * n_osc * gap) * values
    d = phi.d
    return complex(_branch(d) * n_osc ** ((d - 1) / 2.0) * quad.integrate(integrand))


@dataclass(frozen=True)
class OscillatoryIntegralSpec:
    beta: float
    N: float

    def __post_init__(self):
        if not (1.0 / 6.0 < self.beta < 0.5):
            raise ConfigurationError(
                f"beta must lie strictly inside (1/6, 1/2), got {self.beta}")
        if not (np.isfinite(self.N) and self.N > 0):
            raise ConfigurationError(f"N must be positive, got {self.N}")


_GL_CACHE: dict = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_integral(f, edges, order):
    x, w = _gauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid + half * x[None, :]
    return complex(np.sum(f(pts) * w[None, :] * half))


def _adaptive_panels(f, edges, rtol, max_order=256):
    order = 16
    prev = _panel_integral(f, edges, order)
    while order < max_order:
        order *= 2
        cur = _panel_integral(f, edges, order)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise RuntimeError(f"oscillatory quadrature did not reach rtol={rtol}")


def oscillatory_integral(spec: OscillatoryIntegralSpec, rtol: float = 1e-10) -> complex:
    """``I_N`` by Gauss-Legendre panels that each span pi of phase.

    Works in ``s = sqrt(N) theta`` where the phase is
    ``2 N sin^2(s / (2 sqrt N))``; panel count grows like ``N^(1 - 2 beta)``.
    """
    n = float(spec.N)
    root = math.sqrt(n)
    s_max = n ** (0.5 - spec.beta)
    total_phase = 2.0 * n * math.sin(s_max / (2.0 * root)) ** 2
    j = np.arange(1, int(total_phase // math.pi) + 1)
    cuts = 2.0 * root * np.arcsin(np.sqrt(j * math.pi / (2.0 * n)))
    edges = np.concatenate([[0.0], cuts[cuts < s_max], [s_max]])

    def f(s):
        return np.exp(2j * n * np.sin(s / (2.0 * root)) ** 2)
    return _adaptive_panels(f, edges, rtol)


def oscillatory_integral_substituted(spec: OscillatoryIntegralSpec,
                                     rtol: float = 1e-10) -> complex:
    """``I_N`` from the substituted form ``int_0^Z e^{iz} / (N^1/2 sin theta(z)) dz``.

    With ``z = p^2`` the weight becomes ``2 / sqrt(2 - p^2/N)``, which is
    smooth at ``p = 0``.
    """
    n = float(spec.N)
    z_max = 2.0 * n * math.sin(0.5 * n ** (-spec.beta)) ** 2
    p_max = math.sqrt(z_max)
    j = np.arange(1, int(z_max // math.pi) + 1)
    cuts = np.sqrt(j * math.pi)
    edges = np.concatenate([[0.0], cuts[cuts < p_max], [p_max]])

    def f(p):
        return 2.0 * np.exp(1j * p * p) / np.sqrt(2.0 - p * p / n)
    return _adaptive_panels(f, edges, rtol)


def fresnel_oracle(split: float = 40.0, dps: int = 60):
    """``(int_0^inf cos x^2 dx, int_0^inf sin x^2 dx)``.

    Power series on ``[0, sqrt(split)]`` in extended precision plus the
    asymptotic expansion of the tail, truncated at its smallest term.
    """
    with mpmath.workdps(dps):
        x = mpmath.sqrt(mpmath.mpf(split))
        x2 = x * x
        head = mpmath.mpc(0)
        term = x  # i^n x^(2n+1) / n!
        n = 0
        eps = mpmath.mpf(10) ** (-dps + 5)
        while True:
            head += term / (2 * n + 1)
            n += 1
            term = term * 1j * x2 / n
            if abs(term) < eps and n > x2:
                break
        # int_x^inf e^{it^2} dt = (i/2) e^{iY} Y^{-1/2} sum_k (1/2)_k (-i/Y)^k
        y = mpmath.mpf(split)
        tail_sum = mpmath.mpc(0)
        term = mpmath.mpc(1)
        k = 0
        while True:
            tail_sum += term
            nxt = term * (mpmath.mpf(k) + mpmath.mpf(1) / 2) * (-1j) / y
            if abs(nxt) >= abs(term) or abs(nxt) < eps:
                break
            term = nxt
            k += 1
        tail = 0.5j * mpmath.expj(y) / mpmath.sqrt(y) * tail_sum
        total = head + tail
        return float(total.real), float(total.imag)
