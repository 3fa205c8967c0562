r"""Grids and continuous-convention Fourier transforms.

The transforms approximate

.. math::

    \hat u(k) = \int_{\mathbb{R}^d} u(x) e^{-ik\cdot x}\,dx, \qquad
    u(x) = \frac{1}{(2\pi)^d}\int_{\mathbb{R}^d} \hat u(k) e^{ik\cdot x}\,dk

on uniform grids.  DFT sums are scaled by the grid spacing so that the
discrete values approximate the integrals directly.  A physical grid with
``n`` nodes and spacing ``h`` is paired with the dual grid of spacing
``2*pi/(n*h)`` centred on zero (node ``-n//2`` ... ``n - n//2 - 1``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigurationError, DomainError

__all__ = [
    "Grid1D",
    "GridD",
    "FourierField",
    "default_profile_grid",
    "forward_transform_1",
    "inverse_transform_1",
    "forward_transform_d",
    "inverse_transform_d",
]

_REL_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``z_min, z_min + h, ..., z_max`` with ``n`` nodes."""

    z_min: float
    z_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"Grid1D needs n >= 2 nodes, got {self.n}")
        if not np.isfinite(self.z_min) or not np.isfinite(self.z_max):
            raise ConfigurationError("Grid1D bounds must be finite")
        if not self.z_max > self.z_min:
            raise ConfigurationError(
                f"Grid1D needs z_max > z_min, got [{self.z_min}, {self.z_max}]")

    @classmethod
    def periodic(cls, lo: float, hi: float, n: int) -> "Grid1D":
        """``n`` nodes on ``[lo, hi)``; the right end point is left out."""
        h = (hi - lo) / n
        return cls(float(lo), float(hi - h), int(n))

    @classmethod
    def from_nodes(cls, nodes: Sequence[float]) -> "Grid1D":
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigurationError("need a 1-D array of at least two nodes")
        steps = np.diff(nodes)
        if np.any(steps <= 0):
            raise ConfigurationError("grid nodes must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > _REL_TOL * abs(steps.mean()) * 10:
            raise ConfigurationError("grid nodes are not uniformly spaced")
        return cls(float(nodes[0]), float(nodes[-1]), int(nodes.size))

    @property
    def spacing(self) -> float:
        return (self.z_max - self.z_min) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.z_min + self.spacing * np.arange(self.n)

    @property
    def period(self) -> float:
        """Length ``n * h`` of the periodic box the DFT sees."""
        return self.n * self.spacing

    def dual(self) -> "Grid1D":
        """The DFT-dual grid, centred on zero."""
        dk = 2.0 * np.pi / self.period
        lo = -(self.n // 2) * dk
        return Grid1D(lo, lo + (self.n - 1) * dk, self.n)

    def is_dual_of(self, other: "Grid1D") -> bool:
        if self.n != other.n:
            return False
        return abs(self.spacing * other.spacing * self.n - 2.0 * np.pi) <= 2.0 * np.pi * _REL_TOL


def default_profile_grid() -> Grid1D:
    """z-grid used for one-dimensional profiles: 2**13 nodes on [-512, 512).

    The long box gives a fine xi-spacing (2 pi / 1024), which keeps the
    trigonometric interpolation of spectra with kinks accurate; the spacing
    1/8 resolves frequencies up to 8 pi.
    """
    return Grid1D.periodic(-512.0, 512.0, 2**13)


@dataclass(frozen=True)
class GridD:
    """Tensor product of ``d`` uniform axes, ``d`` in {1, 2, 3}."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {len(axes)}")
        if not all(isinstance(a, Grid1D) for a in axes):
            raise ConfigurationError("GridD axes must be Grid1D instances")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def cube(cls, d: int, lo: float, hi: float, n: int) -> "GridD":
        """Periodic cube ``[lo, hi)^d`` with ``n`` nodes per axis."""
        if d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {d}")
        return cls(tuple(Grid1D.periodic(lo, hi, n) for _ in range(d)))

    @classmethod
    def from_nodes(cls, *node_arrays) -> "GridD":
        return cls(tuple(Grid1D.from_nodes(a) for a in node_arrays))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([a.spacing for a in self.axes]))

    def dual(self) -> "GridD":
        return GridD(tuple(a.dual() for a in self.axes))

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (d,)``."""
        grids = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
        return np.stack(grids, axis=-1)


@dataclass(frozen=True, eq=False)
class FourierField:
    """Samples of a Fourier-space function on a k-grid.

    ``closure`` (optional) evaluates the represented continuous function at
    arbitrary wave vectors, arrays of shape ``(..., d)``.  Without it,
    off-grid values come from cubic interpolation of the samples.
    ``support_radius`` declares ``|u(k)| = 0`` for ``|k| > support_radius``.
    """

    grid: GridD
    values: np.ndarray
    closure: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support_radius: Optional[float] = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("FourierField values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.support_radius is not None:
            r = np.linalg.norm(self.grid.mesh(), axis=-1)
            if np.any(np.abs(values[r > self.support_radius]) > 0):
                raise ValueError("values do not vanish outside the declared support radius")

    @property
    def d(self) -> int:
        return self.grid.d

    @classmethod
    def from_function(cls, fn, grid: GridD, support_radius=None) -> "FourierField":
        """Sample ``fn`` on ``grid`` and keep it as the analytic closure."""
        return cls(grid, fn(grid.mesh()), closure=fn, support_radius=support_radius)

    @property
    def evaluable_radius(self) -> float:
        """Largest ``R`` such that every ``|k| <= R`` can be evaluated."""
        if self.closure is not None or self.support_radius is not None:
            return np.inf
        return min(min(-a.z_min, a.z_max) for a in self.grid.axes)

    def evaluate(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if k.shape[-1] != self.d:
            raise ConfigurationError(f"wave vectors must have {self.d} components")
        if self.closure is not None:
            return np.asarray(self.closure(k), dtype=complex)
        return self._interpolate(k)

    def _interpolate(self, k: np.ndarray) -> np.ndarray:
        if self._interp is None:
            axes = [a.nodes for a in self.grid.axes]
            method = "cubic" if min(self.grid.shape) >= 4 else "linear"
            interp = (RegularGridInterpolator(axes, self.values.real, method=method),
                      RegularGridInterpolator(axes, self.values.imag, method=method))
            object.__setattr__(self, "_interp", interp)
        flat = k.reshape(-1, self.d)
        inside = np.ones(len(flat), dtype=bool)
        for j, a in enumerate(self.grid.axes):
            inside &= (flat[:, j] >= a.z_min) & (flat[:, j] <= a.z_max)
        out = np.zeros(len(flat), dtype=complex)
        if not np.all(inside):
            outside = flat[~inside]
            if self.support_radius is None or np.any(
                    np.linalg.norm(outside, axis=-1) <= self.support_radius):
                raise DomainError("wave vector outside the tabulated k-grid")
        if np.any(inside):
            pts = flat[inside]
            out[inside] = self._interp[0](pts) + 1j * self._interp[1](pts)
        if self.support_radius is not None:
            out[np.linalg.norm(flat, axis=-1) > self.support_radius] = 0.0
        return out.reshape(k.shape[:-1])


def _check_axis(values: np.ndarray, grid: Grid1D, axis: int):
    if values.shape[axis] != grid.n:
        raise ConfigurationError(
            f"axis {axis} has {values.shape[axis]} samples, grid has {grid.n}")


def _forward_axis(values, grid: Grid1D, axis: int) -> np.ndarray:
    _check_axis(values, grid, axis)
    h, n, x0 = grid.spacing, grid.n, grid.z_min
    dual = grid.dual()
    k0, dk = dual.z_min, dual.spacing
    shape = [1] * values.ndim
    shape[axis] = n
    j = np.arange(n).reshape(shape)
    pre = np.exp(-1j * j * h * k0)
    post = h * np.exp(-1j * x0 * k0) * np.exp(-1j * x0 * dk * j)
    return post * np.fft.fft(values * pre, axis=axis)


def _inverse_axis(spectrum, grid: Grid1D, axis: int) -> np.ndarray:
    # ``grid`` is the physical grid, ``spectrum`` lives on grid.dual()
    _check_axis(spectrum, grid, axis)
    h, n, x0 = grid.spacing, grid.n, grid.z_min
    dual = grid.dual()
    k0, dk = dual.z_min, dual.spacing
    shape = [1] * spectrum.ndim
    shape[axis] = n
    m = np.arange(n).reshape(shape)
    pre = np.exp(1j * x0 * dk * m)
    post = (dk * n / (2.0 * np.pi)) * np.exp(1j * x0 * k0) * np.exp(1j * m * h * k0)
    return post * np.fft.ifft(spectrum * pre, axis=axis)


def forward_transform_1(values, z_grid: Grid1D) -> np.ndarray:
    """Continuous-convention transform along the last axis onto ``z_grid.dual()``."""
    values = np.asarray(values, dtype=complex)
    return _forward_axis(values, z_grid, values.ndim - 1)


def inverse_transform_1(spectrum, xi_grid: Grid1D, z_grid: Grid1D) -> np.ndarray:
    """``(1/2pi) * int exp(i z xi) V(xi) dxi`` along the last axis.

    ``xi_grid`` must be the dual of ``z_grid``; anything else is a
    configuration error since the DFT would silently rescale.
    """
    spectrum = np.asarray(spectrum, dtype=complex)
    if not np.all(np.isfinite(spectrum)):
        raise ValueError("profile spectrum must be finite")
    dual = z_grid.dual()
    if not (xi_grid.is_dual_of(z_grid)
            and abs(xi_grid.z_min - dual.z_min) <= _REL_TOL * max(1.0, abs(dual.z_min))):
        raise ConfigurationError("xi-grid is not the DFT dual of the z-grid")
    return _inverse_axis(spectrum, z_grid, spectrum.ndim - 1)


def forward_transform_d(values, grid: GridD, closure=None) -> FourierField:
    """``int u(x) exp(-i k.x) dx`` sampled on ``grid.dual()``."""
    values = np.asarray(values, dtype=complex)
    if values.shape != grid.shape:
        raise ConfigurationError(
            f"sample shape {values.shape} does not match grid {grid.shape}")
    out = values
    for axis, g in enumerate(grid.axes):
        out = _forward_axis(out, g, axis)
    return FourierField(grid.dual(), out, closure=closure)


def inverse_transform_d(field_: FourierField, grid: GridD) -> np.ndarray:
    """Inverse of :func:`forward_transform_d`; ``grid`` is the physical grid."""
    if field_.grid.shape != grid.shape or not all(
            kg.is_dual_of(xg) for kg, xg in zip(field_.grid.axes, grid.axes)):
        raise ConfigurationError("k-grid is not the DFT dual of the physical grid")
    out = np.array(field_.values)
    for axis, g in enumerate(grid.axes):
        out = _inverse_axis(out, g, axis)
    return out
