r"""Restriction, profile evolution and shell reconstruction.

The reconstruction of a wave field from Fourier data ``u0_hat`` is

    Q_b = S o F_1^{-1} o J_b o R

with

* ``R u0_hat(xi, q) = (|xi| / 2 pi i)^{(d-1)/2} 1_{xi > 0} u0_hat(|xi| q)``
  (``R_rho`` replaces ``|xi|^{(d-1)/2} 1_{xi>0}`` by a smooth cutoff ``W_rho``),
* ``J_b V_hat(xi, q, tau) = exp(-i b(xi) tau) V_hat(xi, q)``,
* ``S V(x, t) = (ct)^{-(d-1)/2} 1_{|x| < 2ct} V(|x| - ct, x/|x|, eps^2 t)``.

Complex powers use the principal branch, ``i^{1/2} = exp(i pi/4)``.

Cutoff blend
------------
On ``0 < xi < rho`` the cutoff is ``W_rho(xi) = xi^{(d-1)/2} s(xi/rho)`` with

* d = 1: ``s(u) = u``                           (continuous),
* d = 2: ``s(u) = 3u^2 - 2u^3``                  (C^1),
* d = 3: ``s(u) = 10u^3 - 15u^4 + 6u^5``         (C^2).

``W_rho = 0`` for ``xi <= 0`` and ``W_rho = xi^{(d-1)/2}`` for ``xi >= rho``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .dispersion import DispersionSpec, eval_b
from .errors import ConfigurationError, DomainError
from .spectral import FourierField, Grid1D, default_profile_grid, inverse_transform_1
from .stationary_phase import SphereQuadrature, _lagrange4

__all__ = [
    "Regularizer",
    "ProfileFamily",
    "ShellField",
    "regularizer_eval",
    "restrict",
    "restrict_regularized",
    "evolve",
    "shell",
    "reconstruct",
    "profile_at",
    "default_directions",
    "branch_factor",
]


def branch_factor(d: int) -> complex:
    """``(2 pi i)^{-(d-1)/2}`` on the principal branch."""
    return (2.0 * np.pi) ** (-(d - 1) / 2.0) * np.exp(-0.25j * np.pi * (d - 1))


def _smoothstep(m: int, u):
    if m == 0:
        return u
    if m == 1:
        return u * u * (3.0 - 2.0 * u)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


@dataclass(frozen=True)
class Regularizer:
    """Smooth cutoff ``W_rho`` of class ``C^{d-1}``."""

    rho: float
    d: int

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.d}")

    @property
    def smoothness(self) -> int:
        return self.d - 1

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        power = (self.d - 1) / 2.0
        pos = np.maximum(xi, 0.0)
        u = np.clip(pos / self.rho, 0.0, 1.0)
        blend = np.clip(_smoothstep(self.smoothness, u), 0.0, 1.0)
        out = pos**power * blend
        return np.where(xi > 0, out, 0.0)


def regularizer_eval(reg: Regularizer, xi):
    return reg(xi)


def default_directions(d: int) -> SphereQuadrature:
    """Direction set used when profiles are only needed for shell evaluation."""
    if d == 1:
        return SphereQuadrature.build(1)
    if d == 2:
        return SphereQuadrature.build(2, 256)
    return SphereQuadrature.build(3, 32, 32)


SpectrumFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ProfileFamily:
    """Profile spectra ``V_hat(xi, q, tau)`` on ``xi_grid x directions``.

    ``spectrum_fn(xi, q)`` optionally evaluates the same family at arbitrary
    ``xi`` and directions (``q`` of shape ``xi.shape + (d,)``); profiles built
    from Fourier data with a closure carry one, so they can be resampled.
    """

    z_grid: Grid1D
    directions: SphereQuadrature
    spectra: np.ndarray
    tau: float = 0.0
    spectrum_fn: Optional[SpectrumFn] = None
    _physical: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        spectra = np.asarray(self.spectra, dtype=complex)
        if spectra.shape != (self.directions.size, self.z_grid.n):
            raise ConfigurationError(
                f"spectra shape {spectra.shape} does not match "
                f"({self.directions.size}, {self.z_grid.n})")
        if not np.all(np.isfinite(spectra)):
            raise ValueError("profile spectra must be finite")
        if np.any(spectra[:, self.xi_grid.nodes < 0] != 0):
            raise ValueError("profile spectra must vanish for xi < 0")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        spectra.setflags(write=False)
        object.__setattr__(self, "spectra", spectra)

    @property
    def d(self) -> int:
        return self.directions.d

    @property
    def xi_grid(self) -> Grid1D:
        return self.z_grid.dual()

    def physical(self) -> np.ndarray:
        """``V(z, q)`` on ``z_grid``, shape ``(n_directions, n_z)``."""
        if not self._physical:
            self._physical.append(inverse_transform_1(self.spectra, self.xi_grid, self.z_grid))
        return self._physical[0]

    def spectral_norm(self) -> float:
        """``||V_hat||`` in ``L^2(R x S^{d-1})``."""
        dens = np.sum(np.abs(self.spectra) ** 2, axis=-1) * self.xi_grid.spacing
        return float(np.sqrt(self.directions.integrate(dens)))

    def physical_norm(self) -> float:
        """``||V||`` in ``L^2(R x S^{d-1})``."""
        dens = np.sum(np.abs(self.physical()) ** 2, axis=-1) * self.z_grid.spacing
        return float(np.sqrt(self.directions.integrate(dens)))

    def spectrum_at(self, xi, node_index=None, q=None) -> np.ndarray:
        """``V_hat`` at arbitrary ``xi`` for given directions.

        Uses ``spectrum_fn`` when available (``q`` required), otherwise
        four-point interpolation of the sampled spectra of node
        ``node_index`` (broadcast with ``xi``).
        """
        xi = np.asarray(xi, dtype=float)
        if self.spectrum_fn is not None and q is not None:
            return np.asarray(self.spectrum_fn(xi, np.asarray(q, dtype=float)), dtype=complex)
        if node_index is None:
            raise ConfigurationError("need a direction index without a spectrum closure")
        g = self.xi_grid
        pos = (xi - g.z_min) / g.spacing
        base = np.floor(pos).astype(int)
        frac = pos - base
        w = _lagrange4(frac)
        rows = np.broadcast_to(np.asarray(node_index), xi.shape)
        out = np.zeros(xi.shape, dtype=complex)
        for j, off in enumerate(range(-1, 3)):
            col = base + off
            ok = (col >= 0) & (col < g.n)
            vals = np.where(ok, self.spectra[rows, np.clip(col, 0, g.n - 1)], 0.0)
            out += w[..., j] * vals
        return np.where(xi > 0, out, 0.0)

    def resample(self, directions: SphereQuadrature) -> "ProfileFamily":
        """The same family on another direction set (needs ``spectrum_fn``)."""
        if directions is self.directions:
            return self
        if self.spectrum_fn is None:
            raise ConfigurationError("profile has no spectrum closure; cannot change directions")
        if directions.d != self.d:
            raise ConfigurationError("direction set has the wrong dimension")
        spectra = _sample(self.spectrum_fn, self.xi_grid.nodes, directions.nodes)
        return ProfileFamily(self.z_grid, directions, spectra, self.tau, self.spectrum_fn)


def _sample(fn: SpectrumFn, xi: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    xi_b = np.broadcast_to(xi[None, :], (len(nodes), xi.size))
    q_b = np.broadcast_to(nodes[:, None, :], (len(nodes), xi.size, nodes.shape[1]))
    return np.asarray(fn(xi_b, q_b), dtype=complex)


def _restriction(u0: FourierField, weight, d: int, directions, z_grid) -> ProfileFamily:
    if u0.d != d or directions.d != d:
        raise ConfigurationError("Fourier data and directions must share the dimension")
    z_grid = default_profile_grid() if z_grid is None else z_grid
    xi_max = z_grid.dual().z_max
    if xi_max > u0.evaluable_radius:
        raise DomainError(
            f"xi-grid reaches {xi_max:.6g} but the Fourier data is only "
            f"evaluable up to |k| = {u0.evaluable_radius:.6g}")
    pref = branch_factor(d)

    def spectrum_fn(xi, q):
        xi = np.asarray(xi, dtype=float)
        w = weight(xi)
        out = np.zeros(np.broadcast(xi, q[..., 0]).shape, dtype=complex)
        mask = np.broadcast_to(xi > 0, out.shape)
        if np.any(mask):
            xi_b = np.broadcast_to(xi, out.shape)[mask]
            q_b = np.broadcast_to(q, out.shape + (d,))[mask]
            w_b = np.broadcast_to(w, out.shape)[mask]
            out[mask] = pref * w_b * u0.evaluate(xi_b[:, None] * q_b)
        return out

    spectra = _sample(spectrum_fn, z_grid.dual().nodes, directions.nodes)
    return ProfileFamily(z_grid, directions, spectra, 0.0, spectrum_fn)


def restrict(u0: FourierField, directions: SphereQuadrature = None,
             z_grid: Grid1D = None) -> ProfileFamily:
    """``R u0_hat`` sampled on ``z_grid.dual()`` x ``directions``."""
    d = u0.d
    directions = default_directions(d) if directions is None else directions
    power = (d - 1) / 2.0

    def weight(xi):
        return np.where(xi > 0, np.abs(xi) ** power, 0.0)
    return _restriction(u0, weight, d, directions, z_grid)


def restrict_regularized(u0: FourierField, reg: Regularizer,
                         directions: SphereQuadrature = None,
                         z_grid: Grid1D = None) -> ProfileFamily:
    """``R_rho u0_hat``: as :func:`restrict` with the weight replaced by ``W_rho``."""
    if reg.d != u0.d:
        raise ConfigurationError("regularizer dimension differs from the data")
    directions = default_directions(u0.d) if directions is None else directions
    return _restriction(u0, reg, u0.d, directions, z_grid)


def evolve(profile: ProfileFamily, spec: DispersionSpec, tau: float) -> ProfileFamily:
    """Advance the profile by ``tau`` with ``exp(-i b(xi) tau)``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    xi = profile.xi_grid.nodes
    mult = np.exp(-1j * eval_b(spec, xi) * tau)
    spectra = profile.spectra * mult[None, :]
    fn = profile.spectrum_fn
    new_fn = None
    if fn is not None:
        def new_fn(x, q):
            return np.exp(-1j * eval_b(spec, x) * tau) * fn(x, q)
    return ProfileFamily(profile.z_grid, profile.directions, spectra,
                         profile.tau + tau, new_fn)


def profile_at(u0: FourierField, spec: DispersionSpec, tau: float,
               reg: Optional[Regularizer] = None, directions=None, z_grid=None) -> ProfileFamily:
    """``J_b R u0_hat`` (or with ``R_rho``) at time ``tau``."""
    if reg is None:
        base = restrict(u0, directions, z_grid)
    else:
        base = restrict_regularized(u0, reg, directions, z_grid)
    return evolve(base, spec, tau)


@dataclass(frozen=True, eq=False)
class ShellField:
    """``x -> (S V)(x, t)`` for one time ``t``."""

    profile: ProfileFamily
    c: float
    epsilon: float
    t: float

    @property
    def d(self) -> int:
        return self.profile.d

    @property
    def radius(self) -> float:
        return self.c * self.t

    def evaluate(self, x, chunk: int = 65536):
        """Values and a mask of degenerate points (``x = 0``)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ConfigurationError(f"points must have {self.d} coordinates")
        flat = x.reshape(-1, self.d)
        out = np.zeros(len(flat), dtype=complex)
        degenerate = np.zeros(len(flat), dtype=bool)
        v = self.profile.physical()
        zg = self.profile.z_grid
        ct = self.radius
        scale = ct ** (-(self.d - 1) / 2.0)
        for start in range(0, len(flat), chunk):
            pts = flat[start:start + chunk]
            r = np.linalg.norm(pts, axis=-1)
            zero = r == 0
            degenerate[start:start + chunk] = zero
            live = (~zero) & (r < 2.0 * ct)
            if not np.any(live):
                continue
            p, rr = pts[live], r[live]
            z = rr - ct
            pos = (z - zg.z_min) / zg.spacing
            base = np.floor(pos).astype(int)
            wz = _lagrange4(pos - base)
            cols = base[:, None] + np.arange(-1, 3)[None, :]
            ok = (cols >= 0) & (cols < zg.n)
            cols = np.clip(cols, 0, zg.n - 1)
            wz = np.where(ok, wz, 0.0)
            idx, wd = self.profile.directions.interpolation_stencil(p / rr[:, None])
            val = np.zeros(len(p), dtype=complex)
            for a in range(idx.shape[1]):
                rows = v[idx[:, a][:, None], cols]
                val += wd[:, a] * np.sum(wz * rows, axis=-1)
            chunk_out = np.zeros(len(pts), dtype=complex)
            chunk_out[live] = scale * val
            out[start:start + chunk] = chunk_out
        return out.reshape(x.shape[:-1]), degenerate.reshape(x.shape[:-1])

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]


def shell(profile: ProfileFamily, c: float, epsilon: float, t: float) -> ShellField:
    """Shell operator at time ``t``; the profile must already sit at ``tau = eps^2 t``."""
    if not (t > 0):
        raise ValueError("t must be positive")
    if not (c > 0 and epsilon > 0):
        raise ConfigurationError("c and epsilon must be positive")
    tau = epsilon**2 * t
    if abs(profile.tau - tau) > 1e-12 * max(1.0, tau):
        raise ConfigurationError(
            f"profile is at tau={profile.tau:.12g} but eps^2 t = {tau:.12g}; "
            "evolve the profile to that time first")
    return ShellField(profile, float(c), float(epsilon), float(t))


def reconstruct(u0: FourierField, spec: DispersionSpec, reg: Optional[Regularizer],
                c: float, epsilon: float, t: float, directions=None, z_grid=None) -> ShellField:
    """``Q_b u0`` (``Q_b^rho`` when ``reg`` is given) at time ``t``."""
    if not (t > 0):
        raise ValueError("t must be positive")
    tau = epsilon**2 * t
    return shell(profile_at(u0, spec, tau, reg, directions, z_grid), c, epsilon, t)
