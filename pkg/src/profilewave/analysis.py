r"""Fourier-space evaluation of shell reconstructions and convergence studies.

For a profile family ``V(z, q, tau)`` and ``L = c tau / eps^2`` the quantity

.. math::

    Q^\varepsilon(k,\tau) = e^{ic|k|L} \int_{-L}^{L}\int_{S^{d-1}}
        \frac{(L+z)^{d-1}}{L^{(d-1)/2}} e^{-iq\cdot k(L+z)} V(z,q,\tau)\,dS(q)\,dz

equals ``exp(i c|k| t) F_d(S V)(k, t)`` at ``t = tau/eps^2``.  It is computed
by a double quadrature over ``(z, q)`` without building a d-dimensional
grid.  Splitting the kernel as ``L^{(d-1)/2}`` (order 0) or ``L + 2z``
(order 1, d = 3) plus a remainder gives ``Q = A + G``; the ``A`` part
reduces to a sphere integral of ``V_hat(q.k, q)`` and converges to
``(|k|/2 pi i)^{-(d-1)/2} V_hat(|k|, k/|k|, tau)``.
"""
from __future__ import annotations

import math
import time
import tracemalloc
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dispersion import DispersionKind, DispersionSpec, eval_b, exact_multiplier_phase
from .errors import ConfigurationError, DomainError
from .operators import (ProfileFamily, Regularizer, branch_factor, default_directions,
                        profile_at, shell)
from .spectral import FourierField, GridD, forward_transform_d, inverse_transform_1
from .stationary_phase import SphereQuadrature, _lagrange4, min_theta_nodes

__all__ = [
    "PolarEvalConfig",
    "PolarTerms",
    "ConvergenceRecord",
    "ConvergenceReport",
    "qhat_polar",
    "a_term",
    "g_term",
    "polar_decomposition",
    "limit_value",
    "grid_fft_oracle",
    "reference_solution",
    "convergence_target",
    "pointwise_convergence_study",
    "weak_pairing_check",
    "BenchRow",
    "reconstruction_benchmark",
    "CONVERGE_HEADER",
]

CONVERGE_HEADER = ("d", "b_kind", "rho", "tau", "epsilon", "k_norm", "abs_error",
                   "a_term_re", "a_term_im", "g_abs", "wall_ms")


@dataclass(frozen=True)
class PolarEvalConfig:
    """Resolution knobs for the polar evaluation.

    ``quad_scale`` multiplies the minimum polar node count (values below 1
    are accepted and then fail the resolution check), ``n_azimuth`` fixes
    the azimuthal count in d = 3.  The z truncation radius is the
    half-width of the profile's z-grid.
    """

    quad_scale: float = 1.0
    n_azimuth: int = 32
    chunk: int = 256

    def __post_init__(self):
        if not (self.quad_scale > 0):
            raise ConfigurationError("quad_scale must be positive")
        if self.n_azimuth < 3:
            raise ConfigurationError("n_azimuth must be >= 3")


@dataclass(frozen=True)
class PolarTerms:
    q_value: complex
    a_value: complex
    g_value: complex
    order: int
    nodes: int


def _check_k(k):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kn = float(np.linalg.norm(k))
    if kn == 0:
        raise DomainError("k = 0 is excluded; the limit holds for k != 0 only")
    return k, kn


def _check_tau(profile: ProfileFamily, tau: float):
    if abs(profile.tau - tau) > 1e-12 * max(1.0, tau):
        raise ConfigurationError(f"profile is at tau={profile.tau} but tau={tau} was requested")


def _directions(profile: ProfileFamily, kappa, n_osc, cfg: PolarEvalConfig):
    """Sphere quadrature aligned with ``kappa`` and the profile sampled on it."""
    d = profile.d
    if profile.spectrum_fn is None:
        quad = profile.directions
        quad.require_resolution(n_osc, kappa)
        return profile
    n_theta = int(math.ceil(cfg.quad_scale * min_theta_nodes(n_osc)))
    quad = SphereQuadrature.build(d, max(n_theta, 3), cfg.n_azimuth, pole=kappa)
    quad.require_resolution(n_osc, kappa)
    return profile.resample(quad)


def _trapezoid_weights(t):
    w = np.empty_like(t)
    w[1:-1] = 0.5 * (t[2:] - t[:-2])
    w[0] = 0.5 * (t[1] - t[0])
    w[-1] = 0.5 * (t[-1] - t[-2])
    return w


def _interp_rows(v, zg, z0):
    pos = (z0 - zg.z_min) / zg.spacing
    base = int(math.floor(pos))
    w = _lagrange4(pos - base)
    cols = np.clip(base + np.arange(-1, 3), 0, zg.n - 1)
    return v[:, cols] @ w


def _order(d, order):
    if order is None:
        return 1 if d == 3 else 0
    if order not in (0, 1):
        raise ConfigurationError("order must be 0 or 1")
    if order == 1 and d != 3:
        raise ConfigurationError("the order-1 split is only defined for d = 3")
    return order


def _z_pass(profile, k, c, epsilon, tau, order, cfg):
    """Q and the z-integral form of A on the same (z, q) quadrature."""
    k, kn = _check_k(k)
    d = profile.d
    if k.size != d:
        raise ConfigurationError(f"k must have {d} components")
    _check_tau(profile, tau)
    big = c * tau / epsilon**2
    zg = profile.z_grid
    z = zg.nodes
    half = min(-zg.z_min, zg.z_max)
    zlim = min(half, big)
    kappa = k / kn
    prof = _directions(profile, kappa, kn * (big + zlim), cfg)
    quad = prof.directions
    qk = quad.nodes @ k
    gap = 0.5 * np.sum((quad.nodes - kappa) ** 2, axis=-1)
    common = np.exp(1j * kn * big * gap)

    h = zg.spacing
    p = (d - 1) / 2.0
    a_kernel = (big + 2.0 * z) if order == 1 else np.full_like(z, big**p)
    if big >= half:
        # the indicator covers the whole grid
        q_idx = np.arange(z.size)
        q_w = np.full(z.size, h)
        ends = ()
    else:
        q_idx = np.nonzero(np.abs(z) < zlim)[0]
        t = np.concatenate([[-zlim], z[q_idx], [zlim]])
        tw = _trapezoid_weights(t)
        q_w = tw[1:-1]
        ends = ((-zlim, tw[0]), (zlim, tw[-1]))
    zq = z[q_idx]
    q_kernel = q_w * (big + zq) ** (d - 1) / big**p

    q_sum = np.zeros(quad.size, dtype=complex)
    a_sum = np.zeros(quad.size, dtype=complex)
    for start in range(0, quad.size, cfg.chunk):
        sl = slice(start, start + cfg.chunk)
        v = inverse_transform_1(prof.spectra[sl], prof.xi_grid, zg)
        osc = np.exp(-1j * qk[sl, None] * z[None, :])
        vo = v * osc
        a_sum[sl] = h * (vo @ a_kernel)
        q_sum[sl] = vo[:, q_idx] @ q_kernel
        for z0, w0 in ends:
            v0 = _interp_rows(v, zg, z0)
            q_sum[sl] += w0 * (big + z0) ** (d - 1) / big**p * np.exp(-1j * qk[sl] * z0) * v0
    q_val = complex(quad.integrate(common * q_sum))
    az_val = complex(quad.integrate(common * a_sum))
    return q_val, az_val, quad.size


def qhat_polar(profile: ProfileFamily, k, c: float, epsilon: float, tau: float,
               cfg: PolarEvalConfig = PolarEvalConfig()) -> complex:
    """``exp(i c|k| tau/eps^2) (F_d o S)(V)(k, tau/eps^2)`` by polar quadrature."""
    return _z_pass(profile, k, c, epsilon, tau, 0, cfg)[0]


def a_term(profile: ProfileFamily, k, c: float, epsilon: float, tau: float,
           order: Optional[int] = None, cfg: PolarEvalConfig = PolarEvalConfig()) -> complex:
    """``A_0`` or ``A_1`` as a sphere integral of ``V_hat(q.k, q)`` (no z-integral)."""
    k, kn = _check_k(k)
    d = profile.d
    order = _order(d, order)
    _check_tau(profile, tau)
    big = c * tau / epsilon**2
    kappa = k / kn
    # same resolution as the (z, q) pass so that Q - A - G is a pure z-rule residual
    zg = profile.z_grid
    n_osc = kn * (big + min(-zg.z_min, zg.z_max, big))
    if profile.spectrum_fn is None:
        quad = profile.directions
        quad.require_resolution(n_osc, kappa)
    else:
        n_theta = int(math.ceil(cfg.quad_scale * min_theta_nodes(n_osc)))
        quad = SphereQuadrature.build(d, max(n_theta, 3), cfg.n_azimuth, pole=kappa)
        quad.require_resolution(n_osc, kappa)
    nodes = quad.nodes
    xi = nodes @ k
    idx = np.arange(quad.size)

    def vhat(x):
        return profile.spectrum_at(x, node_index=idx, q=nodes)

    gap = 0.5 * np.sum((nodes - kappa) ** 2, axis=-1)
    common = np.exp(1j * kn * big * gap)
    if order == 0:
        vals = big ** ((d - 1) / 2.0) * vhat(xi)
    else:
        if profile.spectrum_fn is not None:
            step = 1e-3
        else:
            step = profile.xi_grid.spacing
        deriv = (vhat(xi - 2 * step) - 8 * vhat(xi - step)
                 + 8 * vhat(xi + step) - vhat(xi + 2 * step)) / (12.0 * step)
        vals = big * vhat(xi) + 2j * deriv
    return complex(quad.integrate(common * vals))


def g_term(profile: ProfileFamily, k, c: float, epsilon: float, tau: float,
           order: Optional[int] = None, cfg: PolarEvalConfig = PolarEvalConfig()) -> complex:
    """Quadrature of the kernel remainder ``Q - A`` in (z, q)."""
    order = _order(profile.d, order)
    q_val, az_val, _ = _z_pass(profile, k, c, epsilon, tau, order, cfg)
    return q_val - az_val


def polar_decomposition(profile: ProfileFamily, k, c: float, epsilon: float, tau: float,
                        order: Optional[int] = None,
                        cfg: PolarEvalConfig = PolarEvalConfig()) -> PolarTerms:
    """``Q``, ``A`` (sphere form) and ``G`` in one call."""
    order = _order(profile.d, order)
    q_val, az_val, nodes = _z_pass(profile, k, c, epsilon, tau, order, cfg)
    a_val = a_term(profile, k, c, epsilon, tau, order, cfg)
    return PolarTerms(q_val, a_val, q_val - az_val, order, nodes)


def limit_value(profile: ProfileFamily, k) -> complex:
    """``(|k|/2 pi i)^{-(d-1)/2} V_hat(|k|, k/|k|, tau)``."""
    k, kn = _check_k(k)
    d = profile.d
    kappa = k / kn
    if profile.spectrum_fn is not None:
        vhat = profile.spectrum_at(np.array(kn), q=kappa)
    else:
        idx, w = profile.directions.interpolation_stencil(kappa)
        vhat = sum(w[0, a] * profile.spectrum_at(np.array(kn), node_index=idx[0, a])
                   for a in range(idx.shape[1]))
    return complex(kn ** (-(d - 1) / 2.0) / branch_factor(d) * vhat)


def grid_fft_oracle(profile: ProfileFamily, k, c: float, epsilon: float, tau: float,
                    n: int, margin: float = 1.1) -> complex:
    """Same quantity as :func:`qhat_polar`, from ``S V`` sampled on a d-dimensional grid.

    The box is a multiple of ``2 pi / |k|`` wide so that ``k`` falls on the
    FFT grid when it is axis-aligned; otherwise the DFT is summed at ``k``.
    """
    k, kn = _check_k(k)
    d = profile.d
    t = tau / epsilon**2
    field_ = shell(profile, c, epsilon, t)
    width_min = 2.0 * (2.0 * c * t) * margin
    m = int(math.ceil(width_min * kn / (2.0 * math.pi)))
    width = 2.0 * math.pi * m / kn
    grid = GridD.cube(d, -width / 2.0, width / 2.0, n)
    values = field_(grid.mesh())
    dk = kn / m
    steps = k / dk
    if np.all(np.abs(steps - np.round(steps)) < 1e-9):
        spec = forward_transform_d(values, grid)
        kg = spec.grid.axes
        index = tuple(int(round((k[j] - kg[j].z_min) / kg[j].spacing)) for j in range(d))
        raw = spec.values[index]
    else:
        x = grid.mesh()
        raw = np.sum(values * np.exp(-1j * (x @ k))) * grid.cell_volume
    return complex(np.exp(1j * c * kn * t) * raw)


def reference_solution(u0: FourierField, spec: DispersionSpec, k, t: float,
                       epsilon: Optional[float] = None) -> complex:
    """Exact multiplier solution ``exp(-i Phi(|k|, t)) u0_hat(k)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    phase = exact_multiplier_phase(spec, np.linalg.norm(k), t, epsilon)
    return complex(np.exp(-1j * phase) * u0.evaluate(k[None, :])[0])


def convergence_target(u0: FourierField, spec: DispersionSpec, k, tau: float,
                       epsilon: Optional[float] = None) -> complex:
    """Comparison value for ``Q^eps(k, tau)``.

    ``exp(-i b(|k|) tau) u0_hat(k)`` for the zero and cubic laws; for the
    square-root law the true solution with the fast phase removed,
    ``exp(i c|k| t) u_hat(k, t)`` at ``t = tau/eps^2``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kn = float(np.linalg.norm(k))
    if spec.kind is DispersionKind.FULL_SQRT:
        eps = spec.epsilon if epsilon is None else epsilon
        t = tau / eps**2
        return complex(np.exp(1j * spec.c * kn * t) * reference_solution(u0, spec, k, t, eps))
    return complex(np.exp(-1j * eval_b(spec, kn) * tau) * u0.evaluate(k[None, :])[0])


@dataclass(frozen=True)
class ConvergenceRecord:
    epsilon: float
    k: tuple
    k_norm: float
    q_value: complex
    reference: complex
    abs_error: float
    a_term: complex
    g_term: complex
    wall_ms: float


@dataclass
class ConvergenceReport:
    d: int
    b_kind: str
    rho: float
    tau: float
    records: list = field(default_factory=list)

    def rows(self):
        for r in self.records:
            yield (self.d, self.b_kind, self.rho, self.tau, r.epsilon, r.k_norm, r.abs_error,
                   r.a_term.real, r.a_term.imag, abs(r.g_term), r.wall_ms)

    def errors_by_k(self) -> dict:
        """``k -> [abs_error, ...]`` in record order (decreasing epsilon)."""
        out: dict = {}
        for r in self.records:
            out.setdefault(r.k, []).append(r.abs_error)
        return out

    def fitted_rates(self) -> dict:
        """Least-squares slope of ``log(error)`` against ``log(eps)`` per k (informational)."""
        rates = {}
        for k, recs in self._by_k().items():
            eps = np.array([r.epsilon for r in recs])
            err = np.array([r.abs_error for r in recs])
            if len(eps) < 2 or np.any(err <= 0):
                continue
            rates[k] = float(np.polyfit(np.log(eps), np.log(err), 1)[0])
        return rates

    def _by_k(self):
        out: dict = {}
        for r in self.records:
            out.setdefault(r.k, []).append(r)
        return out


def _validate_scope(k_list, rho):
    ks = []
    for k in k_list:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        kn = float(np.linalg.norm(k))
        if rho is not None and not kn > rho:
            raise ConfigurationError(
                f"|k| = {kn:.6g} violates |k| > rho = {rho:.6g}; "
                "pointwise convergence is only asserted for |k| > rho")
        ks.append(k)
    return ks


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def pointwise_convergence_study(u0: FourierField, spec: DispersionSpec,
                                reg: Optional[Regularizer], k_list: Sequence,
                                tau: float, eps_list: Sequence[float], *,
                                z_grid=None, order: Optional[int] = None,
                                cfg: PolarEvalConfig = PolarEvalConfig(),
                                threads: int = 1) -> ConvergenceReport:
    """Errors ``|Q^eps(k, tau) - target|`` for every (eps, k), eps decreasing."""
    d = u0.d
    rho = reg.rho if reg is not None else None
    ks = _validate_scope(k_list, rho)
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    eps_sorted = sorted((float(e) for e in eps_list), reverse=True)
    if any(e <= 0 for e in eps_sorted):
        raise ConfigurationError("epsilon values must be positive")
    order = _order(d, order)
    profile = profile_at(u0, spec, tau, reg, default_directions(d), z_grid)
    cells = [(e, k) for e in eps_sorted for k in ks]

    def run(cell):
        eps, k = cell
        start = time.perf_counter()
        terms = polar_decomposition(profile, k, spec.c, eps, tau, order, cfg)
        target = convergence_target(u0, spec, k, tau, eps)
        wall = (time.perf_counter() - start) * 1e3
        return ConvergenceRecord(eps, tuple(float(x) for x in k), float(np.linalg.norm(k)),
                                 terms.q_value, target, abs(terms.q_value - target),
                                 terms.a_value, terms.g_value, wall)

    report = ConvergenceReport(d, spec.kind.value, float(rho) if rho is not None else 0.0,
                               float(tau))
    report.records.extend(_map(run, cells, threads))
    return report


def weak_pairing_check(u0: FourierField, spec: DispersionSpec,
                       f: Callable[[np.ndarray], np.ndarray], tau: float,
                       eps_list: Sequence[float], box: Sequence, n_nodes: int = 41, *,
                       z_grid=None, cfg: PolarEvalConfig = PolarEvalConfig(),
                       threads: int = 1) -> list:
    """``int (Q^eps(k, tau) - target(k)) f(k) dk`` per epsilon, with the unregularized R.

    ``box`` lists ``(lo, hi)`` per axis and must contain the support of
    ``f``; the k-integral uses the tensor trapezoid rule on ``n_nodes`` per
    axis.  The node ``k = 0`` is skipped (a null set).
    """
    d = u0.d
    if len(box) != d:
        raise ConfigurationError("box needs one (lo, hi) pair per dimension")
    axes = [np.linspace(lo, hi, n_nodes) for lo, hi in box]
    w1 = [_trapezoid_weights(a) for a in axes]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    weights = np.prod(np.stack(np.meshgrid(*w1, indexing="ij"), axis=-1), axis=-1).ravel()
    fv = np.asarray(f(mesh), dtype=complex)
    keep = (fv != 0) & (np.linalg.norm(mesh, axis=-1) > 0)
    mesh, weights, fv = mesh[keep], weights[keep], fv[keep]
    profile = profile_at(u0, spec, tau, None, default_directions(d), z_grid)
    out = []
    for eps in eps_list:
        def cell(i, eps=eps):
            k = mesh[i]
            q = qhat_polar(profile, k, spec.c, eps, tau, cfg)
            return q - convergence_target(u0, spec, k, tau, eps)
        diffs = np.array(_map(cell, range(len(mesh)), threads), dtype=complex)
        out.append(complex(np.sum(weights * fv * diffs)))
    return out


@dataclass(frozen=True)
class BenchRow:
    epsilon: float
    recon_wall_ms: float
    recon_peak_mem_est: int
    grid_cells_required: float
    grid_wall_ms: Optional[float]
    grid_estimated: bool


def _time_reconstruction(u0, spec, reg, tau, c, eps, n_rays, n_samples, repeats):
    d = u0.d
    t = tau / eps**2
    rays = SphereQuadrature.build(d, n_rays, max(3, n_rays)).nodes if d > 1 else np.array([[1.0], [-1.0]])
    s = c * t + np.linspace(-16.0, 16.0, n_samples)
    pts = (s[None, :, None] * rays[:, None, :]).reshape(-1, d)
    best = math.inf
    peak = 0
    for _ in range(repeats):
        tracemalloc.start()
        start = time.perf_counter()
        prof = profile_at(u0, spec, tau, reg)
        field_ = shell(prof, c, eps, t)
        field_(pts)
        elapsed = time.perf_counter() - start
        peak = max(peak, tracemalloc.get_traced_memory()[1])
        tracemalloc.stop()
        best = min(best, elapsed)
    return best * 1e3, peak


def _time_grid_solve(u0, spec, d, t, eps, c, dx):
    n = int(math.ceil(2.0 * (2.0 * c * t) / dx))
    n += n % 2
    half = 0.5 * n * dx
    grid = GridD.cube(d, -half, half, n)
    kgrid = grid.dual()
    kmesh = kgrid.mesh()
    start = time.perf_counter()
    uhat = u0.evaluate(kmesh)
    phase = exact_multiplier_phase(spec, np.linalg.norm(kmesh, axis=-1), t, eps)
    from .spectral import inverse_transform_d
    inverse_transform_d(FourierField(kgrid, np.exp(-1j * phase) * uhat), grid)
    return (time.perf_counter() - start) * 1e3


def reconstruction_benchmark(u0: FourierField, spec: DispersionSpec,
                             reg: Optional[Regularizer], tau: float,
                             eps_list: Sequence[float], *, c: float = 1.0, dx: float = 0.25,
                             grid_cap: int = 2**22, n_rays: int = 8, n_samples: int = 512,
                             repeats: int = 3) -> list:
    """Reconstruction cost per epsilon next to the size of a direct grid solve.

    The reconstruction work (restriction, evolution, shell evaluation at a
    fixed sample set around ``|x| = ct``) does not depend on epsilon.  A
    direct grid solve needs ``(2 c tau / eps^2 / dx)^d`` cells; it is timed
    only for d <= 2 when that count is at most ``grid_cap``.
    """
    d = u0.d
    rows = []
    for eps in eps_list:
        ms, peak = _time_reconstruction(u0, spec, reg, tau, c, eps, n_rays, n_samples, repeats)
        t = tau / eps**2
        per_axis = 2.0 * c * t / dx
        cells = float(round(per_axis**d)) if abs(per_axis - round(per_axis)) < 1e-9 * per_axis else per_axis**d
        grid_ms = None
        if d <= 2 and cells <= grid_cap:
            grid_ms = _time_grid_solve(u0, spec, d, t, eps, c, dx)
        rows.append(BenchRow(float(eps), ms, int(peak), cells, grid_ms, grid_ms is None))
    return rows
