import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from profilewave import (ConfigurationError, DispersionSpec, DomainError, FourierField,
                         Grid1D, GridD, ProfileFamily, Regularizer, SphereQuadrature,
                         branch_factor, default_initial_data, evolve, inverse_transform_1,
                         profile_at, reconstruct, regularizer_eval, restrict,
                         restrict_regularized, shell)
from profilewave.initial_data import gaussian_data, load_tabulated
from profilewave.stationary_phase import sphere_area


def _blend(d, u):
    """Published blend polynomials, evaluated independently."""
    return {1: u, 2: 3 * u**2 - 2 * u**3, 3: 10 * u**3 - 15 * u**4 + 6 * u**5}[d]


@pytest.mark.parametrize("d, rho, xi, expected", [
    (1, 0.5, -1.0, 0.0),
    (1, 0.5, 1.0, 1.0),
    (3, 0.1, 0.2, 0.2),
    (2, 0.5, 0.25, 0.25**0.5 * _blend(2, 0.5)),
    (3, 0.5, 0.2, 0.2 * _blend(3, 0.4)),
])
def test_regularizer_examples(d, rho, xi, expected):
    assert regularizer_eval(Regularizer(rho, d), xi) == pytest.approx(expected, rel=1e-14)


@settings(max_examples=60)
@given(st.integers(1, 3), st.floats(0.01, 5.0), st.floats(-10.0, 10.0))
def test_regularizer_bounds(d, rho, xi):
    w = Regularizer(rho, d)(xi)
    full = max(xi, 0.0) ** ((d - 1) / 2)
    if xi <= 0:
        assert w == 0
    elif xi >= rho:
        assert w == pytest.approx(full, rel=1e-14)
    else:
        assert -1e-15 <= w <= full * (1 + 1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_regularizer_smoothness_across_joints(d):
    rho = 0.4
    reg = Regularizer(rho, d)
    h = 1e-4
    for x0 in (0.0, rho):
        for order in range(d):
            # one-sided derivative estimates on each side must agree
            left = _one_sided(reg, x0 - 1e-7, -h, order)
            right = _one_sided(reg, x0 + 1e-7, h, order)
            assert abs(left - right) < 5e-2 * max(1.0, abs(right)), (x0, order)


def _one_sided(f, x, h, order):
    pts = x + h * np.arange(order + 3)
    vals = f(pts)
    for _ in range(order):
        vals = np.diff(vals) / h
    return vals[0]


def test_branch_factor_principal():
    assert branch_factor(1) == 1
    assert branch_factor(3) == pytest.approx(1 / (2j * np.pi))
    assert branch_factor(2) == pytest.approx((2 * np.pi) ** -0.5 * np.exp(-0.25j * np.pi))


def test_restrict_one_dimensional_example():
    prof = restrict(gaussian_data(1))
    value = prof.spectrum_at(np.array([2.0, -1.0]), q=np.array([[1.0], [1.0]]))
    assert value[0] == pytest.approx(np.exp(-4.0))
    assert value[1] == 0


def test_restrict_radial_data_in_two_dimensions():
    prof = restrict(default_initial_data(2))
    xi = 1.3
    g = np.exp(-8 * (xi - 1) ** 2) * np.exp(-(xi**2) / 32)
    q = np.array([[1.0, 0.0], [0.6, 0.8]])
    vals = prof.spectrum_at(np.full(2, xi), q=q)
    assert np.allclose(np.abs(vals), (xi / (2 * np.pi)) ** 0.5 * g, rtol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_regularized_restriction(d):
    u0 = default_initial_data(d)
    reg = Regularizer(0.25, d)
    plain, smooth = restrict(u0), restrict_regularized(u0, reg)
    xi = plain.xi_grid.nodes
    assert np.array_equal(plain.spectra[:, xi >= 0.25], smooth.spectra[:, xi >= 0.25])
    assert np.all(smooth.spectra[:, xi <= 0] == 0)
    bound = (2 * np.pi) ** (-(d - 1) / 2) * _data_norm(d)
    assert smooth.spectral_norm() <= bound * (1 + 1e-9)


def _data_norm(d):
    from scipy.integrate import quad
    f = lambda r: r ** (d - 1) * np.exp(-16 * (r - 1) ** 2) * np.exp(-(r**2) / 16)
    return np.sqrt(sphere_area(d) * quad(f, 0, 4, epsabs=1e-14, epsrel=1e-13)[0])


def test_restrict_refuses_unevaluable_data():
    grid = GridD.cube(1, -2.0, 2.0, 41)
    field = FourierField(grid, np.exp(-grid.mesh()[..., 0] ** 2).astype(complex))
    with pytest.raises(DomainError):
        restrict(field)


def test_tabulated_data_round_trip(tmp_path):
    axis = np.linspace(-4.5, 4.5, 19)
    kx, ky = np.meshgrid(axis, axis, indexing="ij")
    val = np.exp(-(kx**2 + ky**2)) * (np.hypot(kx, ky) <= 4.0)
    path = tmp_path / "u0.csv"
    rows = ["k1,k2,re,im"] + [f"{a},{b},{v},{-v}" for a, b, v in
                             zip(kx.ravel(), ky.ravel(), val.ravel())]
    path.write_text("\n".join(rows[::-1][:-1] + [rows[0]][:0]) + "\n")
    field = load_tabulated(path, 2, support_radius=4.0)
    assert field.evaluate(np.array([[0.5, 0.0]]))[0] == pytest.approx(
        np.exp(-0.25) * (1 - 1j), rel=2e-2)
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0,1,0\n1,0,1\n")
    with pytest.raises(ConfigurationError):
        load_tabulated(bad, 2)


@pytest.mark.parametrize("spec", [DispersionSpec.zero(), DispersionSpec.cubic(0.5),
                                  DispersionSpec.full_sqrt()])
def test_evolution_is_an_isometry(spec):
    prof = restrict(default_initial_data(2))
    out = evolve(prof, spec, 3.7)
    assert np.array_equal(np.abs(out.spectra) == np.abs(prof.spectra),
                          np.ones_like(prof.spectra, dtype=bool)) or \
        np.max(np.abs(np.abs(out.spectra) - np.abs(prof.spectra))) <= 4 * np.finfo(float).eps
    if spec.effective_b3 == 0:
        assert np.array_equal(out.spectra, prof.spectra)
    assert out.tau == pytest.approx(3.7)


def test_cubic_evolution_solves_linear_kdv():
    z = Grid1D.periodic(-64.0, 64.0, 2048)
    b3, tau, dt = 0.5, 1.0, 1e-3
    prof = restrict(gaussian_data(1, width=1.5), z_grid=z)
    spec = DispersionSpec.cubic(b3)
    vm = evolve(prof, spec, tau - dt).physical()[0]
    vp = evolve(prof, spec, tau + dt).physical()[0]
    v = evolve(prof, spec, tau).physical()[0]
    h = z.spacing
    dtv = (vp - vm) / (2 * dt)
    d3 = (np.roll(v, -2) - 2 * np.roll(v, -1) + 2 * np.roll(v, 1) - np.roll(v, 2)) / (2 * h**3)
    # second-order differences: residual O(h^2 + dt^2) relative to the signal
    assert np.max(np.abs(dtv - b3 * d3)) < 1e-2 * np.max(np.abs(dtv))
    assert np.max(np.abs(dtv)) > 1e-3


def test_shell_step_profile_example():
    z = Grid1D.periodic(-8.0, 8.0, 1024)
    quad = SphereQuadrature.build(1)
    step = np.where(np.abs(z.nodes) < 1, 1.0, 0.0)
    prof = _profile_from_physical(z, quad, np.stack([step, np.zeros_like(step)]), tau=5.0)
    sv = shell(prof, 1.0, 1.0, 5.0)
    x = np.array([[5.0], [5.5], [3.5], [-5.0], [15.0], [10.5]])
    vals = sv(x)
    assert np.allclose(vals.real[[0, 1]], 1.0, atol=1e-9)
    assert np.allclose(vals[2:], 0.0, atol=1e-9)


def _profile_from_physical(z, quad, v, tau):
    """Profile whose physical samples equal ``v``; bypasses the xi < 0 check on purpose."""
    from profilewave.spectral import forward_transform_1
    spectra = forward_transform_1(v, z)
    prof = ProfileFamily.__new__(ProfileFamily)
    object.__setattr__(prof, "z_grid", z)
    object.__setattr__(prof, "directions", quad)
    object.__setattr__(prof, "spectra", spectra)
    object.__setattr__(prof, "tau", tau)
    object.__setattr__(prof, "spectrum_fn", None)
    object.__setattr__(prof, "_physical", [np.asarray(v, dtype=complex)])
    return prof


@pytest.mark.parametrize("d", [1, 2, 3])
def test_shell_support_and_degenerate_point(d):
    field = reconstruct(default_initial_data(d), DispersionSpec.zero(), Regularizer(0.25, d),
                        1.0, 0.5, 8.0)
    pts = np.zeros((4, d))
    pts[1, 0] = 16.0
    pts[2, 0] = 24.0
    pts[3, 0] = 8.2
    vals, degenerate = field.evaluate(pts)
    assert degenerate.tolist() == [True, False, False, False]
    assert vals[0] == 0 and vals[1] == 0 and vals[2] == 0
    assert vals[3] != 0


def test_shell_requires_matching_time():
    prof = profile_at(default_initial_data(1), DispersionSpec.zero(), 1.0)
    with pytest.raises(ConfigurationError):
        shell(prof, 1.0, 0.1, 50.0)
    with pytest.raises(ValueError):
        shell(prof, 1.0, 0.1, 0.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_reconstruct_matches_stepwise_composition(d):
    u0 = default_initial_data(d)
    spec = DispersionSpec.cubic(0.5)
    reg = Regularizer(0.25, d)
    eps, t = 0.5, 6.0
    direct = reconstruct(u0, spec, reg, 1.0, eps, t)
    stepwise = shell(evolve(restrict_regularized(u0, reg), spec, eps**2 * t), 1.0, eps, t)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, d)) * 4 + 6.0 / np.sqrt(d)
    assert np.array_equal(direct(x), stepwise(x))
    manual_v = inverse_transform_1(stepwise.profile.spectra, stepwise.profile.xi_grid,
                                   stepwise.profile.z_grid)
    assert np.array_equal(manual_v, direct.profile.physical())


@pytest.mark.parametrize("alpha", [2.0, -0.5 + 1.5j])
def test_reconstruct_is_linear(alpha):
    u0 = default_initial_data(2)
    scaled = FourierField(u0.grid, alpha * u0.values, closure=lambda k: alpha * u0.evaluate(k),
                          support_radius=u0.support_radius)
    reg = Regularizer(0.25, 2)
    x = np.array([[9.0, 1.0], [7.5, -3.0], [0.0, 10.0]])
    a = reconstruct(scaled, DispersionSpec.zero(), reg, 1.0, 0.4, 60.0)(x)
    b = reconstruct(u0, DispersionSpec.zero(), reg, 1.0, 0.4, 60.0)(x)
    assert np.allclose(a, alpha * b, rtol=1e-13, atol=1e-16)
