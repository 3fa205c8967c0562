import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from profilewave import (ConfigurationError, DomainError, FourierField, Grid1D, GridD,
                         forward_transform_1, forward_transform_d, inverse_transform_1,
                         inverse_transform_d)


def test_grid_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        Grid1D(0.0, 1.0, 1)
    with pytest.raises(ConfigurationError):
        Grid1D(1.0, 0.0, 8)
    with pytest.raises(ConfigurationError):
        Grid1D.from_nodes([0.0, 1.0, 3.0])


@pytest.mark.parametrize("n", [8, 9, 64, 101])
def test_dual_grid_is_centred_and_reciprocal(n):
    g = Grid1D.periodic(-3.0, 5.0, n)
    dual = g.dual()
    assert dual.spacing == pytest.approx(2 * np.pi / (n * g.spacing))
    assert dual.nodes[n // 2] == pytest.approx(0.0, abs=1e-12)
    assert dual.is_dual_of(g)
    assert not Grid1D.periodic(-3.0, 5.0, n + 2).dual().is_dual_of(g)


@pytest.mark.parametrize("width", [0.5, 1.0, 3.0])
def test_forward_transform_of_gaussian(width):
    g = Grid1D.periodic(-40.0, 40.0, 2048)
    z = g.nodes
    spec = forward_transform_1(np.exp(-z**2 / width**2), g)
    xi = g.dual().nodes
    exact = np.sqrt(np.pi) * width * np.exp(-(width * xi) ** 2 / 4)
    assert np.max(np.abs(spec - exact)) < 1e-10


def test_shifted_bump_picks_up_phase():
    g = Grid1D.periodic(-40.0, 40.0, 1024)
    z, xi = g.nodes, g.dual().nodes
    spec = forward_transform_1(np.exp(-(z - 3.0) ** 2), g)
    exact = np.sqrt(np.pi) * np.exp(-xi**2 / 4) * np.exp(-3j * xi)
    assert np.max(np.abs(spec - exact)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)))
def test_round_trip_and_parseval(re, im):
    g = Grid1D.periodic(-7.0, 9.0, 64)
    v = re + 1j * im
    spec = forward_transform_1(v, g)
    back = inverse_transform_1(spec, g.dual(), g)
    scale = 1.0 + np.max(np.abs(v))
    assert np.max(np.abs(back - v)) < 1e-12 * scale
    lhs = np.sum(np.abs(v) ** 2) * g.spacing
    rhs = np.sum(np.abs(spec) ** 2) * g.dual().spacing / (2 * np.pi)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_inverse_rejects_mismatched_grids():
    g = Grid1D.periodic(-8.0, 8.0, 64)
    with pytest.raises(ConfigurationError):
        inverse_transform_1(np.zeros(64), Grid1D.periodic(-1.0, 1.0, 64), g)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_transform_d_gaussian(d):
    n = {1: 256, 2: 128, 3: 64}[d]
    half = {1: 12.0, 2: 12.0, 3: 8.0}[d]
    grid = GridD.cube(d, -half, half, n)
    x = grid.mesh()
    field = forward_transform_d(np.exp(-np.sum(x**2, axis=-1)), grid)
    k = field.grid.mesh()
    exact = np.pi ** (d / 2) * np.exp(-np.sum(k**2, axis=-1) / 4)
    assert np.max(np.abs(field.values - exact)) < 1e-9
    back = inverse_transform_d(field, grid)
    assert np.max(np.abs(back - np.exp(-np.sum(x**2, axis=-1)))) < 1e-12


def test_fourier_field_support_and_domain():
    grid = GridD.cube(2, -2.0, 2.0, 33)
    k = grid.mesh()
    r = np.linalg.norm(k, axis=-1)
    vals = np.where(r < 1.5, (1.5 - r) ** 4, 0.0)
    field = FourierField(grid, vals, support_radius=1.5)
    assert field.evaluate(np.array([[5.0, 0.0]]))[0] == 0
    assert abs(field.evaluate(np.array([[0.3, -0.2]]))[0]
               - (1.5 - np.hypot(0.3, 0.2)) ** 4) < 1e-3
    with pytest.raises(ValueError):
        FourierField(grid, np.ones(grid.shape), support_radius=1.0)
    open_field = FourierField(grid, vals)
    with pytest.raises(DomainError):
        open_field.evaluate(np.array([[3.0, 0.0]]))


def test_closure_takes_precedence():
    grid = GridD.cube(1, -1.0, 1.0, 16)
    fn = lambda k: np.exp(-k[..., 0] ** 2).astype(complex)
    field = FourierField(grid, fn(grid.mesh()), closure=fn)
    assert field.evaluable_radius == np.inf
    assert field.evaluate(np.array([[10.0]]))[0] == pytest.approx(np.exp(-100.0))
