"""Grid geometry, quadrature, and spectral-derivative behavior."""

import numpy as np
import pytest

from nlslab import GridError, GridSpec, WaveField, l2_mass
from nlslab.grids import grad_norm_sq, gradient, integrate, laplacian


@pytest.mark.parametrize("dim", [1, 2])
def test_spacing_volume_shape(dim):
    grid = GridSpec(dim, 64, 8.0)
    assert grid.spacing == 0.25
    assert grid.cell_volume == 0.25 ** dim
    assert grid.shape == (64,) * dim
    ax = grid.axis()
    assert ax[0] == -8.0
    assert ax[-1] == 8.0 - 0.25


@pytest.mark.parametrize("bad_points", [0, 3, 48, 1000])
def test_points_must_be_power_of_two(bad_points):
    with pytest.raises(GridError):
        GridSpec(1, bad_points, 8.0)


def test_dim_and_width_validation():
    with pytest.raises(GridError):
        GridSpec(0, 64, 8.0)
    with pytest.raises(GridError):
        GridSpec(1, 64, 0.0)


def test_gradient_exact_on_plane_wave():
    grid = GridSpec(1, 256, np.pi)
    x = grid.axis()
    k = 3.0  # integer multiple of pi / half_width, so exactly representable
    vals = np.exp(1j * k * x)
    (g,) = gradient(grid, vals)
    assert np.max(np.abs(g - 1j * k * vals)) < 1e-12


def test_laplacian_on_gaussian():
    grid = GridSpec(2, 64, 6.0)
    r2 = grid.radius_sq()
    vals = np.exp(-r2).astype(complex)
    exact = (4.0 * r2 - 4.0) * vals
    assert np.max(np.abs(laplacian(grid, vals) - exact)) < 1e-9


def test_integrate_gaussian():
    grid = GridSpec(1, 512, 16.0)
    vals = np.exp(-grid.radius_sq())
    assert integrate(grid, vals) == pytest.approx(np.sqrt(np.pi), abs=1e-12)


def test_radius_sq_with_center():
    grid = GridSpec(2, 32, 4.0)
    r2 = grid.radius_sq(center=[1.0, -0.5])
    i, j = np.unravel_index(np.argmin(r2), r2.shape)
    ax = grid.axis()
    assert abs(ax[i] - 1.0) <= grid.spacing / 2
    assert abs(ax[j] + 0.5) <= grid.spacing / 2


def test_wavenumber_sq_matches_wavenumbers():
    grid = GridSpec(2, 32, 4.0)
    ks = grid.wavenumbers()
    total = sum(np.broadcast_to(k ** 2, grid.shape) for k in ks)
    assert np.array_equal(grid.wavenumber_sq(), total)


def test_wavefield_shape_validation_and_copy():
    grid = GridSpec(1, 64, 4.0)
    with pytest.raises(GridError):
        WaveField(grid, np.zeros(32, dtype=complex))
    u = WaveField(grid, np.ones(64, dtype=complex))
    v = u.copy()
    v.values[0] = 5.0
    assert u.values[0] == 1.0


def test_l2_mass_scaling_factor():
    grid = GridSpec(1, 64, 4.0)
    u = WaveField(grid, np.ones(64, dtype=complex))
    assert l2_mass(u, 0.5) == pytest.approx(2.0 * l2_mass(u))


def test_grad_norm_sq_matches_gradient(rng):
    grid = GridSpec(1, 128, 4.0)
    vals = rng.standard_normal(128) + 1j * rng.standard_normal(128)
    (g,) = gradient(grid, vals)
    assert np.allclose(grad_norm_sq(grid, vals), np.abs(g) ** 2, atol=1e-10)
