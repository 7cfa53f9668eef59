"""Periodic tensor grids and spectral derivative helpers.

All fields live on a uniform periodic box [-L, L)^dim with the same number of
points along every axis.  Derivatives are computed in Fourier space, so every
field is implicitly assumed smooth and effectively supported away from the
boundary.
"""

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised for invalid grid parameters."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-half_width, half_width)^dim."""

    dim: int
    points: int          # per axis, power of two
    half_width: float

    def __post_init__(self):
        if self.dim < 1:
            raise GridError(f"dim must be >= 1, got {self.dim}")
        if not _is_power_of_two(self.points):
            raise GridError(f"points per axis must be a power of two, got {self.points}")
        if not (self.half_width > 0):
            raise GridError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    def axis(self) -> np.ndarray:
        """Sample points along one axis, -L, -L+dx, ..., L-dx."""
        return -self.half_width + self.spacing * np.arange(self.points)

    def coords(self) -> list:
        """Sparse broadcastable coordinate arrays, one per axis."""
        ax = self.axis()
        return [ax.reshape((1,) * i + (-1,) + (1,) * (self.dim - 1 - i))
                for i in range(self.dim)]

    def radius_sq(self, center=None) -> np.ndarray:
        """|x - center|^2 on the full grid (dense array)."""
        cs = self.coords()
        if center is None:
            center = np.zeros(self.dim)
        center = np.asarray(center, dtype=float)
        r2 = np.zeros(self.shape)
        for i, c in enumerate(cs):
            r2 = r2 + (c - center[i]) ** 2
        return r2

    def wavenumbers(self) -> list:
        """Sparse broadcastable angular wavenumber arrays, one per axis."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
        return [k.reshape((1,) * i + (-1,) + (1,) * (self.dim - 1 - i))
                for i in range(self.dim)]

    def wavenumber_sq(self) -> np.ndarray:
        ks = self.wavenumbers()
        k2 = np.zeros(self.shape)
        for k in ks:
            k2 = k2 + k ** 2
        return k2


@dataclass
class WaveField:
    """Complex field sampled on a GridSpec."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy())


def integrate(grid: GridSpec, samples: np.ndarray) -> float:
    """Rectangle-rule quadrature, spectrally accurate for smooth periodic data."""
    return float(np.sum(samples).real) * grid.cell_volume


def gradient(grid: GridSpec, values: np.ndarray) -> list:
    """Spectral gradient, one complex array per axis."""
    vhat = np.fft.fftn(values)
    return [np.fft.ifftn(1j * k * vhat) for k in grid.wavenumbers()]


def laplacian(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    vhat = np.fft.fftn(values)
    return np.fft.ifftn(-grid.wavenumber_sq() * vhat)


def grad_norm_sq(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """|grad u|^2 pointwise."""
    out = np.zeros(grid.shape)
    for g in gradient(grid, values):
        out += np.abs(g) ** 2
    return out


def l2_mass(u: WaveField, eps: float = 1.0) -> float:
    """eps^{-dim} * int |u|^2 dx."""
    return integrate(u.grid, np.abs(u.values) ** 2) / eps ** u.grid.dim
