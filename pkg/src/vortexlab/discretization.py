"""Uniform grids, Laplacians, quadrature and the shifted-Poisson preconditioner.

Two grid kinds are supported.  Periodic cells sample the torus at corner
nodes x_i = i*hx (the periodic edge is not duplicated) and use the exact
spectral Laplacian.  Dirichlet squares include the boundary ring in the node
set; the 5-point stencil reads the stored boundary values, and operator
output is defined on interior nodes only (zero on the ring).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import GridMismatch, NonPositiveShift


class GridKind(enum.Enum):
    PERIODIC_CELL = "periodic_cell"
    DIRICHLET_SQUARE = "dirichlet_square"


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor grid; arrays over it are indexed [iy, ix], row-major."""

    nx: int
    ny: int
    x0: float
    y0: float
    hx: float
    hy: float
    kind: GridKind

    @staticmethod
    def periodic(l1: float, l2: float, nx: int, ny: int) -> "Grid2D":
        # power-of-two sizes keep the FFT path exact and fast
        if not (_is_power_of_two(nx) and _is_power_of_two(ny)):
            raise ValueError("periodic grids require power-of-two nx, ny")
        return Grid2D(nx, ny, 0.0, 0.0, l1 / nx, l2 / ny, GridKind.PERIODIC_CELL)

    @staticmethod
    def dirichlet(half_width: float, nx: int, ny: int) -> "Grid2D":
        if nx < 4 or ny < 4:
            raise ValueError("dirichlet grids need at least a 4x4 node set")
        h_x = 2.0 * half_width / (nx - 1)
        h_y = 2.0 * half_width / (ny - 1)
        return Grid2D(nx, ny, -half_width, -half_width, h_x, h_y, GridKind.DIRICHLET_SQUARE)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys)


@dataclass
class ScalarField:
    """Grid-sampled real function.  Values must be finite; treat as immutable."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in ScalarField")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def zeros_like(grid: Grid2D) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape))


def constant_field(grid: Grid2D, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)))


def require_same_grid(*fields: ScalarField) -> Grid2D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


# -- Laplacians ---------------------------------------------------------------

def _wavenumbers(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    kx = 2.0 * np.pi * np.fft.rfftfreq(grid.nx, d=grid.hx)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.ny, d=grid.hy)
    return kx, ky


def laplacian_values(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    """Laplacian on raw arrays; spectral on periodic cells, 5-point on squares."""
    if grid.kind is GridKind.PERIODIC_CELL:
        kx, ky = _wavenumbers(grid)
        spec = np.fft.rfft2(values)
        spec *= -(kx[None, :] ** 2 + ky[:, None] ** 2)
        return np.fft.irfft2(spec, s=grid.shape)
    out = np.zeros_like(values)
    out[1:-1, 1:-1] = (
        (values[1:-1, 2:] - 2.0 * values[1:-1, 1:-1] + values[1:-1, :-2]) / grid.hx**2
        + (values[2:, 1:-1] - 2.0 * values[1:-1, 1:-1] + values[:-2, 1:-1]) / grid.hy**2
    )
    return out


def apply_laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, laplacian_values(f.grid, f.values))


# -- Quadrature ---------------------------------------------------------------

def integrate_values(grid: Grid2D, values: np.ndarray) -> float:
    # np.sum is pairwise: fixed reduction order, bit-reproducible
    return float(grid.cell_area * np.sum(values))


def integrate(f: ScalarField) -> float:
    """Product-rule quadrature; exact trapezoid on both grid kinds."""
    return integrate_values(f.grid, f.values)


# -- Shifted-Poisson solve ----------------------------------------------------

def _dirichlet_eigenvalues(n_interior: int, h: float) -> np.ndarray:
    k = np.arange(1, n_interior + 1)
    return (4.0 / h**2) * np.sin(k * np.pi / (2.0 * (n_interior + 1))) ** 2


def solve_shifted_poisson(grid: Grid2D, rhs: np.ndarray, shift: float) -> np.ndarray:
    """Apply (shift*I - Laplacian)^{-1} to one raw array."""
    if shift <= 0:
        raise NonPositiveShift(f"shift must be positive, got {shift}")
    if grid.kind is GridKind.PERIODIC_CELL:
        kx, ky = _wavenumbers(grid)
        spec = np.fft.rfft2(rhs)
        spec /= shift + kx[None, :] ** 2 + ky[:, None] ** 2
        return np.fft.irfft2(spec, s=grid.shape)
    # homogeneous-Dirichlet 5-point operator diagonalizes in the sine basis
    interior = rhs[1:-1, 1:-1]
    lam_x = _dirichlet_eigenvalues(grid.nx - 2, grid.hx)
    lam_y = _dirichlet_eigenvalues(grid.ny - 2, grid.hy)
    spec = scipy.fft.dstn(interior, type=1)
    spec /= shift + lam_x[None, :] + lam_y[:, None]
    out = np.zeros_like(rhs)
    out[1:-1, 1:-1] = scipy.fft.idstn(spec, type=1)
    return out


def poisson_precondition(r1: ScalarField, r2: ScalarField, shift: float) -> tuple[ScalarField, ScalarField]:
    """Componentwise (shift*I - Laplacian)^{-1}, used to precondition Newton-CG."""
    grid = require_same_grid(r1, r2)
    return (
        ScalarField(grid, solve_shifted_poisson(grid, r1.values, shift)),
        ScalarField(grid, solve_shifted_poisson(grid, r2.values, shift)),
    )
