"""Cell-centered finite-volume discretization of a ball B_R in R^n.

All fields are radial and sampled at cell centers r_i = (i + 1/2) h. No node
sits at the origin: the symmetry condition f_r(0) = 0 is the zero-flux
condition on the innermost face, and the Neumann condition at r = R is the
zero-flux condition on the outermost face.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solveh_banded

from ..exceptions import ConfigurationError, GridMismatchError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MIN_CELLS = 16


def _gamma_half_integer(x2: int) -> float:
    """Gamma(x2 / 2) for a positive integer x2 via Gamma(x+1) = x Gamma(x)."""
    if x2 % 2 == 0:
        value = 1.0  # Gamma(1)
        k = 2
    else:
        value = math.sqrt(math.pi)  # Gamma(1/2)
        k = 1
    while k < x2:
        value *= k / 2.0
        k += 2
    return value


def unit_sphere_area(dim: int) -> float:
    """Surface area omega_n = 2 pi^(n/2) / Gamma(n/2) of the unit sphere in R^n."""
    if dim < 1:
        raise ConfigurationError("dim must be positive", details={"dim": dim})
    return 2.0 * math.pi ** (dim / 2.0) / _gamma_half_integer(dim)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """
    Uniform radial grid on [0, R] with n-dimensional quadrature.

    ``quad_weights`` are the exact shell volumes
    omega_n (r_{i+1/2}^n - r_{i-1/2}^n) / n, so they sum to |B_R| and
    the discrete Laplacian reproduces Delta r^2 = 2n cellwise.
    """
    dim: int
    radius: float
    cells: int
    h: float
    omega: float
    centers: FloatArray = field(repr=False)
    faces: FloatArray = field(repr=False)
    quad_weights: FloatArray = field(repr=False)
    face_areas: FloatArray = field(repr=False)
    conductance: FloatArray = field(repr=False)

    @property
    def volume(self) -> float:
        """Closed-form |B_R| = omega_n R^n / n."""
        return self.omega * self.radius ** self.dim / self.dim

    def matches(self, other: "RadialGrid") -> bool:
        """True when both grids describe the same discretization."""
        return self is other or (
            self.dim == other.dim
            and self.cells == other.cells
            and self.radius == other.radius
        )

    def cells_inside(self, radius: float) -> int:
        """Number of cell centers strictly inside B_radius."""
        return int(np.count_nonzero(self.centers < radius))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Cell-center samples of a radial function on a grid."""
    values: FloatArray
    grid: RadialGrid = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.cells,):
            raise GridMismatchError(
                "Field length does not match grid",
                details={"length": int(values.size), "cells": self.grid.cells}
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise GridMismatchError(
                "Field contains non-finite values",
                details={"index": bad, "value": float(values[bad])}
            )
        object.__setattr__(self, "values", values)

    def with_values(self, values: FloatArray) -> "RadialField":
        return RadialField(values, self.grid)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


FieldLike = Union[RadialField, FloatArray]


def build_grid(dim: int, radius: float, cells: int) -> RadialGrid:
    """
    Build the radial grid for B_radius in R^dim.

    Args:
        dim: Spatial dimension n >= 2
        radius: Ball radius R > 0
        cells: Number of cells N >= 16

    Returns:
        RadialGrid with centers, faces, shell volumes and face areas

    Raises:
        ConfigurationError: If any argument is out of range
    """
    if dim < 2:
        raise ConfigurationError("dim must be at least 2", details={"dim": dim})
    if not radius > 0:
        raise ConfigurationError("radius must be positive", details={"radius": radius})
    if cells < MIN_CELLS:
        raise ConfigurationError(
            f"cells must be at least {MIN_CELLS}",
            details={"cells": cells}
        )

    h = radius / cells
    omega = unit_sphere_area(dim)
    faces = np.arange(cells + 1, dtype=np.float64) * h
    faces[-1] = radius
    centers = (np.arange(cells, dtype=np.float64) + 0.5) * h
    shells = faces ** dim
    quad_weights = omega * np.diff(shells) / dim
    face_areas = omega * faces ** (dim - 1)
    conductance = face_areas / h
    conductance[0] = 0.0
    conductance[-1] = 0.0

    logger.debug(
        "Built radial grid",
        extra={"dim": dim, "radius": radius, "cells": cells, "h": h}
    )
    return RadialGrid(
        dim=dim, radius=float(radius), cells=cells, h=h, omega=omega,
        centers=centers, faces=faces, quad_weights=quad_weights,
        face_areas=face_areas, conductance=conductance,
    )


def _values(grid: RadialGrid, f: FieldLike) -> FloatArray:
    if isinstance(f, RadialField):
        if not f.grid.matches(grid):
            raise GridMismatchError(
                "Field lives on a different grid",
                details={"field_cells": f.grid.cells, "grid_cells": grid.cells}
            )
        return f.values
    return np.asarray(f, dtype=np.float64)


def integrate(grid: RadialGrid, f: FieldLike) -> float:
    """Quadrature of f over B_R: sum_i f_i V_i."""
    return float(np.dot(_values(grid, f), grid.quad_weights))


def face_gradient(grid: RadialGrid, f: FieldLike) -> FloatArray:
    """Radial derivative at the N+1 faces; zero on the two boundary faces."""
    values = _values(grid, f)
    grad = np.zeros(grid.cells + 1)
    grad[1:-1] = np.diff(values) / grid.h
    return grad


def _flux_divergence(grid: RadialGrid, flux: FloatArray) -> FloatArray:
    # flux holds area-weighted face fluxes, flux[0] = flux[-1] = 0
    return np.diff(flux) / grid.quad_weights


def laplacian(grid: RadialGrid, f: FieldLike) -> RadialField:
    """Conservative finite-volume Laplacian with no-flux faces at 0 and R."""
    values = _values(grid, f)
    flux = np.zeros(grid.cells + 1)
    flux[1:-1] = grid.conductance[1:-1] * np.diff(values)
    return RadialField(_flux_divergence(grid, flux), grid)


def chemotactic_fluxes(grid: RadialGrid, u: FieldLike, v: FieldLike) -> FloatArray:
    """Area-weighted upwind face fluxes A u_up v_r (zero at both boundary faces)."""
    u_vals = _values(grid, u)
    grad = face_gradient(grid, v)
    inner = grad[1:-1]
    upwind = np.where(inner >= 0.0, u_vals[:-1], u_vals[1:])
    flux = np.zeros(grid.cells + 1)
    flux[1:-1] = grid.face_areas[1:-1] * upwind * inner
    return flux


def chemotactic_divergence(grid: RadialGrid, u: FieldLike, v: FieldLike) -> RadialField:
    """Conservative upwind discretization of div(u grad v)."""
    return RadialField(_flux_divergence(grid, chemotactic_fluxes(grid, u, v)), grid)


def outflow_rates(grid: RadialGrid, v: FieldLike) -> FloatArray:
    """Per-cell outgoing advective capacity sum_faces A |v_r| / V.

    A cell with rate q empties in one explicit upwind step iff dt q > 1.
    """
    grad = face_gradient(grid, v)
    area_grad = grid.face_areas * grad
    outward = np.maximum(area_grad[1:], 0.0)
    inward = np.maximum(-area_grad[:-1], 0.0)
    return (outward + inward) / grid.quad_weights


def radial_derivative(grid: RadialGrid, f: FieldLike) -> RadialField:
    """Cell-center radial derivative.

    Centered in the interior, second-order one-sided in the two extreme cells.
    The innermost value is blended with weight 1/N toward the linear
    interpolant between f_r(0) = 0 and the slope on the first interior face;
    both parts are exact for r^2.
    """
    values = _values(grid, f)
    h = grid.h
    deriv = np.empty(grid.cells)
    deriv[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    one_sided = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    symmetric = (values[1] - values[0]) / h * (grid.centers[0] / grid.faces[1])
    origin_weight = 1.0 / grid.cells
    deriv[0] = (1.0 - origin_weight) * one_sided + origin_weight * symmetric
    deriv[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return RadialField(deriv, grid)


def dirichlet_energy(grid: RadialGrid, f: FieldLike) -> float:
    """Discrete integral of |grad f|^2 over faces.

    Satisfies -integrate(f * laplacian(f)) == dirichlet_energy(f) exactly.
    """
    values = _values(grid, f)
    return float(np.dot(grid.conductance[1:-1], np.diff(values) ** 2))


def solve_implicit(grid: RadialGrid, rhs: FieldLike, dt: float,
                   diffusion: float = 1.0, decay: float = 0.0,
                   increment: bool = False) -> FloatArray:
    """Solve (I - dt (diffusion * Laplacian - decay)) x = rhs.

    Multiplied through by the cell volumes the matrix is symmetric positive
    definite and tridiagonal; it is handed to ``solveh_banded``. With
    ``increment`` the unknown is x - rhs, so a conservative operator leaves
    the integral of rhs untouched to roundoff.
    """
    b = _values(grid, rhs)
    weights = grid.quad_weights
    coupling = dt * diffusion * grid.conductance
    diagonal = weights * (1.0 + dt * decay) + coupling[:-1] + coupling[1:]

    banded = np.zeros((2, grid.cells))
    banded[0, 1:] = -coupling[1:-1]
    banded[1] = diagonal

    if not increment:
        return np.asarray(solveh_banded(banded, weights * b, check_finite=False))

    flux = np.zeros(grid.cells + 1)
    flux[1:-1] = coupling[1:-1] * np.diff(b)
    residual = np.diff(flux) - dt * decay * weights * b
    delta = solveh_banded(banded, residual, check_finite=False)
    return b + delta
