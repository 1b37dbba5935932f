"""Initial data: the concentrating low-energy family and smooth test data.

The family superimposes on base data (u0, v0, w0) a rescaled mollifier
phi(r / eta):

    u_eta = u0 + (ln 1/eta)^(2 gamma) eta^(-n/2 - 2) phi(r / eta)
    v_eta = v0 + (ln 1/eta)^(-gamma)  eta^(2 - n/2)  phi(r / eta)
    w_eta = w0 + (ln 1/eta)^(-gamma)  eta^(2 - n/2)  phi(r / eta)

so that int u_eta v_eta - int u0 v0 grows like (ln 1/eta)^gamma ||phi||^2
while the other energy terms stay comparatively small, driving the energy
to -infinity as eta -> 0.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from cachetools import LRUCache, cached

from ..exceptions import InitialDataError, UnderresolvedEta
from ..models.state import ModelParams, SolutionState
from .discretization import (
    RadialField,
    RadialGrid,
    dirichlet_energy,
    integrate,
    laplacian,
)
from .functionals import FunctionalConfig, cross_term, energy
from .oracles import FINE_CELLS, fine_quadrature

logger = logging.getLogger(__name__)

MIN_CELLS_IN_ETA = 32
FAMILY_COLUMNS = ("eta", "F", "cross_uv", "L1_dist_u", "W22_dist_v")

FieldTriple = Tuple[RadialField, RadialField, RadialField]


def _bump_parts(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.asarray(r, dtype=np.float64)
    inside = r < 1.0
    s = np.where(inside, 1.0 - r * r, 1.0)
    profile = np.where(inside, np.exp(-1.0 / s), 0.0)
    return r, s, profile


def mollifier_profile(r: np.ndarray) -> np.ndarray:
    """Unnormalised bump exp(-1/(1 - r^2)) on r < 1, zero elsewhere."""
    return _bump_parts(r)[2]


def mollifier_radial_derivative(r: np.ndarray) -> np.ndarray:
    """d/dr of ``mollifier_profile``."""
    r, s, p = _bump_parts(r)
    return p * (-2.0 * r / s ** 2)


def mollifier_laplacian(r: np.ndarray, dim: int) -> np.ndarray:
    """Radial Laplacian p'' + (n-1)/r p' of ``mollifier_profile``, regular at r = 0."""
    r, s, p = _bump_parts(r)
    second = p * ((2.0 * r / s ** 2) ** 2 - 2.0 / s ** 2 - 8.0 * r * r / s ** 3)
    first_over_r = p * (-2.0 / s ** 2)
    return second + (dim - 1) * first_over_r


@cached(cache=LRUCache(maxsize=32))
def mollifier_normalization(dim: int, cells: int = FINE_CELLS) -> float:
    """Constant c with int_{R^n} c * profile = 1 (fine quadrature, cached per dim)."""
    value = 1.0 / fine_quadrature(mollifier_profile, dim, 1.0, cells)
    logger.debug("Computed mollifier normalization", extra={"dim": dim, "normalization": value})
    return value


@dataclass(frozen=True)
class MollifierSpec:
    """Normalised mollifier phi = normalization * profile in R^dim."""
    dim: int
    normalization: float

    @classmethod
    def for_dim(cls, dim: int) -> "MollifierSpec":
        return cls(dim=dim, normalization=mollifier_normalization(dim))

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self.normalization * mollifier_profile(r)


def mollifier(grid: RadialGrid, scale: float = 1.0) -> RadialField:
    """Samples of phi(r / scale) on the grid."""
    spec = MollifierSpec.for_dim(grid.dim)
    return RadialField(spec(grid.centers / scale), grid)


def eta_star(radius: float) -> float:
    return min(0.5, radius)


@dataclass(frozen=True)
class FamilyParams:
    """
    Parameters of the concentrating family.

    ``base`` is the (u0, v0, w0) triple the spike is added to; None means
    zero data. ``eta`` may be left unset when a whole ladder is evaluated.
    """
    gamma: float = 1.0
    eta: Optional[float] = None
    base: Optional[FieldTriple] = field(default=None, repr=False)


def check_eta(grid: RadialGrid, eta: float, gamma: float = 1.0) -> None:
    """
    Validate (eta, gamma) against the grid.

    Raises:
        InitialDataError: eta outside (0, eta*) or gamma <= 0
        UnderresolvedEta: fewer than 32 cell centers inside B_eta
    """
    limit = eta_star(grid.radius)
    if not gamma > 0:
        raise InitialDataError("gamma must be positive", details={"gamma": gamma})
    if not 0.0 < eta < limit:
        raise InitialDataError(
            "eta must lie in (0, eta*)",
            details={"eta": eta, "eta_star": limit}
        )
    inside = grid.cells_inside(eta)
    if inside < MIN_CELLS_IN_ETA:
        raise UnderresolvedEta(
            f"Need at least {MIN_CELLS_IN_ETA} cells inside B_eta",
            details={
                "eta": eta,
                "cells_inside": inside,
                "cells_required": int(math.ceil(MIN_CELLS_IN_ETA * grid.radius / eta)),
            }
        )


def _zero_base(grid: RadialGrid) -> FieldTriple:
    zero = RadialField(np.zeros(grid.cells), grid)
    return zero, zero, zero


def _family_amplitudes(dim: int, gamma: float, eta: float) -> Tuple[float, float]:
    log_inv = math.log(1.0 / eta)
    amp_u = log_inv ** (2.0 * gamma) * eta ** (-dim / 2.0 - 2.0)
    amp_vw = log_inv ** (-gamma) * eta ** (2.0 - dim / 2.0)
    return amp_u, amp_vw


def synth_family(grid: RadialGrid, params: FamilyParams) -> FieldTriple:
    """
    Sample (u_eta, v_eta, w_eta) on the grid.

    Raises:
        InitialDataError: eta unset, outside (0, eta*) or gamma <= 0
        UnderresolvedEta: B_eta holds fewer than 32 cells
    """
    if params.eta is None:
        raise InitialDataError("eta is required to synthesize the family")
    check_eta(grid, params.eta, params.gamma)
    u0, v0, w0 = params.base if params.base is not None else _zero_base(grid)

    spike = mollifier(grid, scale=params.eta).values
    amp_u, amp_vw = _family_amplitudes(grid.dim, params.gamma, params.eta)
    return (
        RadialField(u0.values + amp_u * spike, grid),
        RadialField(v0.values + amp_vw * spike, grid),
        RadialField(w0.values + amp_vw * spike, grid),
    )


def perturbed_constants(grid: RadialGrid, levels: Tuple[float, float, float] = (1.0, 1.0, 1.0),
                        amplitude: float = 0.0) -> FieldTriple:
    """Constant levels plus amplitude * cos(pi r / R), which has zero slope at 0 and R."""
    bump = amplitude * np.cos(np.pi * grid.centers / grid.radius)
    u0, v0, w0 = levels
    return (
        RadialField(u0 + bump, grid),
        RadialField(v0 + bump, grid),
        RadialField(w0 + bump, grid),
    )


def w22_norm(grid: RadialGrid, f: RadialField) -> float:
    """Discrete (int f^2 + int |grad f|^2 + int (Delta f)^2)^(1/2)."""
    lap = laplacian(grid, f).values
    total = integrate(grid, f.values ** 2) + dirichlet_energy(grid, f) + integrate(grid, lap ** 2)
    return math.sqrt(total)


@dataclass(frozen=True)
class FamilyRow:
    eta: float
    F: float
    cross_uv: float
    L1_dist_u: float
    W22_dist_v: float
    noncross: float

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.eta, self.F, self.cross_uv, self.L1_dist_u, self.W22_dist_v)


@dataclass
class FamilyTable:
    rows: List[FamilyRow] = field(default_factory=list)

    @property
    def tail_start(self) -> Optional[int]:
        """First index from which F decreases strictly to the end of the ladder."""
        if not self.rows:
            return None
        start = len(self.rows) - 1
        while start > 0 and self.rows[start - 1].F > self.rows[start].F:
            start -= 1
        return start

    @property
    def noncross_ratio_decreasing(self) -> bool:
        """Whether noncross / cross_uv decreases strictly along the ladder."""
        ratios = [row.noncross / row.cross_uv for row in self.rows]
        return all(a > b for a, b in zip(ratios, ratios[1:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.as_tuple() for row in self.rows], columns=list(FAMILY_COLUMNS))


def energy_divergence_table(grid: RadialGrid, params: FamilyParams,
                            etas: Sequence[float]) -> FamilyTable:
    """
    Evaluate the family along a decreasing eta ladder.

    Every row uses the tau = eps = 1 energy. ``params.eta`` is ignored.

    Raises:
        InitialDataError: Ladder not strictly decreasing or outside (0, eta*)
        UnderresolvedEta: The grid cannot resolve some eta
    """
    ladder = [float(eta) for eta in etas]
    if any(a <= b for a, b in zip(ladder, ladder[1:])):
        raise InitialDataError("eta ladder must be strictly decreasing", details={"etas": ladder})
    for eta in ladder:
        check_eta(grid, eta, params.gamma)

    model = ModelParams(dim=grid.dim, radius=grid.radius, tau=1, eps=1)
    functional_cfg = FunctionalConfig(general_tau=1, general_eps=1)
    base = params.base if params.base is not None else _zero_base(grid)
    table = FamilyTable()

    for eta in ladder:
        u, v, w = synth_family(grid, FamilyParams(gamma=params.gamma, eta=eta, base=base))
        state = SolutionState(u=u, v=v, w=w)
        F = energy(model, functional_cfg, state)
        cross = cross_term(state)
        l1 = integrate(grid, np.abs(u.values - base[0].values))
        w22 = w22_norm(grid, RadialField(v.values - base[1].values, grid))
        table.rows.append(FamilyRow(eta=eta, F=F, cross_uv=cross, L1_dist_u=l1,
                                    W22_dist_v=w22, noncross=F + cross))
        logger.debug("Family row", extra={"eta": eta, "F": F, "cross_uv": cross})

    if table.rows and table.tail_start not in (None, 0):
        logger.info(
            "Energy is not monotone over the whole ladder",
            extra={"tail_start": table.tail_start, "rows": len(table.rows)}
        )
    return table
