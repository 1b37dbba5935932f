"""Lyapunov energy, dissipation rate and the remaining per-step diagnostics."""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Optional, Tuple

import numpy as np
from scipy.special import xlogy

from ..exceptions import ConfigurationError
from ..models.records import EnergyRecord
from ..models.state import DEFAULT_U_FLOOR, ModelParams, SolutionState
from .discretization import (
    RadialGrid,
    dirichlet_energy,
    integrate,
    laplacian,
    radial_derivative,
)

if TYPE_CHECKING:
    from .blowup_monitor import PsiAccumulator

logger = logging.getLogger(__name__)

VACUUM_THRESHOLD = 1e-12
LOG_GRADIENT_CLAMP = 1e6


@dataclass(frozen=True)
class FunctionalConfig:
    """
    Diagnostics settings.

    Attributes:
        kappa: Weight exponent of the pointwise norms, must exceed dim - 2
            (None selects dim - 1)
        general_tau, general_eps: Variant (tau, eps) of the energy; None
            follows the model parameters
    """
    kappa: Optional[float] = None
    general_tau: Optional[int] = None
    general_eps: Optional[int] = None

    def resolve_kappa(self, dim: int) -> float:
        kappa = float(dim - 1) if self.kappa is None else float(self.kappa)
        if not kappa > dim - 2:
            raise ConfigurationError(
                "kappa must exceed dim-2",
                details={"kappa": kappa, "dim": dim}
            )
        return kappa

    def variant(self, params: ModelParams) -> Tuple[int, int]:
        tau = params.tau if self.general_tau is None else self.general_tau
        eps = params.eps if self.general_eps is None else self.general_eps
        return tau, eps


def entropy_integral(state: SolutionState, u_floor: float = DEFAULT_U_FLOOR) -> float:
    """Integral of u ln u with x ln x extended by 0 at x = 0."""
    u = state.u.values
    return integrate(state.grid, xlogy(u, np.maximum(u, u_floor)))


def entropy(params: ModelParams, state: SolutionState) -> float:
    return entropy_integral(state, params.u_floor)


def cross_term(state: SolutionState) -> float:
    """Integral of u v."""
    return integrate(state.grid, state.u.values * state.v.values)


def total_mass(state: SolutionState) -> float:
    """Integral of u + v + w."""
    return float(sum(state.masses()))


def _signal_residual(state: SolutionState) -> Tuple[np.ndarray, np.ndarray]:
    """Return (Delta v, f) with f = Delta v - v + w, the elliptic form of v_t."""
    lap_v = laplacian(state.grid, state.v).values
    return lap_v, lap_v - state.v.values + state.w.values


def energy(params: ModelParams, cfg: FunctionalConfig, state: SolutionState) -> float:
    """
    Lyapunov energy of the (tau, eps) variant.

    F = int u ln u - int u v + tau/2 int f^2 + 1/2 int (eps Delta v - v)(Delta v - v)
    with f = Delta v - v + w. For tau = eps = 1 this is
    int u ln u - int u v + 1/2 int f^2 + 1/2 int (Delta v - v)^2.
    """
    tau, eps = cfg.variant(params)
    grid = state.grid
    lap_v, f = _signal_residual(state)
    v = state.v.values
    value = entropy(params, state) - cross_term(state)
    value += 0.5 * tau * integrate(grid, f * f)
    value += 0.5 * integrate(grid, (eps * lap_v - v) * (lap_v - v))
    return value


def face_log_gradient(grid: RadialGrid, u: np.ndarray,
                      v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Interior-face mean of u and (ln u - v)_r.

    Where the face mean of u is at or below 1e-12, u_r / u is clamped to +-1e6.
    """
    u_face = 0.5 * (u[:-1] + u[1:])
    u_r = np.diff(u) / grid.h
    v_r = np.diff(v) / grid.h
    ratio = np.divide(u_r, u_face, out=np.zeros_like(u_r), where=u_face > 0.0)
    vacuum = u_face <= VACUUM_THRESHOLD
    ratio[vacuum] = np.clip(ratio[vacuum], -LOG_GRADIENT_CLAMP, LOG_GRADIENT_CLAMP)
    return u_face, ratio - v_r


def _log_gradient_term(grid: RadialGrid, u: np.ndarray, v: np.ndarray) -> float:
    u_face, g = face_log_gradient(grid, u, v)
    return float(np.dot(grid.face_areas[1:-1] * grid.h, u_face * g * g))


def dissipation(params: ModelParams, cfg: FunctionalConfig, state: SolutionState) -> float:
    """
    Dissipation rate of the (tau, eps) variant.

    D = int u |grad(ln u - v)|^2 + (tau + eps) int |grad f|^2 + (tau + 1) int f^2,
    i.e. 2 int (|grad f|^2 + f^2) + int g^2 for tau = eps = 1. Always >= 0.
    """
    tau, eps = cfg.variant(params)
    grid = state.grid
    _, f = _signal_residual(state)
    value = _log_gradient_term(grid, state.u.values, state.v.values)
    value += (tau + eps) * dirichlet_energy(grid, f)
    value += (tau + 1) * integrate(grid, f * f)
    return value


def weighted_norms(state: SolutionState, kappa: float) -> Tuple[float, float]:
    """Discrete ||r^kappa w||_inf and ||r^(kappa-1) v||_{W^{1,inf}} proxies."""
    grid = state.grid
    r = grid.centers
    weighted_w = float(np.max(r ** kappa * np.abs(state.w.values)))
    v_r = radial_derivative(grid, state.v).values
    weighted_v = float(np.max(r ** (kappa - 1.0) * (np.abs(state.v.values) + np.abs(v_r))))
    return weighted_w, weighted_v


def diagnostics_row(params: ModelParams, cfg: FunctionalConfig, state: SolutionState,
                    psi_accumulator: Optional["PsiAccumulator"] = None) -> EnergyRecord:
    """Fill every EnergyRecord field for the given state."""
    mass_u, mass_v, mass_w = state.masses()
    kappa = cfg.resolve_kappa(params.dim)
    weighted_w, weighted_v = weighted_norms(state, kappa)
    return EnergyRecord(
        t=state.t,
        dt=state.last_dt,
        mass_u=mass_u,
        mass_v=mass_v,
        mass_w=mass_w,
        sup_u=state.u.sup(),
        F=energy(params, cfg, state),
        D=dissipation(params, cfg, state),
        cross_uv=cross_term(state),
        entropy=entropy(params, state),
        weighted_w=weighted_w,
        weighted_v=weighted_v,
        psi=psi_accumulator.value if psi_accumulator is not None else 0.0,
    )


def admissible_set_norms(state: SolutionState) -> Dict[str, float]:
    """
    Norms that place initial data in the admissible set B(m, A).

    Returns int u, ||w||_{W^{1,2}} and a Laplacian-based ||v||_{W^{2,2}}.
    """
    grid = state.grid
    w = state.w.values
    v = state.v.values
    lap_v = laplacian(grid, v).values
    w_norm = np.sqrt(integrate(grid, w * w) + dirichlet_energy(grid, w))
    v_norm = np.sqrt(integrate(grid, v * v) + dirichlet_energy(grid, v) + integrate(grid, lap_v * lap_v))
    return {
        "mass_u": integrate(grid, state.u),
        "w_w12": float(w_norm),
        "v_w22": float(v_norm),
    }
