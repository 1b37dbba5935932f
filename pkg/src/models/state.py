"""Model parameters, the evolving solution triple and run verdicts."""

from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError, GridMismatchError, NegativeInitialData
from ..services.discretization import RadialField, RadialGrid, integrate

DEFAULT_U_FLOOR = 1e-300
INITIAL_DT_FACTOR = 0.1


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the indirect-signal chemotaxis system.

    ``tau`` and ``eps`` switch between the four variants: tau = 0 makes the
    w-equation elliptic, eps = 0 removes diffusion of w.
    """
    dim: int
    radius: float
    tau: int = 1
    eps: int = 1
    u_floor: float = DEFAULT_U_FLOOR

    def __post_init__(self) -> None:
        problems = []
        if self.dim < 2:
            problems.append("dim must be at least 2")
        if not self.radius > 0:
            problems.append("radius must be positive")
        if self.tau not in (0, 1):
            problems.append("tau must be 0 or 1")
        if self.eps not in (0, 1):
            problems.append("eps must be 0 or 1")
        if not self.u_floor > 0:
            problems.append("u_floor must be positive")
        if problems:
            raise ConfigurationError(
                "Invalid model parameters",
                details={"problems": problems, "params": asdict(self)}
            )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return asdict(self)


@dataclass(frozen=True)
class SolutionState:
    """
    The triple (u, v, w) at time t.

    ``dt`` is the trial step for the next advance; ``last_dt`` is the step
    that produced this state (0 for initial data).
    """
    u: RadialField
    v: RadialField
    w: RadialField
    t: float = 0.0
    dt: float = 0.0
    last_dt: float = 0.0

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    def masses(self) -> Tuple[float, float, float]:
        """Integrals of u, v and w over the ball."""
        grid = self.grid
        return integrate(grid, self.u), integrate(grid, self.v), integrate(grid, self.w)

    def advanced(self, u: RadialField, v: RadialField, w: RadialField,
                 step: float, next_dt: float) -> "SolutionState":
        return replace(self, u=u, v=v, w=w, t=self.t + step, dt=next_dt, last_dt=step)


def initial_state(params: ModelParams, grid: RadialGrid, u0: RadialField,
                  v0: RadialField, w0: RadialField,
                  dt: Optional[float] = None) -> SolutionState:
    """
    Assemble the state at t = 0.

    Args:
        params: Model parameters; their dim and radius must match the grid
        grid: Grid all three fields live on
        u0, v0, w0: Initial fields
        dt: Initial trial step (default 0.1 h^2)

    Raises:
        GridMismatchError: Fields or params disagree with the grid
        NegativeInitialData: A sample is negative
    """
    if params.dim != grid.dim or params.radius != grid.radius:
        raise GridMismatchError(
            "Model parameters do not match the grid",
            details={"params": (params.dim, params.radius), "grid": (grid.dim, grid.radius)}
        )
    for name, f in (("u0", u0), ("v0", v0), ("w0", w0)):
        if not f.grid.matches(grid):
            raise GridMismatchError(
                f"{name} lives on a different grid",
                details={"field": name, "field_cells": f.grid.cells, "grid_cells": grid.cells}
            )
        if np.any(f.values < 0.0):
            index = int(np.argmin(f.values))
            raise NegativeInitialData(
                f"{name} has negative samples",
                details={"field": name, "min": float(f.values[index]), "index": index}
            )

    trial = INITIAL_DT_FACTOR * grid.h ** 2 if dt is None else dt
    return SolutionState(u=u0, v=v0, w=w0, t=0.0, dt=trial, last_dt=0.0)


class VerdictKind(str, Enum):
    BLOWUP_INDICATED = "BlowupIndicated"
    GLOBAL_WITHIN_HORIZON = "GlobalWithinHorizon"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class RunVerdict:
    """Classification of a finished run together with the evidence behind it."""
    kind: VerdictKind
    t_end: float
    sup_u_end: float
    reason: str
    evidence: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        data = asdict(self)
        data["kind"] = self.kind.value
        return data

    def to_text(self) -> str:
        """``key: value`` lines as written to verdict.txt."""
        lines = [
            f"kind: {self.kind.value}",
            f"t_end: {self.t_end!r}",
            f"sup_u_end: {self.sup_u_end!r}",
            f"reason: {self.reason}",
        ]
        for key in sorted(self.evidence):
            lines.append(f"{key}: {self.evidence[key]!r}")
        return "\n".join(lines) + "\n"
