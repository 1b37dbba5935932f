"""IMEX Euler time integration and the run driver.

One step of length dt, in this order:

1. u* = u - dt div(u grad v)            explicit, upwind, conservative
2. (I - dt Delta) u_new = u*             implicit diffusion
3. (I - dt (Delta - I)) v_new = v + dt w
4. tau = 1: (I - dt (eps Delta - I)) w_new = w + dt u_new
   tau = 0: (I - eps Delta) w_new = u_new

dt is capped by the advective CFL bound, by the cellwise positivity bound
of the upwind step and by dt_max. A step producing NaN or a negativity
beyond roundoff is rejected and retried with half the step; the run ends
with a DtUnderflow once the admissible step drops below dt_min.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Tuple

import numpy as np

from ..exceptions import ConfigurationError, DtUnderflow, StepRejected
from ..models.records import EnergyRecord
from ..models.state import ModelParams, RunVerdict, SolutionState, VerdictKind
from .blowup_monitor import PsiAccumulator, psi_lower_bound_check, psi_update
from .discretization import (
    RadialField,
    RadialGrid,
    chemotactic_divergence,
    face_gradient,
    outflow_rates,
    solve_implicit,
)
from .functionals import FunctionalConfig, diagnostics_row
from .oracles import exact_v_mass_bound, exact_w_mass

logger = logging.getLogger(__name__)

NEGATIVITY_TOLERANCE = 1e-12
ENERGY_SLACK = 1e-8
V_MASS_SLACK = 1e-6
DEFAULT_ELL = 2.0


@dataclass(frozen=True)
class StepperConfig:
    """
    Time-stepping controls.

    Attributes:
        horizon: Final time
        cfl: Advective CFL number in (0, 1]
        dt_min: Admissible steps below this end the run
        dt_max: Largest step ever taken
        growth: Factor applied to dt after each accepted step (adaptive mode)
        blowup_factor: Sup-norm escalation that marks an underflow as blowup
        adaptive: False keeps the trial step fixed (step-doubling studies)
        dt_initial: First trial step; None selects 0.1 h^2
        stride: Emit every stride-th accepted step
    """
    horizon: float
    cfl: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    growth: float = 1.1
    blowup_factor: float = 1e6
    adaptive: bool = True
    dt_initial: Optional[float] = None
    stride: int = 10

    def __post_init__(self) -> None:
        problems = []
        if not 0.0 < self.cfl <= 1.0:
            problems.append("cfl must lie in (0, 1]")
        if not 0.0 < self.dt_min < self.dt_max:
            problems.append("need 0 < dt_min < dt_max")
        if not self.growth > 1.0:
            problems.append("growth must exceed 1")
        if not self.horizon > 0.0:
            problems.append("horizon must be positive")
        if not self.blowup_factor > 1.0:
            problems.append("blowup_factor must exceed 1")
        if self.dt_initial is not None and not self.dt_initial > 0.0:
            problems.append("dt_initial must be positive")
        if self.stride < 1:
            problems.append("stride must be at least 1")
        if problems:
            raise ConfigurationError("Invalid stepper configuration", details={"problems": problems})


class DiagnosticsSink(Protocol):
    """Receives emitted records in time order."""

    def write(self, record: EnergyRecord) -> None:
        ...


@dataclass
class RecordListSink:
    """In-memory sink."""
    records: List[EnergyRecord] = field(default_factory=list)

    def write(self, record: EnergyRecord) -> None:
        self.records.append(record)


def admissible_dt(grid: RadialGrid, v: RadialField, cfg: StepperConfig) -> float:
    """Largest step allowed by the CFL and upwind positivity bounds and dt_max."""
    bound = cfg.dt_max
    grad_max = float(np.max(np.abs(face_gradient(grid, v))))
    if grad_max > 0.0:
        bound = min(bound, cfg.cfl * grid.h / grad_max)
    rate_max = float(np.max(outflow_rates(grid, v)))
    if rate_max > 0.0:
        bound = min(bound, cfg.cfl / rate_max)
    return bound


def _imex_step(params: ModelParams, state: SolutionState,
               dt: float) -> Tuple[RadialField, RadialField, RadialField]:
    grid = state.grid
    u = state.u.values
    v = state.v.values
    w = state.w.values

    u_star = u - dt * chemotactic_divergence(grid, state.u, state.v).values
    u_new = solve_implicit(grid, u_star, dt, diffusion=1.0, decay=0.0, increment=True)
    if not np.all(np.isfinite(u_new)):
        raise StepRejected("Non-finite u after step", details={"dt": dt})

    floor = -NEGATIVITY_TOLERANCE * max(float(np.max(u)), float(np.max(u_new)))
    lowest = float(np.min(u_new))
    if lowest < floor:
        raise StepRejected(
            "Negative u beyond roundoff",
            details={"dt": dt, "min_u": lowest, "index": int(np.argmin(u_new))}
        )
    if lowest < 0.0:
        logger.debug("Clipped roundoff undershoot of u", extra={"t": state.t, "min_u": lowest})
        u_new = np.maximum(u_new, 0.0)

    v_new = solve_implicit(grid, v + dt * w, dt, diffusion=1.0, decay=1.0)

    if params.tau == 1:
        w_new = solve_implicit(grid, w + dt * u_new, dt, diffusion=float(params.eps), decay=1.0)
    elif params.eps == 1:
        w_new = solve_implicit(grid, u_new, 1.0, diffusion=1.0, decay=0.0)
    else:
        w_new = u_new.copy()

    if not (np.all(np.isfinite(v_new)) and np.all(np.isfinite(w_new))):
        raise StepRejected("Non-finite v or w after step", details={"dt": dt})

    return (
        RadialField(u_new, grid),
        RadialField(np.maximum(v_new, 0.0), grid),
        RadialField(np.maximum(w_new, 0.0), grid),
    )


def _advance(params: ModelParams, state: SolutionState, cfg: StepperConfig,
             limit: Optional[float] = None) -> Tuple[SolutionState, int]:
    """One accepted step plus the number of rejected trials before it."""
    grid = state.grid
    trial = state.dt
    rejections = 0
    while True:
        dt = min(trial, admissible_dt(grid, state.v, cfg))
        if dt < cfg.dt_min:
            raise DtUnderflow(
                "Admissible step fell below dt_min",
                dt=dt,
                details={"t": state.t, "dt_min": cfg.dt_min, "rejections": rejections}
            )
        if limit is not None and limit < dt:
            dt = limit
        try:
            u, v, w = _imex_step(params, state, dt)
        except StepRejected as e:
            rejections += 1
            logger.debug("Step rejected, halving dt", extra={"t": state.t, "dt": dt, "reason": e.message})
            trial = 0.5 * dt
            continue
        next_dt = min(dt * cfg.growth, cfg.dt_max) if cfg.adaptive else state.dt
        return state.advanced(u, v, w, dt, next_dt), rejections


def step(params: ModelParams, state: SolutionState, cfg: StepperConfig) -> SolutionState:
    """
    Advance the state by one accepted IMEX step.

    Raises:
        DtUnderflow: The admissible step fell below dt_min
    """
    return _advance(params, state, cfg)[0]


@dataclass
class _RunBook:
    """Running evidence for the verdict."""
    steps_accepted: int = 0
    steps_rejected: int = 0
    max_mass_drift: float = 0.0
    max_energy_increase: float = 0.0
    max_identity_residual: float = 0.0
    sum_identity_residual: float = 0.0
    max_w_mass_error: float = 0.0
    max_v_mass_excess: float = -math.inf
    energy_slack_violations: int = 0
    psi_chain_violations: int = 0

    def as_evidence(self, **extra: Any) -> Dict[str, Any]:
        evidence: Dict[str, Any] = dict(vars(self))
        evidence.update(extra)
        return evidence


def run(params: ModelParams, state0: SolutionState, cfg: StepperConfig,
        sink: DiagnosticsSink, functional_cfg: Optional[FunctionalConfig] = None,
        ell: float = DEFAULT_ELL) -> RunVerdict:
    """
    Integrate until the horizon or until the step size underflows.

    Emits the initial record, every ``cfg.stride``-th accepted step and the
    final state to ``sink``.

    Returns:
        GlobalWithinHorizon when the horizon is reached; BlowupIndicated when
        dt underflows after sup u grew by ``blowup_factor``; Inconclusive
        for any other underflow

    Raises:
        OutputError: Propagated from the sink
    """
    fcfg = functional_cfg or FunctionalConfig()
    if cfg.dt_initial is not None:
        state0 = SolutionState(u=state0.u, v=state0.v, w=state0.w, t=state0.t,
                               dt=cfg.dt_initial, last_dt=state0.last_dt)

    first = diagnostics_row(params, fcfg, state0)
    psi = PsiAccumulator.start(params, state0, first.F, ell)
    sink.write(first)

    mass_u0, mass_v0, mass_w0 = first.mass_u, first.mass_v, first.mass_w
    v_bound = exact_v_mass_bound((mass_u0, mass_v0, mass_w0))
    sup_u0 = first.sup_u
    book = _RunBook()
    state = state0
    previous = first
    emitted_last = True

    def finish(kind: VerdictKind, reason: str, dt_final: float) -> RunVerdict:
        if not emitted_last:
            sink.write(previous)
        verdict = RunVerdict(
            kind=kind,
            t_end=state.t,
            sup_u_end=state.u.sup(),
            reason=reason,
            evidence=book.as_evidence(
                dt_final=dt_final,
                sup_u_initial=sup_u0,
                F_initial=first.F,
                F_final=previous.F,
            ),
        )
        log = logger.warning if kind is VerdictKind.INCONCLUSIVE else logger.info
        log(
            f"Run finished: {kind.value}",
            extra={"t_end": verdict.t_end, "sup_u_end": verdict.sup_u_end, "reason": reason}
        )
        return verdict

    while state.t < cfg.horizon:
        try:
            state, rejected = _advance(params, state, cfg, limit=cfg.horizon - state.t)
        except DtUnderflow as e:
            sup_u = state.u.sup()
            escalated = sup_u0 > 0.0 and sup_u >= cfg.blowup_factor * sup_u0
            if escalated:
                return finish(VerdictKind.BLOWUP_INDICATED,
                              f"dt fell below dt_min with sup u grown by {sup_u / sup_u0:.3g}", e.dt)
            return finish(VerdictKind.INCONCLUSIVE,
                          "dt fell below dt_min without sup-norm escalation", e.dt)

        book.steps_accepted += 1
        book.steps_rejected += rejected
        psi = psi_update(psi, state, state.last_dt)
        record = diagnostics_row(params, fcfg, state, psi)

        if not all(math.isfinite(value) for value in record.as_row()):
            return finish(VerdictKind.INCONCLUSIVE, "non-finite diagnostics", state.last_dt)

        if mass_u0 > 0.0:
            book.max_mass_drift = max(book.max_mass_drift, abs(record.mass_u - mass_u0) / mass_u0)
        increase = (record.F - previous.F) / (1.0 + abs(previous.F))
        book.max_energy_increase = max(book.max_energy_increase, increase)
        if increase > ENERGY_SLACK:
            book.energy_slack_violations += 1
            if book.energy_slack_violations == 1:
                logger.warning(
                    "Energy increased beyond slack",
                    extra={"t": record.t, "F_previous": previous.F, "F": record.F}
                )
        residual = abs(record.F - previous.F + state.last_dt * record.D)
        book.max_identity_residual = max(book.max_identity_residual, residual)
        book.sum_identity_residual += residual
        if params.tau == 1:
            error = abs(record.mass_w - exact_w_mass(record.t, mass_u0, mass_w0))
            book.max_w_mass_error = max(book.max_w_mass_error, error)
        book.max_v_mass_excess = max(book.max_v_mass_excess, record.mass_v - v_bound)
        if record.mass_v - v_bound > V_MASS_SLACK:
            logger.debug("v mass above its bound", extra={"t": record.t, "mass_v": record.mass_v})

        if psi_lower_bound_check(psi, state, record.F).violated:
            book.psi_chain_violations += 1

        emitted_last = book.steps_accepted % cfg.stride == 0
        if emitted_last:
            sink.write(record)
            logger.debug(
                "Weighted norms",
                extra={"t": record.t, "weighted_w": record.weighted_w, "weighted_v": record.weighted_v}
            )
        previous = record

    return finish(VerdictKind.GLOBAL_WITHIN_HORIZON, "horizon reached", state.last_dt)
