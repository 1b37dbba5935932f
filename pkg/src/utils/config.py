"""Configuration management: runtime settings from the environment and run documents."""

import itertools
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from ..exceptions import ConfigurationError, ParseError, ValidationError
from ..models.state import DEFAULT_U_FLOOR, ModelParams, SolutionState, initial_state
from ..services.blowup_monitor import InequalityMonitorConfig, default_theta, ell_threshold
from ..services.discretization import MIN_CELLS, RadialField, RadialGrid, build_grid
from ..services.functionals import FunctionalConfig, admissible_set_norms
from ..services.initial_data import (
    MIN_CELLS_IN_ETA,
    FamilyParams,
    eta_star,
    perturbed_constants,
    synth_family,
)
from ..services.stepper import DEFAULT_ELL, StepperConfig

logger: logging.Logger = logging.getLogger(__name__)

ADMISSIBLE_MARGIN = 1e-3
SWEEPABLE_EXCLUDED = frozenset({"sweep", "output_dir"})


@dataclass
class RuntimeSettings:
    """Process-level settings that do not belong to a run document."""

    log_level: str = "INFO"
    log_format: str = "json"
    log_file: Optional[str] = None
    output_root: str = "runs"

    def validate(self) -> None:
        """
        Validate settings values.

        Raises:
            ConfigurationError: If a setting is invalid
        """
        valid_log_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if self.log_level.upper() not in valid_log_levels:
            logger.error(
                "Configuration validation failed: invalid log_level",
                extra={"log_level": self.log_level, "valid_log_levels": valid_log_levels}
            )
            raise ConfigurationError(
                f"Invalid log_level: {self.log_level}. Must be one of {valid_log_levels}",
                details={"log_level": self.log_level, "valid_log_levels": valid_log_levels}
            )

        valid_formats = ['json', 'plain']
        if self.log_format not in valid_formats:
            logger.error(
                "Configuration validation failed: invalid log_format",
                extra={"log_format": self.log_format, "valid_formats": valid_formats}
            )
            raise ConfigurationError(
                f"Invalid log_format: {self.log_format}. Must be one of {valid_formats}",
                details={"log_format": self.log_format, "valid_formats": valid_formats}
            )

        if not self.output_root:
            logger.error("Configuration validation failed: output_root is empty")
            raise ConfigurationError("CHEMOTAXIS_OUTPUT_ROOT must not be empty")

    @classmethod
    def from_env(cls) -> 'RuntimeSettings':
        """Load settings from CHEMOTAXIS_* environment variables (and an optional .env)."""
        try:
            load_dotenv(override=False)
        except Exception as e:
            logger.debug(
                ".env file could not be loaded (this is optional)",
                extra={"error_type": type(e).__name__, "error_message": str(e)}
            )

        log_file = os.getenv('CHEMOTAXIS_LOG_FILE', '').strip() or None
        settings = cls(
            log_level=os.getenv('CHEMOTAXIS_LOG_LEVEL', 'INFO').strip().upper(),
            log_format=os.getenv('CHEMOTAXIS_LOG_FORMAT', 'json').strip().lower(),
            log_file=log_file,
            output_root=os.getenv('CHEMOTAXIS_OUTPUT_ROOT', 'runs').strip(),
        )
        settings.validate()
        return settings


class RunConfig(BaseModel):
    """Flat run document. Every key is optional except the grid and horizon."""

    model_config = ConfigDict(extra="forbid")

    # grid and model
    dim: int = Field(..., ge=2)
    radius: float = Field(..., gt=0)
    cells: int = Field(..., ge=MIN_CELLS)
    tau: int = Field(default=1, ge=0, le=1)
    eps: int = Field(default=1, ge=0, le=1)
    u_floor: float = Field(default=DEFAULT_U_FLOOR, gt=0)

    # time stepping
    horizon: float = Field(..., gt=0)
    cfl: float = Field(default=0.4, gt=0, le=1)
    dt_min: float = Field(default=1e-12, gt=0)
    dt_max: float = Field(default=1e-2, gt=0)
    growth: float = Field(default=1.1, gt=1)
    blowup_factor: float = Field(default=1e6, gt=1)
    adaptive: bool = True
    dt_initial: Optional[float] = Field(default=None, gt=0)
    stride: int = Field(default=10, ge=1)

    # diagnostics
    kappa: Optional[float] = None
    general_tau: Optional[int] = Field(default=None, ge=0, le=1)
    general_eps: Optional[int] = Field(default=None, ge=0, le=1)

    # initial data
    u0: float = Field(default=1.0, ge=0)
    v0: float = Field(default=1.0, ge=0)
    w0: float = Field(default=1.0, ge=0)
    perturbation: float = 0.0
    family: bool = False
    gamma: float = Field(default=1.0, gt=0)
    eta: Optional[float] = Field(default=None, gt=0)
    etas: List[float] = Field(default_factory=list)

    # comparison monitor
    monitor: bool = False
    theta: Optional[float] = Field(default=None, gt=0, lt=1)
    C_user: float = Field(default=1.0, gt=0)
    m_tilde: Optional[float] = Field(default=None, gt=0)
    A: Optional[float] = Field(default=None, gt=0)
    ell: Optional[float] = Field(default=None, gt=1)

    # outputs
    plots: bool = True
    output_dir: Optional[str] = None
    sweep: Dict[str, List[Any]] = Field(default_factory=dict)

    def resolved_kappa(self) -> float:
        return float(self.dim - 1) if self.kappa is None else float(self.kappa)

    def resolved_theta(self) -> float:
        return self.theta if self.theta is not None else default_theta(self.dim, self.resolved_kappa())

    def cross_field_violations(self) -> List[str]:
        """Constraints spanning several fields, as ``"<field>: <constraint>"`` messages."""
        violations: List[str] = []
        if self.kappa is not None and not self.kappa > self.dim - 2:
            violations.append("kappa: kappa must exceed dim-2")
        if not self.dt_min < self.dt_max:
            violations.append("dt_min: must be smaller than dt_max")
        if self.dt_initial is not None and self.dt_initial < self.dt_min:
            violations.append("dt_initial: must not be smaller than dt_min")

        if abs(self.perturbation) > min(self.u0, self.v0, self.w0):
            violations.append("perturbation: amplitude must not exceed the smallest level u0, v0, w0")

        grid = self.grid()
        if self.family and self.eta is None:
            violations.append("eta: required when family is enabled")
        if self.eta is not None:
            violations.extend(_eta_violations("eta", self.eta, grid))
        for index, eta in enumerate(self.etas):
            violations.extend(_eta_violations(f"etas[{index}]", eta, grid))
        if any(a <= b for a, b in zip(self.etas, self.etas[1:])):
            violations.append("etas: ladder must be strictly decreasing")

        if self.monitor and self.ell is not None and self.m_tilde is not None and self.A is not None:
            threshold = ell_threshold(self.C_user, self.resolved_theta(), self.m_tilde, self.A)
            if not self.ell > threshold:
                violations.append(f"ell: must exceed the threshold {threshold!r}")

        violations.extend(self._sweep_violations())
        return violations

    def _sweep_violations(self) -> List[str]:
        violations: List[str] = []
        for key, values in self.sweep.items():
            if key in SWEEPABLE_EXCLUDED or key not in type(self).model_fields:
                violations.append(f"sweep.{key}: not a sweepable field")
                continue
            if not values:
                violations.append(f"sweep.{key}: needs at least one value")
            seen: List[Any] = []
            for value in values:
                if value in seen:
                    violations.append(f"sweep.{key}: duplicate value {value!r}")
                seen.append(value)
        return violations

    # Builders for the runtime objects

    def grid(self) -> RadialGrid:
        return build_grid(self.dim, self.radius, self.cells)

    def model_params(self) -> ModelParams:
        return ModelParams(dim=self.dim, radius=self.radius, tau=self.tau, eps=self.eps,
                           u_floor=self.u_floor)

    def stepper_config(self) -> StepperConfig:
        return StepperConfig(
            horizon=self.horizon, cfl=self.cfl, dt_min=self.dt_min, dt_max=self.dt_max,
            growth=self.growth, blowup_factor=self.blowup_factor, adaptive=self.adaptive,
            dt_initial=self.dt_initial, stride=self.stride,
        )

    def functional_config(self) -> FunctionalConfig:
        return FunctionalConfig(kappa=self.kappa, general_tau=self.general_tau,
                                general_eps=self.general_eps)

    def initial_fields(self, grid: RadialGrid) -> Tuple[RadialField, RadialField, RadialField]:
        """Perturbed constants, with the concentrating family on top when enabled."""
        base = perturbed_constants(grid, (self.u0, self.v0, self.w0), self.perturbation)
        if not self.family:
            return base
        return synth_family(grid, FamilyParams(gamma=self.gamma, eta=self.eta, base=base))

    def initial_state(self, grid: Optional[RadialGrid] = None) -> SolutionState:
        grid = grid or self.grid()
        u0, v0, w0 = self.initial_fields(grid)
        return initial_state(self.model_params(), grid, u0, v0, w0, dt=self.dt_initial)

    def monitor_config(self, state: Optional[SolutionState] = None) -> InequalityMonitorConfig:
        """
        Comparison constants. Unset m_tilde and A are taken from the initial
        data norms inflated by a small margin.
        """
        m_tilde, A = self.m_tilde, self.A
        if m_tilde is None or A is None:
            norms = admissible_set_norms(state or self.initial_state())
            if m_tilde is None:
                m_tilde = max(norms["mass_u"] * (1.0 + ADMISSIBLE_MARGIN), ADMISSIBLE_MARGIN)
            if A is None:
                A = max(max(norms["w_w12"], norms["v_w22"]) * (1.0 + ADMISSIBLE_MARGIN), ADMISSIBLE_MARGIN)
        return InequalityMonitorConfig(theta=self.resolved_theta(), C_user=self.C_user,
                                       m_tilde=m_tilde, A=A)

    def resolved_ell(self, monitor_cfg: Optional[InequalityMonitorConfig] = None) -> float:
        """ell as given, else twice the threshold when monitoring, else the run default."""
        if self.ell is not None:
            return self.ell
        if self.monitor:
            cfg = monitor_cfg or self.monitor_config()
            return 2.0 * ell_threshold(cfg.C_user, cfg.theta, cfg.m_tilde, cfg.A)
        return DEFAULT_ELL

    def resolved_dict(self) -> Dict[str, Any]:
        """Document with defaults filled, as written to config.json."""
        data = self.model_dump(mode="json")
        data["kappa"] = self.resolved_kappa()
        data["theta"] = self.resolved_theta()
        return data

    def sweep_points(self) -> List[Tuple[Dict[str, Any], "RunConfig"]]:
        """
        Cartesian product of the sweep values in declaration order.

        Raises:
            ValidationError: Some point violates a constraint
        """
        base = self.model_dump()
        base["sweep"] = {}
        keys = list(self.sweep)
        points: List[Tuple[Dict[str, Any], RunConfig]] = []
        violations: List[str] = []
        for index, combo in enumerate(itertools.product(*(self.sweep[k] for k in keys))):
            overrides = dict(zip(keys, combo))
            try:
                points.append((overrides, _validate({**base, **overrides})))
            except ValidationError as e:
                violations.extend(f"point_{index}.{item}" for item in e.violations)
        if violations:
            _raise_invalid(violations)
        return points


def _eta_violations(name: str, eta: float, grid: RadialGrid) -> List[str]:
    limit = eta_star(grid.radius)
    if not 0.0 < eta < limit:
        return [f"{name}: must lie in (0, {limit!r})"]
    inside = grid.cells_inside(eta)
    if inside < MIN_CELLS_IN_ETA:
        return [f"{name}: needs at least {MIN_CELLS_IN_ETA} cells inside B_eta, grid has {inside}"]
    return []


def _raise_invalid(violations: List[str]) -> None:
    logger.error(
        "Configuration validation failed",
        extra={"violation_count": len(violations), "violations": violations}
    )
    raise ValidationError(f"Invalid run configuration ({len(violations)} violations)", violations)


def _validate(data: Dict[str, Any]) -> RunConfig:
    try:
        config = RunConfig.model_validate(data)
    except PydanticValidationError as e:
        violations = []
        for error in e.errors():
            field_name = ".".join(str(part) for part in error["loc"]) or "<root>"
            violations.append(f"{field_name}: {error['msg']}")
        _raise_invalid(violations)
    violations = config.cross_field_violations()
    if violations:
        _raise_invalid(violations)
    return config


def parse_config(source: Union[str, Path]) -> RunConfig:
    """
    Parse and validate a JSON run document.

    Args:
        source: Path to a JSON file, or the JSON text itself

    Raises:
        ConfigurationError: The file cannot be read
        ParseError: Malformed JSON (details carry line and column) or not an object
        ValidationError: One or more constraints are violated; all are listed
    """
    if isinstance(source, Path) or not source.lstrip().startswith("{"):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            logger.error("Could not read configuration", extra={"path": str(path), "error": str(e)})
            raise ConfigurationError(
                "Could not read configuration file",
                details={"path": str(path), "error": str(e)}
            ) from e
    else:
        text = source

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        logger.error("Configuration is not valid JSON", extra={"line": e.lineno, "column": e.colno})
        raise ParseError(
            f"Malformed configuration: {e.msg}",
            details={"line": e.lineno, "column": e.colno}
        ) from e
    if not isinstance(data, dict):
        raise ParseError("Configuration must be a JSON object", details={"line": 1, "column": 1})

    config = _validate(data)
    logger.debug("Configuration validated", extra={"dim": config.dim, "cells": config.cells})
    return config
