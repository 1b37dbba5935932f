"""Models for the radial chemotaxis simulator.

This module contains the value types shared by the services:
- Model parameters and the evolving solution state
- Run verdicts
- Diagnostics records
"""

from src.models.records import SERIES_COLUMNS, EnergyRecord
from src.models.state import (
    ModelParams,
    RunVerdict,
    SolutionState,
    VerdictKind,
    initial_state,
)

__all__ = [
    "ModelParams",
    "SolutionState",
    "RunVerdict",
    "VerdictKind",
    "initial_state",
    "EnergyRecord",
    "SERIES_COLUMNS",
]
