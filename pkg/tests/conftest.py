"""Shared fixtures for the simulator test suite."""

import json
from pathlib import Path
from typing import Any, Dict

import pytest

from src.models.state import ModelParams, SolutionState
from src.services.discretization import RadialGrid, build_grid
from tests.fixtures.test_data import constant_state


@pytest.fixture
def grid5() -> RadialGrid:
    """Unit ball in R^5 with 64 cells."""
    return build_grid(5, 1.0, 64)


@pytest.fixture
def params5() -> ModelParams:
    """Fully parabolic model on the unit ball in R^5."""
    return ModelParams(dim=5, radius=1.0)


@pytest.fixture
def equilibrium_state(grid5: RadialGrid) -> SolutionState:
    """The constant steady state u = v = w = 1."""
    return constant_state(grid5, 1.0, 1.0, 1.0, dt=1e-3)


@pytest.fixture
def minimal_document() -> Dict[str, Any]:
    """Smallest valid run document: equilibrium data, short horizon, no plots."""
    return {"dim": 5, "radius": 1.0, "cells": 32, "horizon": 0.05, "plots": False}


@pytest.fixture
def config_file(tmp_path: Path, minimal_document: Dict[str, Any]) -> Path:
    """The minimal document written to disk."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps(minimal_document), encoding="utf-8")
    return path
