"""Independent reference values: exact mass laws and fine-grid quadrature.

Reference constants are minted once with ``compute_reference_constants`` and
checked in under ``data/oracle_constants.txt``; the test suite recomputes
them and fails when they drift.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, Mapping, Optional, Union

import numpy as np
from scipy.special import xlogy

from ..exceptions import ConfigurationError, DomainError, OutputError
from .discretization import unit_sphere_area

logger = logging.getLogger(__name__)

RadialFunction = Callable[[np.ndarray], np.ndarray]

FINE_CELLS = 2 ** 17
MIN_FINE_CELLS = 2 ** 16
DRIFT_TOLERANCE = 1e-6
CONSTANTS_PATH = Path(__file__).resolve().parents[2] / "data" / "oracle_constants.txt"


def exact_w_mass(t: float, mass_u0: float, mass_w0: float) -> float:
    """e^{-t} int w0 + (1 - e^{-t}) int u0."""
    if t < 0:
        raise DomainError("exact_w_mass requires t >= 0", details={"t": t})
    return math.exp(-t) * mass_w0 - math.expm1(-t) * mass_u0


def exact_v_mass_bound(masses: Iterable[float]) -> float:
    """Upper envelope max{int u0, int v0, int w0} for int v(t)."""
    return max(masses)


def exact_w_mass_bound(mass_u0: float, mass_w0: float) -> float:
    """Upper envelope max{int u0, int w0} for int w(t)."""
    return max(mass_u0, mass_w0)


def fine_quadrature(fn: RadialFunction, dim: int, radius: float = 1.0,
                    cells: int = FINE_CELLS) -> float:
    """
    Midpoint rule for omega_n int_0^R fn(r) r^{n-1} dr.

    Args:
        fn: Vectorised radial function
        dim: Spatial dimension
        radius: Ball radius
        cells: Number of midpoint cells, at least 2^16

    Returns:
        The integral of fn over B_radius in R^dim
    """
    if cells < MIN_FINE_CELLS:
        raise ConfigurationError(
            "fine_quadrature needs at least 2^16 cells",
            details={"cells": cells}
        )
    h = radius / cells
    r = (np.arange(cells, dtype=np.float64) + 0.5) * h
    weights = unit_sphere_area(dim) * r ** (dim - 1) * h
    return float(np.dot(np.asarray(fn(r), dtype=np.float64), weights))


@dataclass(frozen=True)
class ReferenceConstant:
    name: str
    value: float
    provenance: str

    def to_line(self) -> str:
        return f"{self.name} {self.value!r} {self.provenance}"


def compute_reference_constants(dim: int = 5, cells: int = FINE_CELLS) -> Dict[str, ReferenceConstant]:
    """
    Recompute every checked-in constant for the unit ball in R^dim.

    omega_n is closed form; every integral goes through ``fine_quadrature``.
    """
    # initial_data depends on this module for its normalisation
    from .initial_data import (
        mollifier_laplacian,
        mollifier_profile,
        mollifier_radial_derivative,
    )

    omega = unit_sphere_area(dim)
    norm = fine_quadrature(mollifier_profile, dim, 1.0, cells)

    def phi(r: np.ndarray) -> np.ndarray:
        return mollifier_profile(r) / norm

    l2sq = fine_quadrature(lambda r: phi(r) ** 2, dim, 1.0, cells)
    grad_sq = fine_quadrature(lambda r: (mollifier_radial_derivative(r) / norm) ** 2, dim, 1.0, cells)
    lap_sq = fine_quadrature(lambda r: (mollifier_laplacian(r, dim) / norm) ** 2, dim, 1.0, cells)
    ent = fine_quadrature(lambda r: xlogy(phi(r), phi(r)), dim, 1.0, cells)

    fine = f"fine_quadrature(cells={cells})"
    entries = [
        ReferenceConstant(f"omega_{dim}", omega, "closed_form:2*pi^(n/2)/Gamma(n/2)"),
        ReferenceConstant(f"ball_volume_{dim}", fine_quadrature(np.ones_like, dim, 1.0, cells), fine),
        ReferenceConstant(f"r2_integral_{dim}", fine_quadrature(lambda r: r ** 2, dim, 1.0, cells), fine),
        ReferenceConstant(f"r4_integral_{dim}", fine_quadrature(lambda r: r ** 4, dim, 1.0, cells), fine),
        ReferenceConstant(f"mollifier_profile_integral_{dim}", norm, fine),
        ReferenceConstant(f"phi_l2sq_{dim}", l2sq, fine),
        ReferenceConstant(f"phi_grad_l2sq_{dim}", grad_sq, fine),
        ReferenceConstant(f"phi_lap_l2sq_{dim}", lap_sq, fine),
        ReferenceConstant(f"phi_w22_{dim}", math.sqrt(l2sq + grad_sq + lap_sq), fine),
        ReferenceConstant(f"phi_entropy_{dim}", ent, fine),
    ]
    return {entry.name: entry for entry in entries}


def load_reference_constants(path: Optional[Union[str, Path]] = None) -> Dict[str, ReferenceConstant]:
    """
    Parse a constants file of ``name value provenance`` records.

    Blank lines and ``#`` comments are skipped.

    Raises:
        OutputError: If the file cannot be read or a record is malformed
    """
    source = Path(path) if path is not None else CONSTANTS_PATH
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(
            "Could not read reference constants",
            details={"path": str(source), "error": str(e)}
        ) from e

    constants: Dict[str, ReferenceConstant] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=2)
        if len(parts) < 3:
            raise OutputError(
                "Malformed reference constant record",
                details={"path": str(source), "line": lineno, "record": line}
            )
        name, value, provenance = parts
        try:
            constants[name] = ReferenceConstant(name, float(value), provenance)
        except ValueError as e:
            raise OutputError(
                "Reference constant is not a number",
                details={"path": str(source), "line": lineno, "value": value}
            ) from e
    return constants


def reference_drift(stored: Mapping[str, ReferenceConstant],
                    computed: Mapping[str, ReferenceConstant]) -> Dict[str, float]:
    """Relative drift |computed - stored| / |stored| for every stored name.

    Names missing from ``computed`` report ``inf``.
    """
    drift: Dict[str, float] = {}
    for name, ref in stored.items():
        if name not in computed:
            drift[name] = math.inf
            continue
        scale = abs(ref.value) or 1.0
        drift[name] = abs(computed[name].value - ref.value) / scale
    worst = max(drift.values(), default=0.0)
    if worst > DRIFT_TOLERANCE:
        logger.warning(
            "Reference constants drifted",
            extra={"worst_drift": worst, "names": sorted(k for k, v in drift.items() if v > DRIFT_TOLERANCE)}
        )
    return drift
