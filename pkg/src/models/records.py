"""Per-step diagnostics rows."""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Tuple


@dataclass(frozen=True)
class EnergyRecord:
    """
    One diagnostics row.

    Field order is the column order of series.csv and must not change.
    """
    t: float
    dt: float
    mass_u: float
    mass_v: float
    mass_w: float
    sup_u: float
    F: float
    D: float
    cross_uv: float
    entropy: float
    weighted_w: float
    weighted_v: float
    psi: float

    @classmethod
    def columns(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_row(self) -> List[float]:
        return [getattr(self, name) for name in self.columns()]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return asdict(self)


SERIES_COLUMNS: Tuple[str, ...] = EnergyRecord.columns()
