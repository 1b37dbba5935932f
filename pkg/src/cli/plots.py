"""Static SVG line plots of a finished run."""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..exceptions import OutputError  # noqa: E402
from ..models.records import EnergyRecord  # noqa: E402

logger = logging.getLogger(__name__)

# fixed salt and no date so identical runs give identical files
plt.rcParams["svg.hashsalt"] = "radial-chemotaxis"
SVG_METADATA = {"Date": None}


def _save(fig: "plt.Figure", path: Path) -> None:
    try:
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    except OSError as e:
        raise OutputError("Could not write plot", details={"path": str(path), "error": str(e)}) from e
    finally:
        plt.close(fig)
    logger.debug("Plot written", extra={"path": str(path)})


def energy_plot(records: Sequence[EnergyRecord], path: Path) -> None:
    """F and D against t."""
    t = [r.t for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, [r.F for r in records], label="F")
    ax.plot(t, [r.D for r in records], label="D")
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def supnorm_plot(records: Sequence[EnergyRecord], path: Path) -> None:
    """sup u against t, log scale when every value is positive."""
    t = [r.t for r in records]
    sup_u = [r.sup_u for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, sup_u)
    if sup_u and min(sup_u) > 0.0:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("sup u")
    fig.tight_layout()
    _save(fig, path)
