"""sweep: run the cartesian product of the ``sweep`` values."""

import logging
import math
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Tuple

import pandas as pd

from ...exceptions import SimulationError
from ...models.state import VerdictKind
from ...utils.config import RunConfig
from ...utils.logging_config import log_info, log_performance, log_warning, run_id_ctx
from .outputs import ensure_dir, write_frame
from .run import execute_run

logger = logging.getLogger(__name__)

SweepJob = Tuple[int, Dict[str, Any], Dict[str, Any], str, bool]


def _run_point(job: SweepJob) -> Dict[str, Any]:
    """Top-level so it pickles for the pool. Failures become Inconclusive rows."""
    index, overrides, document, out_dir, plots = job
    token = run_id_ctx.set(f"point_{index}")
    row: Dict[str, Any] = {"point": index, **overrides}
    try:
        verdict = execute_run(RunConfig.model_validate(document), Path(out_dir), plots)
        row.update(verdict=verdict.kind.value, final_F=verdict.evidence.get("F_final", math.nan),
                   sup_u=verdict.sup_u_end)
    except SimulationError as e:
        log_warning(logger, "Sweep point failed", point=index, error=str(e))
        row.update(verdict=VerdictKind.INCONCLUSIVE.value, final_F=math.nan, sup_u=math.nan)
    finally:
        run_id_ctx.reset(token)
    return row


@log_performance("sweep")
def cmd_sweep(config: RunConfig, out_dir: Path, plots: bool, jobs: int = 1) -> int:
    ensure_dir(out_dir)
    points = config.sweep_points()
    work: List[SweepJob] = [
        (index, overrides, point.model_dump(), str(out_dir / f"point_{index}"), plots)
        for index, (overrides, point) in enumerate(points)
    ]
    log_info(logger, "Starting sweep", points=len(work), jobs=jobs)

    if jobs > 1 and len(work) > 1:
        with Pool(min(jobs, len(work))) as pool:
            rows = pool.map(_run_point, work)
    else:
        rows = [_run_point(job) for job in work]

    columns = ["point", *config.sweep.keys(), "verdict", "final_F", "sup_u"]
    write_frame(pd.DataFrame(rows, columns=columns), out_dir / "sweep_summary.csv")

    failed = sum(row["verdict"] == VerdictKind.INCONCLUSIVE.value for row in rows)
    if failed:
        log_warning(logger, "Sweep finished with inconclusive points", failed=failed, points=len(rows))
        return 2
    return 0
