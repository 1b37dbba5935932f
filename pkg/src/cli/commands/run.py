"""run: integrate one configuration and persist series, verdict and plots."""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict

import pandas as pd

from ...models.state import RunVerdict, VerdictKind
from ...services.blowup_monitor import blowup_time_bound, energy_threshold, inequality_ratio
from ...services.stepper import run
from ...utils.config import RunConfig
from ...utils.logging_config import log_debug, log_info, log_performance
from ..plots import energy_plot, supnorm_plot
from ..sinks import CsvDiagnosticsSink
from .outputs import ensure_dir, write_frame, write_json, write_text

logger = logging.getLogger(__name__)

INEQUALITY_COLUMNS = ("t", "lhs", "rhs", "ratio")


def execute_run(config: RunConfig, out_dir: Path, plots: bool) -> RunVerdict:
    """
    Run one configuration into ``out_dir``.

    Writes config.json, series.csv and verdict.txt; inequality.csv when the
    comparison monitor is enabled; energy.svg and supnorm.svg when ``plots``.
    """
    ensure_dir(out_dir)
    write_json(out_dir / "config.json", config.resolved_dict())

    grid = config.grid()
    params = config.model_params()
    state0 = config.initial_state(grid)

    monitor_cfg = config.monitor_config(state0) if config.monitor else None
    ell = config.resolved_ell(monitor_cfg)
    monitor_evidence: Dict[str, float] = {}
    if monitor_cfg is not None:
        bound = blowup_time_bound(ell, monitor_cfg.C_user, monitor_cfg.theta,
                                  monitor_cfg.m_tilde, monitor_cfg.A)
        monitor_evidence = {"ell": ell, "time_bound": bound,
                            "energy_threshold": energy_threshold(ell, grid.volume)}
        log_info(logger, "Comparison monitor enabled", theta=monitor_cfg.theta,
                 m_tilde=monitor_cfg.m_tilde, A=monitor_cfg.A, **monitor_evidence)

    with CsvDiagnosticsSink(out_dir / "series.csv") as sink:
        verdict = run(params, state0, config.stepper_config(), sink,
                      functional_cfg=config.functional_config(), ell=ell)
    if monitor_evidence:
        verdict = replace(verdict, evidence={**verdict.evidence, **monitor_evidence})
    write_text(out_dir / "verdict.txt", verdict.to_text())

    if monitor_cfg is not None:
        points = inequality_ratio(sink.records, monitor_cfg)
        frame = pd.DataFrame([(p.t, p.lhs, p.rhs, float(p.ratio)) for p in points],
                             columns=list(INEQUALITY_COLUMNS))
        write_frame(frame, out_dir / "inequality.csv")

    if plots:
        energy_plot(sink.records, out_dir / "energy.svg")
        supnorm_plot(sink.records, out_dir / "supnorm.svg")
    log_debug(logger, "Run outputs written", out_dir=str(out_dir),
              files=sorted(p.name for p in out_dir.iterdir()))
    return verdict


@log_performance("run")
def cmd_run(config: RunConfig, out_dir: Path, plots: bool) -> int:
    verdict = execute_run(config, out_dir, plots)
    return 2 if verdict.kind is VerdictKind.INCONCLUSIVE else 0
