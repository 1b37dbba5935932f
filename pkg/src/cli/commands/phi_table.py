"""phi-table: the closed-form comparison function and its ODE residual."""

import logging
from pathlib import Path

import pandas as pd

from ...services.blowup_monitor import ell_threshold, phi_table
from ...utils.config import RunConfig
from ...utils.logging_config import log_info, log_performance
from .outputs import ensure_dir, write_frame

logger = logging.getLogger(__name__)

PHI_COLUMNS = ("s", "phi", "ode_rhs", "fd_derivative", "rel_residual")


@log_performance("phi-table")
def cmd_phi_table(config: RunConfig, out_dir: Path) -> int:
    ensure_dir(out_dir)
    cfg = config.monitor_config()
    if config.ell is not None:
        ell = config.ell
    else:
        ell = 2.0 * ell_threshold(cfg.C_user, cfg.theta, cfg.m_tilde, cfg.A)

    rows = phi_table(ell, cfg.C_user, cfg.theta, cfg.m_tilde, cfg.A)
    frame = pd.DataFrame(
        [(r.s, float(r.phi), float(r.ode_rhs), float(r.fd_derivative), r.rel_residual) for r in rows],
        columns=list(PHI_COLUMNS),
    )
    write_frame(frame, out_dir / "phi_table.csv")
    log_info(logger, "Phi table written", ell=ell, theta=cfg.theta, time_bound=rows[-1].s)
    return 0
