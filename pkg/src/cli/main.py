"""Entry point: ``radial-chemotaxis <command> --config run.json``."""

import argparse
import logging
import sys
import uuid
from pathlib import Path
from typing import List, Optional

from ..exceptions import SimulationError
from ..utils.config import RunConfig, RuntimeSettings, parse_config
from ..utils.logging_config import log_error, run_id_ctx, setup_logging
from .commands import cmd_check_config, cmd_phi_table, cmd_run, cmd_sweep, cmd_synth_ic

logger = logging.getLogger(__name__)

COMMANDS = ("run", "synth-ic", "sweep", "phi-table", "check-config")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radial-chemotaxis",
        description="Radial simulations of the indirect-signal chemotaxis system"
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="Path to the JSON run document")
    parser.add_argument("--out", default=None,
                        help="Output directory (default: output_dir, then CHEMOTAXIS_OUTPUT_ROOT)")
    parser.add_argument("--stride", type=_positive_int, default=None,
                        help="Emit every k-th accepted step (overrides the document)")
    parser.add_argument("--plots", type=_on_off, default=None, help="on|off")
    parser.add_argument("--jobs", type=_positive_int, default=1, help="Worker processes for sweep")
    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    if args.stride is not None:
        updates["stride"] = args.stride
    if args.plots is not None:
        updates["plots"] = args.plots
    return config.model_copy(update=updates) if updates else config


def main(argv: Optional[List[str]] = None) -> int:
    """
    Dispatch a subcommand.

    Returns:
        0 on success, 1 for configuration errors, 2 for runtime errors or an
        Inconclusive verdict, 3 for I/O errors
    """
    args = build_parser().parse_args(argv)
    try:
        settings = RuntimeSettings.from_env()
    except SimulationError as e:
        print(str(e), file=sys.stderr)
        return e.exit_code
    setup_logging(settings.log_level, settings.log_format, settings.log_file)
    token = run_id_ctx.set(uuid.uuid4().hex[:8])

    try:
        config = _apply_overrides(parse_config(Path(args.config)), args)
        out_dir = Path(args.out or config.output_dir or settings.output_root)

        if args.command == "check-config":
            return cmd_check_config(config)
        if args.command == "run":
            return cmd_run(config, out_dir, config.plots)
        if args.command == "synth-ic":
            return cmd_synth_ic(config, out_dir)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir, config.plots, args.jobs)
        return cmd_phi_table(config, out_dir)
    except SimulationError as e:
        log_error(logger, f"{args.command} failed", error_type=type(e).__name__, details=e.details)
        print(str(e), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        log_error(logger, f"{args.command} crashed", exc_info=True, error_type=type(e).__name__)
        print(f"Unexpected error: {e}", file=sys.stderr)
        return 2
    finally:
        run_id_ctx.reset(token)


if __name__ == "__main__":
    sys.exit(main())
