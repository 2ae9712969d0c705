"""Command-line front end: run, validate, modes, static and batch."""

import argparse
import logging
import sys
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent.parent
sys.path.append(str(BASE_DIR / 'src'))

from config import LOG_FORMAT, LOG_LEVEL  # noqa: E402
from errors import ConfigError, UnsupportedMode  # noqa: E402
from runner import EXIT_CONFIG, EXIT_OK, execute, run_batch  # noqa: E402
from scenario import validate_scenario  # noqa: E402
from tracer import tracer  # noqa: E402

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inextensible",
        description="Inextensible cantilever beam and plate simulations from YAML scenarios.",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level (default from LOG_LEVEL)")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, help_text in (
        ("run", "Integrate a scenario and write trajectory, diagnostics, plots and manifest"),
        ("modes", "Linearized frequencies and mode shapes about the zero state"),
        ("static", "Static equilibrium under the configured load"),
        ("validate", "Check a scenario without running it and list effective defaults"),
    ):
        cmd = sub.add_parser(verb, help=help_text)
        cmd.add_argument("--config", type=Path, required=True, help="Scenario YAML file")
        if verb != "validate":
            cmd.add_argument("--out", type=Path, default=None, help="Output directory")
            cmd.add_argument("--check", action="store_true", help="Exit 4 when an acceptance check fails")

    batch = sub.add_parser("batch", help="Run several scenarios concurrently, one output directory each")
    batch.add_argument("configs", type=Path, nargs="+", help="Scenario YAML files")
    batch.add_argument("--out", type=Path, default=None, help="Parent output directory")
    batch.add_argument("--check", action="store_true")
    batch.add_argument("--jobs", type=int, default=None, help="Parallel workers (default N_JOBS)")
    return parser


def validate(config_path: Path) -> int:
    with tracer.start_as_current_span("validate") as span:
        span.set_attribute("sim.config", str(config_path))
        try:
            summary = validate_scenario(config_path)
        except (ConfigError, UnsupportedMode) as e:
            print(f"invalid: {e}")
            return EXIT_CONFIG
    print(summary.render())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)

    if args.verb == "validate":
        return validate(args.config)
    if args.verb == "batch":
        kwargs = {} if args.jobs is None else {"n_jobs": args.jobs}
        return run_batch(args.configs, args.out, args.check, **kwargs)
    return execute(args.verb, args.config, args.out, args.check)


if __name__ == "__main__":
    sys.exit(main())
