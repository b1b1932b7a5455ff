"""Administrative command line: serve, enroll, simulate, report.

Exit codes: 0 success, 1 usage, 2 validation (bad config/catalog/script/
dataset, or a simulation expectation mismatch), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .analytics import AnalyticsError, load_dataset_csv, summarize
from .catalog import CatalogError
from .server import build_service, run_server
from .service import ConfigError, ServiceConfig, load_configured_catalog, load_service_config
from .session import ScriptError, load_session_script_file, simulate_session
from .store import StorageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ossdoorway", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ossdoorway {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the webhook service")
    serve.add_argument("--config", required=True, help="service config YAML")

    enroll = commands.add_parser("enroll", help="create a learner's sandbox and state")
    enroll.add_argument("--user", required=True, help="learner login")
    enroll.add_argument("--config", required=True, help="service config YAML")

    simulate = commands.add_parser("simulate", help="replay a scripted session offline")
    simulate.add_argument("--script", required=True, help="session script YAML")
    simulate.add_argument("--config", required=True, help="service config YAML")

    report = commands.add_parser("report", help="questionnaire statistics report")
    report.add_argument("--dataset", required=True, help="CSV of Likert responses")
    report.add_argument("--segment", default="segment", help="column used for segmentation")

    return parser


def _load_config(path: str) -> ServiceConfig:
    config = load_service_config(path)
    logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.INFO))
    return config


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            run_server(_load_config(args.config))
            return EXIT_OK

        if args.command == "enroll":
            config = _load_config(args.config)
            service = build_service(config)
            repo = service.enroll(args.user)
            print(f"enrolled {args.user}: sandbox {repo}, dashboard published")
            return EXIT_OK

        if args.command == "simulate":
            config = _load_config(args.config)
            if config.hosting_mode != "simulated":
                print("simulate requires hosting.mode: simulated", file=sys.stderr)
                return EXIT_VALIDATION
            catalog = load_configured_catalog(config)
            script = load_session_script_file(args.script, catalog)
            result = simulate_session(script, catalog)
            sys.stdout.write(result.transcript)
            if result.mismatches:
                print(f"{result.mismatches} expectation mismatch(es)", file=sys.stderr)
                return EXIT_VALIDATION
            return EXIT_OK

        if args.command == "report":
            dataset = load_dataset_csv(args.dataset, segment_column=args.segment)
            print(summarize(dataset).to_markdown())
            return EXIT_OK

        raise AssertionError(f"unhandled command {args.command}")

    except (ConfigError, CatalogError, ScriptError, AnalyticsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StorageError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
