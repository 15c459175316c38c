import argparse
import logging
import sys

from pydantic import ValidationError

from app.api import check, clone, mc, snr, transfer
from app.api.common import EXIT_DOMAIN, EXIT_OUTPUT, EXIT_USAGE
from app.core.config import get_settings
from app.core.exceptions import (
    DomainError,
    OutputError,
    TransferError,
    UsageError,
)

logger = logging.getLogger(__name__)

COMMANDS = (transfer, snr, clone, mc, check)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqt",
        description="Semi-quantum state transfer simulator: fidelities, cloning, SNR and Monte-Carlo checks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging() -> None:
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def run(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        return args.func(args)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    except TransferError as exc:
        logger.exception("Unexpected engine error")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    configure_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
