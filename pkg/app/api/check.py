import argparse

from app.api.common import EXIT_CHECK_FAILED, EXIT_OK
from app.core.config import get_settings
from app.services.checks import run_invariant_suite


def register(subparsers: argparse._SubParsersAction) -> None:
    check = subparsers.add_parser(
        "check",
        help="run the invariant suite (Monte-Carlo shots from SQT_CHECK_SHOTS)",
    )
    check.set_defaults(func=cmd_check)


def cmd_check(args: argparse.Namespace) -> int:
    settings = get_settings()
    results = run_invariant_suite(settings)
    failed = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] {result.name} ({result.checked} checked)")
        for violation in result.violations:
            print(f"    - {violation}")
        failed += not result.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED
