import argparse

from app.api.common import (
    EXIT_MC_FAILED,
    EXIT_OK,
    add_protocol_arguments,
    emit_config_if_requested,
    load_config,
    merge_protocol,
    params_from_section,
)
from app.core.config import get_settings
from app.core.patterns.adapter_facade import write_csv_table
from app.models.schemas import MCConfig, MCSection
from app.services.montecarlo import compare_with_analytic, simulate_protocol_shots
from app.services.protocol import build_transfer

MC_COLUMNS = ["output", "quantity", "analytic", "estimate", "stderr", "passed"]


def register(subparsers: argparse._SubParsersAction) -> None:
    mc = subparsers.add_parser("mc", help="Monte-Carlo validation of the analytic engine")
    add_protocol_arguments(mc)
    mc.add_argument("--M", type=int, default=None, help="cloning mode with M outputs")
    mc.add_argument("--shots", type=int, default=None)
    mc.add_argument("--seed", type=int, default=None)
    mc.add_argument("--chunk", type=int, default=None, help="shots per independent stream")
    mc.add_argument("--csv", default=None)
    mc.set_defaults(func=cmd_mc)


def cmd_mc(args: argparse.Namespace) -> int:
    config = load_config(args)
    section = merge_protocol(args, config)
    params = params_from_section(section, swap_epr=args.swap_epr)
    mc = MCSection(
        shots=args.shots if args.shots is not None else config.mc.shots,
        seed=args.seed if args.seed is not None else config.mc.seed,
        chunk=args.chunk if args.chunk is not None else config.mc.chunk,
    )
    cfg = MCConfig(**mc.model_dump(exclude_none=True))
    settings = get_settings()

    outputs = build_transfer(params)
    estimates = simulate_protocol_shots(params, cfg)
    rows = compare_with_analytic(outputs, estimates, settings.SIGMA_TOLERANCE)

    print(
        f"Monte-Carlo R = {params.R:.6g}   r = {params.r:.6g}   eta = {params.eta:.6g}   "
        f"shots = {cfg.shots}   seed = {cfg.seed}   chunk = {cfg.chunk}"
    )
    print(f"{'output':<8} {'quantity':<8} {'analytic':>12} {'estimate':>12} {'stderr':>10}  result")
    for row in rows:
        print(
            f"{row.output:<8} {row.quantity:<8} {row.analytic:>12.6f} {row.estimate:>12.6f} "
            f"{row.stderr:>10.2e}  {'PASS' if row.passed else 'FAIL'}"
        )
    failed = sum(not row.passed for row in rows)
    print(f"{'PASS' if failed == 0 else 'FAIL'}: {len(rows) - failed}/{len(rows)} within "
          f"{settings.SIGMA_TOLERANCE:g} standard errors")

    csv_path = args.csv or config.output.csv
    if csv_path:
        write_csv_table(
            csv_path,
            MC_COLUMNS,
            [[r.output, r.quantity, r.analytic, r.estimate, r.stderr, r.passed] for r in rows],
            settings.CSV_FLOAT_FORMAT,
        )
    emit_config_if_requested(args, config.model_copy(update={"protocol": section, "mc": mc}))
    return EXIT_OK if failed == 0 else EXIT_MC_FAILED
