import argparse
import math

from app.api.common import (
    EXIT_OK,
    add_protocol_arguments,
    emit_config_if_requested,
    load_config,
    merge_protocol,
    parse_pair,
    params_from_section,
)
from app.core.exceptions import UsageError
from app.models.schemas import MCConfig, MCSection, SnrReport
from app.services.metrics import protocol_snr
from app.services.montecarlo import estimate_channel_snr


def register(subparsers: argparse._SubParsersAction) -> None:
    snr = subparsers.add_parser("snr", help="eavesdropper signal-to-noise on the channel")
    add_protocol_arguments(snr)
    snr.add_argument("--vin", default="1,1", help="input quadrature variances 'vx,vy'")
    snr.add_argument("--shots", type=int, default=None, help="also estimate by Monte-Carlo")
    snr.add_argument("--seed", type=int, default=None)
    snr.set_defaults(func=cmd_snr)


def _format_pair(values: tuple[float, float]) -> str:
    return f"({values[0]:.6g}, {values[1]:.6g})"


def format_snr(report: SnrReport) -> list[str]:
    lines = [f"SNR ({report.source}): X = {report.snr_x:.6f}   Y = {report.snr_y:.6f}"]
    if report.stderr_x is not None:
        lines[-1] += f"   stderr = ({report.stderr_x:.2g}, {report.stderr_y:.2g})"
    if report.source == "analytic":
        lines.append(f"  noise referred to input = {_format_pair(report.noise_referred_to_input)}")
    if report.reference_formula_value is not None:
        lines.append(f"  reference closed form   = {_format_pair(report.reference_formula_value)}")
    return lines


def cmd_snr(args: argparse.Namespace) -> int:
    config = load_config(args)
    section = merge_protocol(args, config)
    params = params_from_section(section, swap_epr=args.swap_epr)
    v_in = parse_pair(args.vin)
    if min(v_in) <= 0:
        raise UsageError(f"--vin must be positive, got {args.vin}")

    report = protocol_snr(params, v_in)
    print(f"Channel SNR R = {params.R:.6g}   r = {params.r:.6g}   V_in = {_format_pair(v_in)}")
    print("\n".join(format_snr(report)))
    if report.agrees_with_reference_formula:
        print("  first-principles value agrees with the reference closed form")
    else:
        reference = report.reference_formula_value or (math.nan, math.nan)
        note = "non-positive denominator" if reference[0] <= 0 or math.isinf(reference[0]) else "different value"
        print(f"  note: reference closed form diverges from the first-principles value ({note})")

    mc = None
    if args.shots is not None:
        seed = args.seed if args.seed is not None else config.mc.seed
        mc = MCSection(shots=args.shots, seed=seed, chunk=config.mc.chunk)
        cfg = MCConfig(**mc.model_dump(exclude_none=True))
        print("\n".join(format_snr(estimate_channel_snr(params, cfg, v_in))))

    emit_config_if_requested(args, config.model_copy(update={
        "protocol": section,
        "mc": mc or config.mc,
    }))
    return EXIT_OK
