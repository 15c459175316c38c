import argparse
import logging
from concurrent.futures import ThreadPoolExecutor

from app.api.common import (
    EXIT_OK,
    add_config_arguments,
    add_protocol_arguments,
    emit_config_if_requested,
    format_fidelity,
    load_config,
    merge_protocol,
    parse_float_list,
    parse_grid,
    params_from_section,
)
from app.core.config import get_settings
from app.core.exceptions import UsageError
from app.core.patterns.adapter_facade import write_csv_table
from app.core.patterns.visitor import CircuitReportVisitor
from app.models.schemas import ProtocolSection, SweepSection
from app.services.metrics import output_fidelities
from app.services.protocol import build_transfer

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["R", "r", "eta", "g", "F_out1", "F_out2", "F_boundary", "VX_out1", "VY_out1"]
TRANSFER_COLUMNS = ["output", "F", "VX", "VY", "gain_x", "gain_y", "F_boundary"]


def register(subparsers: argparse._SubParsersAction) -> None:
    transfer = subparsers.add_parser("transfer", help="build one transfer circuit and report fidelities")
    add_protocol_arguments(transfer)
    transfer.add_argument("--csv", default=None, help="write the per-output table to this path")
    transfer.add_argument("--show-circuit", action="store_true", dest="show_circuit")
    transfer.set_defaults(func=cmd_transfer)

    sweep = subparsers.add_parser("sweep", help="fidelity over a grid of R and r (CSV)")
    sweep.add_argument("--R-grid", default=None, dest="R_grid", help="start:stop:steps")
    sweep.add_argument("--r-list", default=None, dest="r_list", help="r1,r2,...")
    sweep.add_argument("--eta", type=float, default=None)
    sweep.add_argument("--gain", default=None, help="auto | loss-comp | <real>")
    sweep.add_argument("--csv", default=None, help="output CSV path")
    add_config_arguments(sweep)
    sweep.set_defaults(func=cmd_sweep)


def cmd_transfer(args: argparse.Namespace) -> int:
    config = load_config(args)
    section = merge_protocol(args, config)
    params = params_from_section(section, swap_epr=args.swap_epr)
    outputs = build_transfer(params)
    reports = output_fidelities(outputs)

    print(f"Transfer R = {params.R:.6g}   r = {params.r:.6g}   eta = {params.eta:.6g}   g = {outputs.g_used:.6f}")
    for name, report in reports.items():
        print("\n".join(format_fidelity(name, report)))

    if args.show_circuit:
        visitor = CircuitReportVisitor()
        outputs.circuit.accept(visitor)
        print(visitor.get_report())

    csv_path = args.csv or config.output.csv
    if csv_path:
        settings = get_settings()
        write_csv_table(
            csv_path,
            TRANSFER_COLUMNS,
            [
                [name, rep.F, rep.VX, rep.VY, rep.gain_x, rep.gain_y, rep.boundary_classical]
                for name, rep in reports.items()
            ],
            settings.CSV_FLOAT_FORMAT,
        )
    emit_config_if_requested(args, config.model_copy(update={
        "protocol": section,
        "output": config.output.model_copy(update={"csv": csv_path}),
    }))
    return EXIT_OK


def sweep_row(section: ProtocolSection, R: float, r: float) -> list[float]:
    params = params_from_section(section.model_copy(update={"r": r, "sq_db": None, "M": None}), R=R)
    outputs = build_transfer(params)
    reports = output_fidelities(outputs)
    out1, out2 = reports["out1"], reports["out2"]
    return [R, r, params.eta, outputs.g_used, out1.F, out2.F, out1.boundary_classical, out1.VX, out1.VY]


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args)
    section = merge_protocol(args, config)
    grid_text = args.R_grid or config.sweep.R_grid
    if not grid_text:
        raise UsageError("--R-grid is required")
    R_grid = parse_grid(grid_text)
    r_list = parse_float_list(args.r_list) if args.r_list else list(config.sweep.r_list) or [0.0]
    csv_path = args.csv or config.output.csv
    if not csv_path:
        raise UsageError("--csv is required for a sweep")

    points = [(R, r) for r in r_list for R in R_grid]
    logger.info("Sweeping %d grid points", len(points))
    settings = get_settings()
    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        rows = list(pool.map(lambda point: sweep_row(section, *point), points))

    write_csv_table(csv_path, SWEEP_COLUMNS, rows, settings.CSV_FLOAT_FORMAT)
    print(f"Wrote {len(rows)} rows to {csv_path}")
    emit_config_if_requested(args, config.model_copy(update={
        "protocol": section,
        "sweep": SweepSection(R_grid=grid_text, r_list=r_list),
        "output": config.output.model_copy(update={"csv": csv_path}),
    }))
    return EXIT_OK

