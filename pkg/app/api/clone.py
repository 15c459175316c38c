import argparse

from app.api.common import (
    EXIT_OK,
    add_config_arguments,
    add_squeezing_arguments,
    emit_config_if_requested,
    load_config,
    merge_protocol,
    squeezing_of,
)
from app.core.config import get_settings
from app.core.exceptions import UsageError
from app.core.patterns.adapter_facade import write_csv_table
from app.services.metrics import clone_bound, clone_fidelities

CLONE_COLUMNS = ["M", "r", "output", "F_circuit", "F_closed", "F_boundary"]


def register(subparsers: argparse._SubParsersAction) -> None:
    clone = subparsers.add_parser("clone", help="1->M cloning machine fidelities")
    clone.add_argument("--M", type=int, default=None, help="number of outputs, M >= 2")
    add_squeezing_arguments(clone)
    clone.add_argument("--csv", default=None)
    add_config_arguments(clone)
    clone.set_defaults(func=cmd_clone)


def cmd_clone(args: argparse.Namespace) -> int:
    config = load_config(args)
    section = merge_protocol(args, config)
    if section.M is None:
        raise UsageError("--M is required")
    if section.M < 2:
        raise UsageError(f"Cloning needs M >= 2, got {section.M}")
    M, r = section.M, squeezing_of(section)

    result = clone_fidelities(M, r)
    print(f"1->{M} cloning   r = {r:.6g}   boundary M/(2M-1) = {clone_bound(M):.6f}")
    print(f"  out1   circuit F = {result.F_out1_circuit:.6f}   closed form = {result.F_out1_closed:.6f}")
    for k, F in enumerate(result.F_clones_circuit, start=1):
        print(f"  clone{k} circuit F = {F:.6f}   closed form = {result.F_clone_closed:.6f}")
    print(f"  max |circuit - closed form| = {result.max_abs_difference:.3e}")

    csv_path = args.csv or config.output.csv
    if csv_path:
        rows = [[M, r, "out1", result.F_out1_circuit, result.F_out1_closed, clone_bound(M)]]
        rows += [
            [M, r, f"clone{k}", F, result.F_clone_closed, clone_bound(M)]
            for k, F in enumerate(result.F_clones_circuit, start=1)
        ]
        write_csv_table(csv_path, CLONE_COLUMNS, rows, get_settings().CSV_FLOAT_FORMAT)

    emit_config_if_requested(args, config.model_copy(update={"protocol": section}))
    return EXIT_OK
