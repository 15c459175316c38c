"""Flag parsing and output helpers shared by every command."""
import argparse
import math
from pathlib import Path

import numpy as np

from app.core.exceptions import OutputError, UsageError
from app.core.patterns.adapter_facade import (
    RUN_CONFIG_ADAPTERS,
    get_adapter_for_file,
    load_run_config,
)
from app.models.schemas import (
    FidelityReport,
    GainPolicy,
    ProtocolParams,
    ProtocolSection,
    RunConfig,
)
from app.services.gaussian import squeezing_from_db

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_OUTPUT = 4
EXIT_MC_FAILED = 5


# ============================================================================
# VALUE PARSERS
# ============================================================================

def parse_pair(text: str) -> tuple[float, float]:
    """Parse ``x,y`` into two finite floats."""
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"Expected a pair 'x,y', got {text!r}")
    try:
        x, y = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"Expected a pair of numbers 'x,y', got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise UsageError(f"Pair values must be finite, got {text!r}")
    return x, y


def parse_float_list(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"Expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise UsageError("Empty list of values")
    return values


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:steps`` into an evenly spaced grid including both ends."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"Expected a grid 'start:stop:steps', got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"Invalid grid {text!r}") from None
    if steps < 1:
        raise UsageError(f"Grid needs at least one step, got {steps}")
    if steps == 1:
        return [start]
    return [float(v) for v in np.linspace(start, stop, steps)]


def parse_gain(text: str) -> tuple[GainPolicy, float | None]:
    if text == "auto":
        return GainPolicy.CANCELLATION, None
    if text == "loss-comp":
        return GainPolicy.LOSS_COMPENSATED, None
    try:
        return GainPolicy.MANUAL, float(text)
    except ValueError:
        raise UsageError(f"--gain must be 'auto', 'loss-comp' or a number, got {text!r}") from None


# ============================================================================
# ARGUMENTS
# ============================================================================

def add_squeezing_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--r", type=float, default=None, help="squeezing factor r >= 0")
    group.add_argument("--sq-db", type=float, default=None, dest="sq_db",
                       help="squeezing in dB, 10*log10(e^{2r})")


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON run configuration file")
    parser.add_argument("--emit-config", default=None, dest="emit_config",
                        help="write the effective run configuration to this path")


def add_protocol_arguments(parser: argparse.ArgumentParser, *, with_R: bool = True) -> None:
    if with_R:
        parser.add_argument("--R", type=float, default=None, help="reflectivity R in [0, 1]")
    add_squeezing_arguments(parser)
    parser.add_argument("--eta", type=float, default=None, help="channel transmission in (0, 1]")
    parser.add_argument("--gain", default=None, help="auto | loss-comp | <real>")
    parser.add_argument("--mean", default=None, help="coherent input mean 'x,y'")
    parser.add_argument("--swap-epr", action="store_true", dest="swap_epr",
                        help="send EPR half 2 to the sender")
    add_config_arguments(parser)


# ============================================================================
# RUN CONFIG RESOLUTION
# ============================================================================

def load_config(args: argparse.Namespace) -> RunConfig:
    path = getattr(args, "config", None)
    return load_run_config(path) if path else RunConfig()


def merge_protocol(args: argparse.Namespace, config: RunConfig) -> ProtocolSection:
    """Flags override values from the run configuration."""
    section = config.protocol
    r, sq_db = getattr(args, "r", None), getattr(args, "sq_db", None)
    if r is None and sq_db is None:
        r, sq_db = section.r, section.sq_db
    if r is not None and sq_db is not None:
        raise UsageError("Give squeezing either as r or in dB, not both")

    mean = getattr(args, "mean", None)
    return ProtocolSection(
        R=getattr(args, "R", None) if getattr(args, "R", None) is not None else section.R,
        r=r,
        sq_db=sq_db,
        eta=args.eta if getattr(args, "eta", None) is not None else section.eta,
        gain=args.gain if getattr(args, "gain", None) is not None else section.gain,
        mean=parse_pair(mean) if mean is not None else section.mean,
        M=getattr(args, "M", None) if getattr(args, "M", None) is not None else section.M,
    )


def squeezing_of(section: ProtocolSection) -> float:
    if section.sq_db is not None:
        return squeezing_from_db(section.sq_db)
    return section.r if section.r is not None else 0.0


def params_from_section(
    section: ProtocolSection, *, R: float | None = None, swap_epr: bool = False
) -> ProtocolParams:
    """
    Build validated protocol parameters.

    Raises:
        UsageError: If R is missing
        pydantic.ValidationError: If the values violate ProtocolParams invariants
    """
    R = R if R is not None else section.R
    if section.M is not None:
        if section.M < 2:
            raise UsageError(f"Cloning needs M >= 2, got {section.M}")
        R = (section.M - 1) / section.M if R is None else R
    if R is None:
        raise UsageError("Reflectivity --R is required")
    policy, gain = parse_gain(section.gain)
    return ProtocolParams(
        R=R,
        r=squeezing_of(section),
        eta=section.eta,
        gain_policy=policy,
        gain=gain,
        M=section.M,
        input_mean=section.mean,
        swap_epr_halves=swap_epr,
    )


def emit_config_if_requested(args: argparse.Namespace, config: RunConfig) -> None:
    path = getattr(args, "emit_config", None)
    if not path:
        return
    adapter = get_adapter_for_file(path) or RUN_CONFIG_ADAPTERS[".json"]
    try:
        Path(path).write_text(adapter.emit(config) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Cannot write {path!r}: {exc}") from exc


# ============================================================================
# OUTPUT
# ============================================================================

def yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def format_fidelity(name: str, report: FidelityReport) -> list[str]:
    lines = [
        f"{name}: F = {report.F:.6f}   VX = {report.VX:.6f}   VY = {report.VY:.6f}",
        f"  gain (x, y) = ({report.gain_x:.6f}, {report.gain_y:.6f})   unity gain: {yes_no(report.unity_gain)}",
        f"  boundary = {report.boundary_classical:.6f}   beats boundary: {yes_no(report.beats_boundary)}"
        f"   beats classical: {yes_no(report.beats_classical)}"
        f"   beats no-cloning: {yes_no(report.beats_no_cloning)}",
    ]
    if report.extended_formula:
        lines.append("  (extended formula: mean mismatch included)")
    return lines
