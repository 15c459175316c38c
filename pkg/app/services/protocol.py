"""
Partially disembodied transfer circuit.

Alice splits the unknown input at reflectivity R, performs a Bell measurement
on the reflected part and her EPR half, and displaces the transmitted part by
the outcome. The displaced beam (the semi-quantum channel) travels to Bob,
possibly through loss, where it is mixed at reflectivity R with Bob's EPR half.
In cloning mode the second output is split further into M-1 clones.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from app.core.exceptions import DomainError
from app.core.patterns.composite import (
    BalancedSplit,
    BeamSplitter,
    BellFeedforward,
    Circuit,
    Loss,
)
from app.core.patterns.strategy import gain_for
from app.models.schemas import FidelityReport, GainPolicy, ProtocolParams
from app.services import metrics
from app.services.gaussian import (
    SCALAR_TOL,
    BasisMode,
    BasisState,
    CoherentInput,
    EprHalf,
    ModeExpr,
    Vacuum,
    identity_exprs,
    make_registry,
    require_physical,
)

logger = logging.getLogger(__name__)

INPUT = "a_in"
ALICE_VACUUM = "v1"
EPR_PAIR = "epr"
EPR_HALVES = ("b_epr1", "b_epr2")
CHANNEL_VACUUM = "v_c"


def ancilla_ids(M: int | None) -> list[str]:
    if M is None or M <= 2:
        return []
    return [f"v_b{k}" for k in range(1, M - 1)]


def clone_ids(M: int | None) -> list[str]:
    if M is None:
        return []
    return [f"clone{k}" for k in range(1, M)]


def epr_roles(params: ProtocolParams) -> tuple[str, str]:
    """Return (alice_half, bob_half) basis ids."""
    first, second = EPR_HALVES
    return (second, first) if params.swap_epr_halves else (first, second)


def protocol_modes(params: ProtocolParams) -> list[BasisMode]:
    mean_x, mean_y = params.input_mean
    modes = [
        BasisMode(INPUT, CoherentInput(mean_x, mean_y), "input"),
        BasisMode(ALICE_VACUUM, Vacuum(), "Alice BS vacuum"),
        BasisMode(EPR_HALVES[0], EprHalf(EPR_PAIR, 1, params.r), "EPR half 1"),
        BasisMode(EPR_HALVES[1], EprHalf(EPR_PAIR, 2, params.r), "EPR half 2"),
    ]
    if params.eta < 1.0:
        modes.append(BasisMode(CHANNEL_VACUUM, Vacuum(), "channel loss vacuum"))
    modes.extend(BasisMode(a, Vacuum(), f"splitter ancilla {a[3:]}") for a in ancilla_ids(params.M))
    return modes


def build_circuit(params: ProtocolParams, g: float) -> Circuit:
    alice_epr, bob_epr = epr_roles(params)
    circuit = Circuit("partially disembodied transfer")
    circuit.add(BeamSplitter(INPUT, ALICE_VACUUM, params.R, "alice_t", "alice_r", name="Alice BS"))
    circuit.add(BellFeedforward("alice_t", "alice_r", alice_epr, g, "channel"))
    if params.eta < 1.0:
        circuit.add(Loss("channel", params.eta, CHANNEL_VACUUM, name="Channel loss"))
    circuit.add(BeamSplitter("channel", bob_epr, params.R, "out1", "out2", name="Bob BS"))
    if params.M is not None and params.M > 2:
        circuit.add(BalancedSplit("out2", ancilla_ids(params.M), clone_ids(params.M)))
    return circuit


@dataclass(frozen=True)
class ProtocolOutputs:
    params: ProtocolParams
    state: BasisState
    channel: ModeExpr
    out1: ModeExpr
    out2: ModeExpr
    g_used: float
    circuit: Circuit
    clones: list[ModeExpr] | None = None
    unity_gain: bool = field(default=True)

    def named_outputs(self) -> dict[str, ModeExpr]:
        """Final output modes: out1 plus out2 or, in cloning mode, the clones."""
        if self.clones is None:
            return {"out1": self.out1, "out2": self.out2}
        return {"out1": self.out1, **{c.label: c for c in self.clones}}


def build_transfer(params: ProtocolParams) -> ProtocolOutputs:
    """
    Build the transfer (or 1->M cloning) circuit and its output expressions.

    Raises:
        DomainError: R=1 with the cancellation policy, or other out-of-domain input
        PhysicalityError: If an output violates the commutation relations
    """
    g = gain_for(params)
    registry, state = make_registry(protocol_modes(params))
    circuit = build_circuit(params, g)
    fields = circuit.apply(identity_exprs(registry))

    clones = None
    if params.M is not None:
        clones = [fields[c] for c in clone_ids(params.M)] if params.M > 2 else [fields["out2"]]

    outputs = [fields["out1"], *(clones or [fields["out2"]])]
    require_physical([fields["channel"]])
    require_physical(outputs)

    alpha, beta = fields["out1"].ladder(INPUT)
    unity_gain = abs(alpha - 1.0) <= SCALAR_TOL and abs(beta) <= SCALAR_TOL
    if not unity_gain:
        logger.info(
            "Output 1 is not at unity gain (input coefficient %.6g, g=%.6g, eta=%.6g)",
            alpha, g, params.eta,
        )
    if params.gain_policy != GainPolicy.MANUAL and unity_gain and params.R < 1.0:
        channel_alpha, _ = fields["channel"].ladder(INPUT)
        expected = 1.0 / math.sqrt(1.0 - params.R)
        if abs(channel_alpha - expected) > SCALAR_TOL * max(1.0, expected):
            raise DomainError(
                f"Channel carries {channel_alpha:.15g} of the input, expected {expected:.15g}"
            )

    logger.debug("Built transfer circuit for %s with g=%.6g", params, g)
    return ProtocolOutputs(
        params=params,
        state=state,
        channel=fields["channel"],
        out1=fields["out1"],
        out2=fields["out2"],
        g_used=g,
        circuit=circuit,
        clones=clones,
        unity_gain=unity_gain,
    )


def teleport_limit_outputs(r: float, R_grid: Sequence[float]) -> list[FidelityReport]:
    """Output-1 fidelity along a grid of R approaching the teleportation limit R -> 1."""
    reports = []
    for R in R_grid:
        if not 0.0 <= R < 1.0:
            raise DomainError(f"Teleport-limit grid must lie in [0, 1), got R={R}")
        outputs = build_transfer(ProtocolParams(R=R, r=r))
        reports.append(metrics.fidelity_coherent(
            outputs.out1,
            outputs.state,
            boundary=metrics.fidelity_bound_transfer(R),
            label=f"out1@R={R:g}",
        ))
    return reports

