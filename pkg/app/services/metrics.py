"""
Fidelity, fidelity boundaries, cloning fidelities and channel signal-to-noise.

Fidelity with a coherent input uses the full 2x2 output covariance V and the
mean offset D between output and input:

    F = 2 / sqrt(det(I + V)) * exp(-D^T (I + V)^-1 D / 2)

which reduces to 2/sqrt((1+VX)(1+VY)) at unity gain.
"""
from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Sequence

import numpy as np

from app.core.exceptions import ConsistencyError, DomainError
from app.models.schemas import CloneFidelities, FidelityReport, ProtocolParams, SnrReport
from app.services.gaussian import (
    SCALAR_TOL,
    BasisMode,
    BasisState,
    ModeExpr,
    Vacuum,
    extend_state,
    identity_mode_expr,
    mean,
    output_covariance,
    require_physical,
)
from app.services.optics import apply_beamsplitter

if TYPE_CHECKING:
    from app.services.protocol import ProtocolOutputs

logger = logging.getLogger(__name__)

CLASSICAL_LIMIT = 0.5
NO_CLONING_LIMIT = 2.0 / 3.0
PROBE_VACUUM = "v_probe"


# ============================================================================
# FIDELITY
# ============================================================================

def gaussian_overlap_fidelity(cov: np.ndarray, delta: Sequence[float]) -> float:
    """Overlap of a Gaussian output (covariance ``cov``, offset ``delta``) with a coherent state."""
    sigma = np.eye(2) + np.asarray(cov, dtype=float)
    d = np.asarray(delta, dtype=float)
    det = float(np.linalg.det(sigma))
    if det <= 0:
        raise DomainError(f"Output covariance is not positive definite (det(I+V)={det})")
    exponent = -0.5 * float(d @ np.linalg.solve(sigma, d))
    return 2.0 / math.sqrt(det) * math.exp(exponent)


def fidelity_coherent(
    expr: ModeExpr,
    state: BasisState,
    input_mean: tuple[float, float] | None = None,
    *,
    boundary: float = CLASSICAL_LIMIT,
    label: str = "",
) -> FidelityReport:
    """
    Fidelity of an output mode with the coherent input state.

    ``input_mean`` defaults to the mean of the registry's coherent input mode.
    ``boundary`` is the classical boundary the output is compared against.

    Raises:
        PhysicalityError: If ``expr`` violates the commutation relations
    """
    require_physical([expr])
    input_mode = state.registry.input_mode()
    if input_mean is None:
        input_mean = (input_mode.kind.mean_x, input_mode.kind.mean_y)

    cov = output_covariance(expr, state)
    mx, my = mean(expr, state)
    delta = (mx - input_mean[0], my - input_mean[1])
    F = gaussian_overlap_fidelity(cov, delta)

    j = 2 * state.registry.index(input_mode.id)
    gain_x = float(expr.coeffs[0, j])
    gain_y = float(expr.coeffs[1, j + 1])
    unity_gain = abs(gain_x - 1.0) <= SCALAR_TOL and abs(gain_y - 1.0) <= SCALAR_TOL
    offset = max(abs(delta[0]), abs(delta[1]))

    return FidelityReport(
        label=label or expr.label,
        F=min(F, 1.0),
        VX=float(cov[0, 0]),
        VY=float(cov[1, 1]),
        gain_x=gain_x,
        gain_y=gain_y,
        boundary_classical=boundary,
        beats_classical=F > CLASSICAL_LIMIT + SCALAR_TOL,
        beats_no_cloning=F > NO_CLONING_LIMIT + SCALAR_TOL,
        beats_boundary=F > boundary + SCALAR_TOL,
        unity_gain=unity_gain,
        extended_formula=not unity_gain or offset > SCALAR_TOL or abs(cov[0, 1]) > SCALAR_TOL,
    )


def output_fidelities(outputs: ProtocolOutputs) -> dict[str, FidelityReport]:
    """Fidelity report for every final output of a built protocol."""
    params = outputs.params
    boundary = clone_bound(params.M) if params.M is not None else fidelity_bound_transfer(params.R)
    return {
        name: fidelity_coherent(expr, outputs.state, params.input_mean, boundary=boundary, label=name)
        for name, expr in outputs.named_outputs().items()
    }


# ============================================================================
# CLOSED FORMS
# ============================================================================

def fidelity_bound_transfer(R: float) -> float:
    """Boundary 1/(R+1) between classical and quantum transfer."""
    if not math.isfinite(R) or not 0.0 <= R <= 1.0:
        raise DomainError(f"Reflectivity R must lie in [0, 1], got {R}")
    return 1.0 / (R + 1.0)


def clone_bound(M: int) -> float:
    """Classical 1->M cloning boundary M/(2M-1)."""
    if M < 2:
        raise DomainError(f"Cloning needs M >= 2, got {M}")
    return M / (2.0 * M - 1.0)


def transfer_fidelity(R: float, r: float) -> float:
    return 1.0 / (1.0 + R * math.exp(-2.0 * r))


def teleport_limit_fidelity(r: float) -> float:
    return 1.0 / (1.0 + math.exp(-2.0 * r))


def asymmetric_clone_fidelities(r: float) -> tuple[float, float]:
    """(out1, out2) fidelities of the M=2 machine."""
    return 2.0 / (2.0 + math.exp(-2.0 * r)), 2.0 / (2.0 + math.exp(2.0 * r))


def clone_mode_noise(M: int, r: float) -> float:
    """Added quadrature noise of each clone of the 1->M machine."""
    if M < 2:
        raise DomainError(f"Cloning needs M >= 2, got {M}")
    e = math.exp(2.0 * r)
    return (M * M * e + (M - 2) ** 2 / e) / (2.0 * M * (M - 1)) + (M - 2) / (M - 1)


def clone_fidelity_closed(M: int, r: float) -> float:
    return 2.0 / (2.0 + clone_mode_noise(M, r))


def clone_out1_fidelity(M: int, r: float) -> float:
    if M < 2:
        raise DomainError(f"Cloning needs M >= 2, got {M}")
    return M / (M + (M - 1) * math.exp(-2.0 * r))


def clone_fidelities(M: int, r: float, tol: float = SCALAR_TOL) -> CloneFidelities:
    """
    Closed-form cloning fidelities checked against the built circuit.

    Raises:
        ConsistencyError: If any circuit value differs from its closed form by more than ``tol``
    """
    from app.services.protocol import build_transfer

    outputs = build_transfer(ProtocolParams.for_cloning(M, r))
    reports = output_fidelities(outputs)
    f_out1 = reports.pop("out1").F
    f_clones = [report.F for report in reports.values()]

    closed_out1 = clone_out1_fidelity(M, r)
    closed_clone = clone_fidelity_closed(M, r)
    diff = max([abs(f_out1 - closed_out1)] + [abs(f - closed_clone) for f in f_clones])
    if diff > tol:
        raise ConsistencyError(
            f"Cloning M={M}, r={r}: circuit fidelities differ from closed forms by {diff:.3e}"
        )
    return CloneFidelities(
        M=M,
        r=r,
        F_out1_closed=closed_out1,
        F_clone_closed=closed_clone,
        F_out1_circuit=f_out1,
        F_clones_circuit=f_clones,
        max_abs_difference=diff,
    )


# ============================================================================
# SIGNAL TO NOISE
# ============================================================================

def reference_snr_formula(R: float, r: float, input_variance: float) -> float:
    """V_in / [cosh 2r + (1 - cosh 2r)/(1 - R)], evaluated as written."""
    if R >= 1.0:
        return math.nan
    c = math.cosh(2.0 * r)
    denominator = c + (1.0 - c) / (1.0 - R)
    if denominator == 0.0:
        return math.inf
    return input_variance / denominator


def channel_snr_closed_form(R: float, r: float, input_variance: float) -> float:
    """SNR of the lossless cancellation-gain channel under dual homodyne detection."""
    return input_variance / (1.0 + R * (math.cosh(2.0 * r) - 1.0))


def _referred_noise(row: np.ndarray, state: BasisState, input_cols: slice) -> tuple[float, float]:
    """(signal coefficient, noise variance excluding the input) for one measured quadrature."""
    signal_row = np.zeros_like(row)
    signal_row[input_cols] = row[input_cols]
    noise_row = row - signal_row
    coefficient = float(np.linalg.norm(signal_row))
    return coefficient, float(noise_row @ state.cov @ noise_row)


def channel_snr(
    channel: ModeExpr,
    state: BasisState,
    input_variance: tuple[float, float],
    *,
    R: float | None = None,
    r: float | None = None,
) -> SnrReport:
    """
    SNR an eavesdropper reaches by dual homodyne detection of the channel.

    The channel is mixed with a fresh vacuum at a 50% beamsplitter; X is read on
    the transmitted port and Y on the reflected one. Noise is referred to the
    input by dividing by the squared signal coefficient.
    """
    channel.require_registry(state.registry)
    extended = extend_state(state, [BasisMode(PROBE_VACUUM, Vacuum(), "eavesdropper vacuum")])
    probe = identity_mode_expr(extended.registry, PROBE_VACUUM)
    port_x, port_y = apply_beamsplitter(channel.lift(extended.registry), probe, 0.5)

    j = 2 * extended.registry.index(extended.registry.input_mode().id)
    input_cols = slice(j, j + 2)
    snr: list[float] = []
    noise_ref: list[float] = []
    for row, v_in in ((port_x.row("X"), input_variance[0]), (port_y.row("Y"), input_variance[1])):
        coefficient, noise = _referred_noise(row, extended, input_cols)
        if coefficient <= SCALAR_TOL:
            snr.append(0.0)
            noise_ref.append(math.inf)
            continue
        referred = noise / coefficient**2
        noise_ref.append(referred)
        snr.append(v_in / referred if referred > 0 else math.inf)

    reference = None
    agrees = None
    if R is not None and r is not None:
        reference = (
            reference_snr_formula(R, r, input_variance[0]),
            reference_snr_formula(R, r, input_variance[1]),
        )
        agrees = all(
            math.isfinite(p) and abs(s - p) <= SCALAR_TOL * max(1.0, abs(s))
            for s, p in zip(snr, reference)
        )
        if not agrees:
            logger.info("First-principles SNR %s differs from the reference formula %s", snr, reference)

    return SnrReport(
        snr_x=snr[0],
        snr_y=snr[1],
        signal_variance_ref=tuple(input_variance),
        noise_referred_to_input=tuple(noise_ref),
        reference_formula_value=reference,
        agrees_with_reference_formula=agrees,
    )


def protocol_snr(params: ProtocolParams, input_variance: tuple[float, float]) -> SnrReport:
    from app.services.protocol import build_transfer

    outputs = build_transfer(params)
    return channel_snr(outputs.channel, outputs.state, input_variance, R=params.R, r=params.r)

