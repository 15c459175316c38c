"""
Optical circuit elements as transformations of mode expressions.

Global beamsplitter convention, for reflectivity R:

    out_t = sqrt(1-R) a + sqrt(R) b
    out_r = sqrt(R) a - sqrt(1-R) b

Loss uses an amplitude transmission eta with a sqrt(1-eta^2) vacuum admixture.
"""
import math

import numpy as np

from app.core.exceptions import DomainError
from app.services.gaussian import ModeExpr, Vacuum


def _check_unit_interval(value: float, name: str) -> None:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def _check_transmission(eta: float) -> None:
    if not math.isfinite(eta) or not 0.0 < eta <= 1.0:
        raise DomainError(f"Transmission eta must lie in (0, 1], got {eta}")


def _require_fresh_vacuum(fresh: ModeExpr, *consumers: ModeExpr) -> str:
    """Return the basis id of ``fresh`` after checking it is an unused vacuum."""
    fresh.require_registry(consumers[0].registry)
    support = [
        mode.id for j, mode in enumerate(fresh.registry.modes)
        if np.any(fresh.coeffs[:, 2 * j:2 * j + 2] != 0.0)
    ]
    if len(support) != 1:
        raise DomainError("Fresh vacuum must be the identity expression of one basis mode")
    mode_id = support[0]
    j = 2 * fresh.registry.index(mode_id)
    if not isinstance(fresh.registry.mode(mode_id).kind, Vacuum):
        raise DomainError(f"Basis mode {mode_id!r} is not a vacuum mode")
    if not np.array_equal(fresh.coeffs[:, j:j + 2], np.eye(2)) or fresh.disp != (0.0, 0.0):
        raise DomainError(f"Vacuum {mode_id!r} has already been transformed")
    for consumer in consumers:
        if consumer.involves(mode_id):
            raise DomainError(f"Vacuum {mode_id!r} is already consumed by another element")
    return mode_id


def apply_beamsplitter(a: ModeExpr, b: ModeExpr, R: float) -> tuple[ModeExpr, ModeExpr]:
    """Mix two modes at reflectivity R; returns (transmitted, reflected)."""
    _check_unit_interval(R, "Reflectivity R")
    a.require_registry(b.registry)
    t = math.sqrt(1.0 - R)
    rho = math.sqrt(R)
    return t * a + rho * b, rho * a - t * b


def apply_bell_feedforward(
    t: ModeExpr, r_expr: ModeExpr, epr1: ModeExpr, g: float
) -> ModeExpr:
    """
    Displace the transmitted beam by the outcome of a CV Bell measurement.

    The joint homodyne measurement of (reflected, EPR half) yields the commuting
    pair X_r - X_e and Y_r + Y_e, i.e. the combination r - e^dagger, which is
    fed forward with scaling g/sqrt(2).
    """
    if not math.isfinite(g) or g < 0:
        raise DomainError(f"Feedforward gain must be a finite value >= 0, got {g}")
    t.require_registry(r_expr.registry)
    t.require_registry(epr1.registry)
    return t + (g / math.sqrt(2.0)) * (r_expr - epr1.dagger())


def cancellation_gain(R: float) -> float:
    """Gain sqrt(2R/(1-R)) that removes the beamsplitter vacuum from the channel."""
    if not math.isfinite(R) or not 0.0 <= R < 1.0:
        if R == 1.0:
            raise DomainError(
                "Cancellation gain diverges at R=1; approach the teleportation "
                "limit with a sweep over R < 1 instead"
            )
        raise DomainError(f"Reflectivity R must lie in [0, 1), got {R}")
    return math.sqrt(2.0 * R / (1.0 - R))


def loss_compensated_gain(R: float, eta: float) -> float:
    """Gain keeping the channel's input coefficient at 1/sqrt(1-R) under loss eta."""
    if not math.isfinite(R) or not 0.0 < R < 1.0:
        raise DomainError(f"Loss-compensated gain needs 0 < R < 1, got R={R}")
    _check_transmission(eta)
    return math.sqrt(2.0) * (1.0 - eta * (1.0 - R)) / (eta * math.sqrt(R * (1.0 - R)))


def apply_loss(e: ModeExpr, eta: float, fresh: ModeExpr) -> ModeExpr:
    _check_transmission(eta)
    _require_fresh_vacuum(fresh, e)
    return eta * e + math.sqrt(1.0 - eta * eta) * fresh


def apply_balanced_split(input: ModeExpr, ancillas: list[ModeExpr]) -> list[ModeExpr]:
    """
    Split one mode into len(ancillas)+1 outputs, each carrying 1/sqrt(len+1) of it.

    Cascade of two-port beamsplitters: with n outputs still to produce, the stage
    transmits 1/n of the remaining field (R = (n-1)/n), so the first output picks
    up +sqrt(n-1)/sqrt(n) of its ancilla.
    """
    seen: set[str] = set()
    for ancilla in ancillas:
        mode_id = _require_fresh_vacuum(ancilla, input)
        if mode_id in seen:
            raise DomainError(f"Ancilla {mode_id!r} is used more than once")
        seen.add(mode_id)

    outputs: list[ModeExpr] = []
    remaining = input
    n_outputs = len(ancillas) + 1
    for k, ancilla in enumerate(ancillas):
        n_left = n_outputs - k
        tapped, remaining = apply_beamsplitter(remaining, ancilla, (n_left - 1) / n_left)
        outputs.append(tapped)
    outputs.append(remaining)
    return outputs
