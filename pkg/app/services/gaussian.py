"""
Gaussian basis-mode algebra.

Quadratures are normalised so that the vacuum variance is 1 and [X, Y] = 2i,
with a = (X + iY)/2. Every optical mode of a circuit is represented in the
Heisenberg picture as a real linear form over the quadratures of a fixed set of
basis modes. A creation-operator term c*b^dagger contributes +c on X_b and -c
on Y_b, so no complex operator is ever stored.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from app.core.exceptions import (
    DomainError,
    PhysicalityError,
    RegistryError,
    RegistryMismatchError,
)

logger = logging.getLogger(__name__)

ALGEBRA_TOL = 1e-9
SCALAR_TOL = 1e-12

Quadrature = Literal["X", "Y"]
_QUAD_ROW: dict[str, int] = {"X": 0, "Y": 1}


# ============================================================================
# BASIS MODES
# ============================================================================

@dataclass(frozen=True)
class CoherentInput:
    """Coherent state: identity covariance displaced to (mean_x, mean_y)."""
    mean_x: float = 0.0
    mean_y: float = 0.0


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class EprHalf:
    """One half of a two-mode squeezed vacuum with squeezing factor r."""
    pair_id: str
    index: int
    r: float

    def __post_init__(self):
        if self.index not in (1, 2):
            raise RegistryError(f"EPR half index must be 1 or 2, got {self.index}")


ModeKind = CoherentInput | Vacuum | EprHalf


@dataclass(frozen=True)
class BasisMode:
    id: str
    kind: ModeKind
    label: str = ""

    @property
    def display_name(self) -> str:
        return self.label or self.id


@dataclass(frozen=True)
class Registry:
    """Ordered, duplicate-free collection of basis modes."""
    modes: tuple[BasisMode, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for position, mode in enumerate(self.modes):
            if mode.id in index:
                raise RegistryError(f"Duplicate basis mode id: {mode.id!r}")
            index[mode.id] = position
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def ids(self) -> list[str]:
        return [mode.id for mode in self.modes]

    def index(self, mode_id: str) -> int:
        try:
            return self._index[mode_id]
        except KeyError:
            raise RegistryError(f"Unknown basis mode id: {mode_id!r}") from None

    def mode(self, mode_id: str) -> BasisMode:
        return self.modes[self.index(mode_id)]

    def input_mode(self) -> BasisMode:
        """Return the unique coherent input mode of the registry."""
        inputs = [m for m in self.modes if isinstance(m.kind, CoherentInput)]
        if len(inputs) != 1:
            raise RegistryError(
                f"Expected exactly one coherent input mode, found {len(inputs)}"
            )
        return inputs[0]


@dataclass(frozen=True)
class SymplecticForm:
    """Block-diagonal form with 2x2 blocks [[0, 1], [-1, 0]] over n modes."""
    n: int

    @cached_property
    def matrix(self) -> np.ndarray:
        omega = np.kron(np.eye(self.n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        omega.flags.writeable = False
        return omega


# ============================================================================
# GAUSSIAN STATISTICS
# ============================================================================

def make_epr_covariance(r: float) -> np.ndarray:
    """
    Covariance of a two-mode squeezed vacuum over (X1, Y1, X2, Y2).

    Var(X1 - X2) = Var(Y1 + Y2) = 2 e^{-2r} and Var(X1 + X2) = Var(Y1 - Y2) = 2 e^{2r}.

    Raises:
        DomainError: If r is negative or not finite
    """
    if not math.isfinite(r) or r < 0:
        raise DomainError(f"Squeezing factor must be a finite value >= 0, got {r}")
    c = math.cosh(2 * r)
    s = math.sinh(2 * r)
    return np.array([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, -s],
        [s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])


def squeezing_from_db(db: float) -> float:
    """Squeezing factor r for a squeezing level in dB, where dB = 10 log10(e^{2r})."""
    if not math.isfinite(db) or db < 0:
        raise DomainError(f"Squeezing in dB must be a finite value >= 0, got {db}")
    return db * math.log(10) / 20


def squeezing_to_db(r: float) -> float:
    return 20 * r / math.log(10)


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a 2N x 2N covariance, ascending (length N)."""
    n = cov.shape[0] // 2
    spectrum = np.linalg.eigvals(SymplecticForm(n).matrix @ cov)
    return np.sort(np.abs(spectrum))[::2]


@dataclass(frozen=True, eq=False)
class BasisState:
    """Mean vector and covariance over (X1, Y1, ..., XN, YN) of a registry."""
    registry: Registry
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        n = 2 * len(self.registry)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (n,) or cov.shape != (n, n):
            raise RegistryMismatchError(
                f"State shapes {mean.shape}/{cov.shape} do not match a registry of "
                f"{len(self.registry)} modes"
            )
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def modes(self) -> tuple[BasisMode, ...]:
        return self.registry.modes

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def is_physical(self, tol: float = ALGEBRA_TOL) -> bool:
        if not np.allclose(self.cov, self.cov.T, atol=tol, rtol=0.0):
            return False
        return bool(np.all(self.symplectic_eigenvalues() >= 1 - tol))


def _validate_epr_pairs(modes: Sequence[BasisMode]) -> None:
    pairs: dict[str, list[BasisMode]] = {}
    for mode in modes:
        if isinstance(mode.kind, EprHalf):
            if not math.isfinite(mode.kind.r) or mode.kind.r < 0:
                raise RegistryError(
                    f"EPR half {mode.id!r} has invalid squeezing r={mode.kind.r}"
                )
            pairs.setdefault(mode.kind.pair_id, []).append(mode)

    for pair_id, halves in pairs.items():
        indices = sorted(h.kind.index for h in halves)
        if indices != [1, 2]:
            raise RegistryError(
                f"EPR pair {pair_id!r} must have exactly halves 1 and 2, got {indices}"
            )
        if halves[0].kind.r != halves[1].kind.r:
            raise RegistryError(f"EPR pair {pair_id!r} halves disagree on r")


def _assemble(registry: Registry, modes: Sequence[BasisMode]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and block-diagonal covariance of ``modes`` placed in ``registry`` order."""
    n = 2 * len(registry)
    mean = np.zeros(n)
    cov = np.zeros((n, n))
    done: set[str] = set()

    for mode in modes:
        j = 2 * registry.index(mode.id)
        kind = mode.kind
        if isinstance(kind, EprHalf):
            if kind.pair_id in done:
                continue
            partner = next(
                m for m in modes
                if isinstance(m.kind, EprHalf)
                and m.kind.pair_id == kind.pair_id
                and m.id != mode.id
            )
            first, second = (mode, partner) if kind.index == 1 else (partner, mode)
            slots = [2 * registry.index(first.id), 2 * registry.index(first.id) + 1,
                     2 * registry.index(second.id), 2 * registry.index(second.id) + 1]
            cov[np.ix_(slots, slots)] = make_epr_covariance(kind.r)
            done.add(kind.pair_id)
        else:
            cov[j:j + 2, j:j + 2] = np.eye(2)
            if isinstance(kind, CoherentInput):
                mean[j:j + 2] = (kind.mean_x, kind.mean_y)
    return mean, cov


def make_registry(modes: Sequence[BasisMode]) -> tuple[Registry, BasisState]:
    """
    Build a registry and its Gaussian basis state from mode descriptors.

    Vacuum and coherent modes get identity covariance blocks; each EPR pair gets
    the 4x4 two-mode squeezed block, wherever its halves sit in the ordering.

    Raises:
        RegistryError: On duplicate ids, unmatched EPR halves or negative r
    """
    registry = Registry(tuple(modes))
    _validate_epr_pairs(registry.modes)
    mean, cov = _assemble(registry, registry.modes)
    logger.debug("Registry built with modes %s", registry.ids)
    return registry, BasisState(registry, mean, cov)


def extend_state(state: BasisState, modes: Sequence[BasisMode]) -> BasisState:
    """Append fresh basis modes to a state, keeping the existing statistics."""
    registry = Registry(state.registry.modes + tuple(modes))
    _validate_epr_pairs(registry.modes)
    mean, cov = _assemble(registry, list(modes))
    n = 2 * len(state.registry)
    mean[:n] = state.mean
    cov[:n, :n] = state.cov
    return BasisState(registry, mean, cov)


# ============================================================================
# MODE EXPRESSIONS
# ============================================================================

@dataclass(frozen=True, eq=False)
class ModeExpr:
    """
    An optical mode as a linear form over basis quadratures.

    ``coeffs`` is a 2 x 2N matrix mapping (X1, Y1, ..., XN, YN) to this mode's
    (X, Y); ``disp`` is a constant displacement added on top.
    """
    registry: Registry
    coeffs: np.ndarray
    disp: tuple[float, float] = (0.0, 0.0)
    label: str = ""

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (2, 2 * len(self.registry)):
            raise RegistryMismatchError(
                f"Coefficient shape {coeffs.shape} does not match a registry of "
                f"{len(self.registry)} modes"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "disp", (float(self.disp[0]), float(self.disp[1])))

    def require_registry(self, registry: Registry) -> None:
        if registry is not self.registry and registry != self.registry:
            raise RegistryMismatchError(
                f"Expression {self.label or '<unnamed>'} belongs to a different registry"
            )

    def __add__(self, other: ModeExpr) -> ModeExpr:
        self.require_registry(other.registry)
        return ModeExpr(
            self.registry,
            self.coeffs + other.coeffs,
            (self.disp[0] + other.disp[0], self.disp[1] + other.disp[1]),
        )

    def __sub__(self, other: ModeExpr) -> ModeExpr:
        return self + (-1.0) * other

    def __mul__(self, factor: float) -> ModeExpr:
        return ModeExpr(
            self.registry,
            factor * self.coeffs,
            (factor * self.disp[0], factor * self.disp[1]),
        )

    __rmul__ = __mul__

    def __neg__(self) -> ModeExpr:
        return (-1.0) * self

    def dagger(self) -> ModeExpr:
        """Hermitian conjugate: X is unchanged, Y changes sign."""
        flip = np.array([[1.0], [-1.0]])
        return ModeExpr(self.registry, flip * self.coeffs, (self.disp[0], -self.disp[1]))

    def displaced(self, dx: float, dy: float) -> ModeExpr:
        return ModeExpr(
            self.registry, self.coeffs, (self.disp[0] + dx, self.disp[1] + dy), self.label
        )

    def with_label(self, label: str) -> ModeExpr:
        return ModeExpr(self.registry, self.coeffs, self.disp, label)

    def row(self, quad: Quadrature) -> np.ndarray:
        return self.coeffs[_QUAD_ROW[quad]]

    def ladder(self, mode_id: str) -> tuple[float, float]:
        """
        Return (alpha, beta) such that this mode contains alpha*b + beta*b^dagger
        for basis mode ``mode_id``.
        """
        j = 2 * self.registry.index(mode_id)
        cx = self.coeffs[0, j]
        cy = self.coeffs[1, j + 1]
        return float((cx + cy) / 2), float((cx - cy) / 2)

    def involves(self, mode_id: str) -> bool:
        j = 2 * self.registry.index(mode_id)
        return bool(np.any(self.coeffs[:, j:j + 2] != 0.0))

    def lift(self, registry: Registry) -> ModeExpr:
        """Re-express over a registry that contains every mode of this one."""
        coeffs = np.zeros((2, 2 * len(registry)))
        for old, mode in enumerate(self.registry.modes):
            new = registry.index(mode.id)
            coeffs[:, 2 * new:2 * new + 2] = self.coeffs[:, 2 * old:2 * old + 2]
        return ModeExpr(registry, coeffs, self.disp, self.label)


def identity_mode_expr(registry: Registry, mode_id: str) -> ModeExpr:
    coeffs = np.zeros((2, 2 * len(registry)))
    j = 2 * registry.index(mode_id)
    coeffs[:, j:j + 2] = np.eye(2)
    return ModeExpr(registry, coeffs, label=registry.mode(mode_id).display_name)


def identity_exprs(registry: Registry) -> dict[str, ModeExpr]:
    return {mode_id: identity_mode_expr(registry, mode_id) for mode_id in registry.ids}


# ============================================================================
# MOMENTS
# ============================================================================

def output_covariance(expr: ModeExpr, state: BasisState) -> np.ndarray:
    """2x2 covariance of (X, Y) for a mode expression."""
    expr.require_registry(state.registry)
    return expr.coeffs @ state.cov @ expr.coeffs.T


def variance(expr: ModeExpr, state: BasisState, quad: Quadrature) -> float:
    expr.require_registry(state.registry)
    row = expr.row(quad)
    return float(row @ state.cov @ row)


def mean(expr: ModeExpr, state: BasisState) -> tuple[float, float]:
    expr.require_registry(state.registry)
    mx, my = expr.coeffs @ state.mean
    return float(mx + expr.disp[0]), float(my + expr.disp[1])


# ============================================================================
# COMMUTATOR CHECKS
# ============================================================================

@dataclass(frozen=True)
class CommutatorViolation:
    subject: str
    kind: Literal["self", "cross", "registry"]
    deviation: float

    def describe(self) -> str:
        return f"{self.kind} commutator of {self.subject} off by {self.deviation:.3e}"


@dataclass(frozen=True)
class CommutatorReport:
    checked: int
    violations: tuple[CommutatorViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> list[str]:
        return [v.describe() for v in self.violations]


def check_commutators(
    exprs: Sequence[ModeExpr],
    *,
    mutually_commuting: bool = True,
    tol: float = ALGEBRA_TOL,
) -> CommutatorReport:
    """
    Check canonical commutation relations of a set of modes.

    Every mode must satisfy C Omega C^T = Omega_1. When ``mutually_commuting`` is
    set the modes are treated as distinct outputs of one passive network and
    every cross form C_a Omega C_b^T must vanish.
    """
    violations: list[CommutatorViolation] = []
    omega_1 = SymplecticForm(1).matrix
    names = [e.label or f"expr[{i}]" for i, e in enumerate(exprs)]

    for name, expr in zip(names, exprs):
        omega = SymplecticForm(len(expr.registry)).matrix
        deviation = float(np.max(np.abs(expr.coeffs @ omega @ expr.coeffs.T - omega_1)))
        if not deviation <= tol:
            violations.append(CommutatorViolation(name, "self", deviation))

    if mutually_commuting:
        for i in range(len(exprs)):
            for j in range(i + 1, len(exprs)):
                a, b = exprs[i], exprs[j]
                pair = f"({names[i]}, {names[j]})"
                if a.registry != b.registry:
                    violations.append(CommutatorViolation(pair, "registry", math.inf))
                    continue
                omega = SymplecticForm(len(a.registry)).matrix
                deviation = float(np.max(np.abs(a.coeffs @ omega @ b.coeffs.T)))
                if not deviation <= tol:
                    violations.append(CommutatorViolation(pair, "cross", deviation))

    return CommutatorReport(checked=len(exprs), violations=tuple(violations))


def require_physical(exprs: Sequence[ModeExpr], **kwargs) -> None:
    report = check_commutators(exprs, **kwargs)
    if not report.ok:
        raise PhysicalityError("; ".join(report.describe()))
