"""
Pytest configuration and shared fixtures for the transfer simulator tests.

This module provides:
- Settings isolation (cached settings cleared around each test)
- Small registries and states for the Gaussian algebra
- Factory fixtures for protocol parameters and built circuits
- In-process runner for the command line
"""
from typing import NamedTuple

import pytest

from app.core.config import get_settings
from app.main import run
from app.models.schemas import GainPolicy, ProtocolParams
from app.services.gaussian import (
    BasisMode,
    CoherentInput,
    EprHalf,
    Vacuum,
    identity_exprs,
    make_registry,
)
from app.services.protocol import build_transfer


# ============================================================================
# SETTINGS FIXTURES
# ============================================================================

@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Clear cached settings so env overrides in a test take effect."""
    for name in ("SQT_MC_WORKERS", "SQT_MC_CHUNK", "SQT_SIGMA_TOLERANCE"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def small_check_settings(monkeypatch):
    """Scale the check suite down so it runs in a unit-test budget."""
    monkeypatch.setenv("SQT_CHECK_SHOTS", "40000")
    monkeypatch.setenv("SQT_CHECK_RANDOM_CIRCUITS", "50")
    monkeypatch.setenv("SQT_CHECK_SIGMA_TOLERANCE", "5")
    get_settings.cache_clear()
    return get_settings()


# ============================================================================
# REGISTRY FIXTURES
# ============================================================================

@pytest.fixture
def epr_modes() -> list[BasisMode]:
    """Coherent input, one vacuum and an EPR pair with r=0.5."""
    return [
        BasisMode("a", CoherentInput(1.0, -2.0)),
        BasisMode("v", Vacuum()),
        BasisMode("e1", EprHalf("p", 1, 0.5)),
        BasisMode("e2", EprHalf("p", 2, 0.5)),
    ]


@pytest.fixture
def epr_registry(epr_modes):
    """Registry and basis state built from ``epr_modes``."""
    return make_registry(epr_modes)


@pytest.fixture
def epr_exprs(epr_registry) -> dict:
    registry, _ = epr_registry
    return identity_exprs(registry)


# ============================================================================
# FACTORY FUNCTIONS
# ============================================================================

@pytest.fixture
def params_factory():
    """Factory fixture to create protocol parameters with defaults."""
    def _create_params(
        R: float = 0.5,
        r: float = 0.0,
        eta: float = 1.0,
        gain: str | float = "auto",
        M: int | None = None,
        **kwargs,
    ) -> ProtocolParams:
        if M is not None:
            return ProtocolParams.for_cloning(M, r, eta=eta, **kwargs)
        if gain == "auto":
            return ProtocolParams(R=R, r=r, eta=eta, **kwargs)
        if gain == "loss-comp":
            return ProtocolParams(R=R, r=r, eta=eta, gain_policy=GainPolicy.LOSS_COMPENSATED, **kwargs)
        return ProtocolParams(R=R, r=r, eta=eta, gain_policy=GainPolicy.MANUAL, gain=float(gain), **kwargs)

    return _create_params


@pytest.fixture
def transfer_factory(params_factory):
    """Factory fixture returning built protocol outputs."""
    def _build(**kwargs):
        return build_transfer(params_factory(**kwargs))

    return _build


# ============================================================================
# COMMAND LINE
# ============================================================================

class CliResult(NamedTuple):
    code: int
    out: str
    err: str


@pytest.fixture
def cli(capsys):
    """Run ``sqt`` in-process and capture its exit code and streams."""
    def _run(*argv: str) -> CliResult:
        code = run(list(argv))
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return _run
