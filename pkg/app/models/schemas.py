import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import get_settings

# Philox keys are seed ^ stream and must stay below 2**128
MAX_SEED = 1 << 64


class GainPolicy(str, Enum):
    CANCELLATION = "cancellation"
    LOSS_COMPENSATED = "loss-compensated"
    MANUAL = "manual"


class ProtocolParams(BaseModel):
    """Every scalar knob of the transfer protocol."""
    model_config = ConfigDict(frozen=True)

    R: float = Field(ge=0.0, le=1.0)  # destroyed-information fraction
    r: float = Field(default=0.0, ge=0.0)
    eta: float = Field(default=1.0, gt=0.0, le=1.0)  # channel amplitude transmission
    gain_policy: GainPolicy = GainPolicy.CANCELLATION
    gain: float | None = None  # only with the manual policy
    M: int | None = Field(default=None, ge=2)  # cloning mode when set
    input_mean: tuple[float, float] = (0.0, 0.0)
    swap_epr_halves: bool = False

    @model_validator(mode="after")
    def _check_invariants(self) -> "ProtocolParams":
        if not math.isfinite(self.r):
            raise ValueError("Squeezing factor r must be finite")
        if self.M is not None and abs(self.R - (self.M - 1) / self.M) > 1e-12:
            raise ValueError(
                f"Cloning with M={self.M} requires R=(M-1)/M={(self.M - 1) / self.M}, got {self.R}"
            )
        if self.gain_policy == GainPolicy.LOSS_COMPENSATED and not 0.0 < self.R < 1.0:
            raise ValueError("Loss-compensated gain requires 0 < R < 1")
        if self.gain_policy == GainPolicy.MANUAL:
            if self.gain is None or not math.isfinite(self.gain) or self.gain < 0:
                raise ValueError("Manual gain policy requires a finite gain >= 0")
        elif self.gain is not None:
            raise ValueError("An explicit gain is only accepted with the manual policy")
        return self

    @classmethod
    def for_cloning(cls, M: int, r: float = 0.0, **kwargs) -> "ProtocolParams":
        return cls(R=(M - 1) / M, r=r, M=M, **kwargs)


class FidelityReport(BaseModel):
    label: str = ""
    source: Literal["analytic", "monte-carlo"] = "analytic"
    F: float = Field(ge=0.0, le=1.0 + 1e-9)
    VX: float
    VY: float
    gain_x: float
    gain_y: float
    boundary_classical: float
    beats_classical: bool
    beats_no_cloning: bool
    beats_boundary: bool
    unity_gain: bool
    extended_formula: bool  # mean-mismatch factor in play (non-unity gain or offset)


class SnrReport(BaseModel):
    source: Literal["analytic", "monte-carlo"] = "analytic"
    snr_x: float = Field(ge=0.0)
    snr_y: float = Field(ge=0.0)
    signal_variance_ref: tuple[float, float]
    noise_referred_to_input: tuple[float, float]
    reference_formula_value: tuple[float, float] | None = None
    agrees_with_reference_formula: bool | None = None
    stderr_x: float | None = None
    stderr_y: float | None = None


class CloneFidelities(BaseModel):
    M: int
    r: float
    F_out1_closed: float
    F_clone_closed: float
    F_out1_circuit: float
    F_clones_circuit: list[float]
    max_abs_difference: float


class MCConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    shots: int = Field(ge=2)
    seed: int = Field(default=0, ge=0, lt=MAX_SEED)
    chunk: int = Field(default_factory=lambda: get_settings().MC_CHUNK, ge=1)


class MCEstimate(BaseModel):
    label: str = ""
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float = 0.0
    stderr_mean_x: float
    stderr_mean_y: float
    stderr_var_x: float
    stderr_var_y: float
    fidelity_estimate: float
    stderr_fidelity: float
    shots: int


# ============================================================================
# RUN CONFIG FILE
# ============================================================================

class ProtocolSection(BaseModel):
    R: float | None = None
    r: float | None = None
    sq_db: float | None = None
    eta: float = 1.0
    gain: str = "auto"  # auto | loss-comp | <real>
    mean: tuple[float, float] = (0.0, 0.0)
    M: int | None = None


class SweepSection(BaseModel):
    R_grid: str | None = None  # start:stop:steps
    r_list: list[float] = Field(default_factory=list)


class MCSection(BaseModel):
    shots: int = 100_000
    seed: int = 0
    chunk: int | None = None


class OutputSection(BaseModel):
    csv: str | None = None


class RunConfig(BaseModel):
    """Structured run configuration accepted through ``--config``."""
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    mc: MCSection = Field(default_factory=MCSection)
    output: OutputSection = Field(default_factory=OutputSection)
