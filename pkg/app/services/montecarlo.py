"""
Shot-level Monte-Carlo oracle for the transfer protocol.

Every element of the protocol is linear in the quadratures and every input is
Gaussian, so sampling basis quadratures classically and pushing each shot
through the circuit reproduces all first and second moments of the outputs.
The Bell measurement and feedforward are simulated on measured values, not on
operator expressions, which makes the oracle independent of the analytic engine.

Shots are split into chunks; chunk ``i`` draws from a Philox generator keyed by
``seed ^ i``. A fixed (seed, chunk) pair reproduces results bit for bit, while a
different chunk size yields statistically compatible but different numbers.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from app.core.config import get_settings
from app.core.exceptions import DomainError, PhysicalityError
from app.core.patterns.strategy import gain_for
from app.models.schemas import MCConfig, MCEstimate, ProtocolParams, SnrReport
from app.services.gaussian import BasisState, Registry, make_registry, mean, output_covariance
from app.services.metrics import (
    gaussian_overlap_fidelity,
    output_fidelities,
    reference_snr_formula,
)
from app.services import protocol

logger = logging.getLogger(__name__)

EIGEN_CLIP = -1e-12


# ============================================================================
# SAMPLING
# ============================================================================

def symmetric_factor(cov: np.ndarray) -> np.ndarray:
    """
    Symmetric square root L of a covariance, L @ L = cov.

    Raises:
        PhysicalityError: If cov has an eigenvalue below the clipping threshold
    """
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, atol=1e-12, rtol=0.0):
        raise PhysicalityError("Covariance matrix is not symmetric")
    eigenvalues, vectors = np.linalg.eigh(cov)
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues.min() < EIGEN_CLIP * scale:
        raise PhysicalityError(
            f"Covariance is not positive semidefinite (smallest eigenvalue {eigenvalues.min():.3e})"
        )
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return (vectors * roots) @ vectors.T


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed ^ stream))


def sample_basis(state: BasisState, n: int, seed: int, *, stream: int = 0) -> np.ndarray:
    """Draw ``n`` basis-quadrature vectors (rows of length 2N) from the state."""
    return _sample(state.mean, symmetric_factor(state.cov), n, seed, stream)


def _sample(mean: np.ndarray, factor: np.ndarray, n: int, seed: int, stream: int) -> np.ndarray:
    z = stream_generator(seed, stream).standard_normal((n, mean.shape[0]))
    return mean + z @ factor


def chunk_sizes(shots: int, chunk: int) -> list[int]:
    full, rest = divmod(shots, chunk)
    return [chunk] * full + ([rest] if rest else [])


# ============================================================================
# MOMENTS
# ============================================================================

@dataclass
class _Moments:
    """Running count, mean and centred cross-products over d columns."""
    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, data: np.ndarray) -> "_Moments":
        mu = data.mean(axis=0)
        centred = data - mu
        return cls(data.shape[0], mu, centred.T @ centred)

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mu = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return _Moments(n, mu, m2)

    @property
    def cov(self) -> np.ndarray:
        return self.m2 / (self.n - 1)


def _run_chunks(shots: int, chunk: int, worker) -> _Moments:
    sizes = chunk_sizes(shots, chunk)
    settings = get_settings()
    logger.info("Sampling %d shots in %d chunks", shots, len(sizes))
    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        parts = list(pool.map(worker, range(len(sizes)), sizes))
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


# ============================================================================
# SHOT-LEVEL CIRCUIT
# ============================================================================

def _mix(a: np.ndarray, b: np.ndarray, R: float) -> tuple[np.ndarray, np.ndarray]:
    t = math.sqrt(1.0 - R)
    rho = math.sqrt(R)
    return t * a + rho * b, rho * a - t * b


def _column(samples: np.ndarray, registry: Registry, mode_id: str) -> np.ndarray:
    j = 2 * registry.index(mode_id)
    return samples[:, j:j + 2]


def _propagate(
    params: ProtocolParams, g: float, registry: Registry, samples: np.ndarray
) -> dict[str, np.ndarray]:
    """Push sampled basis quadratures through the circuit; values are (n, 2) arrays of (x, y)."""
    alice_epr, bob_epr = protocol.epr_roles(params)

    def mode(mode_id: str) -> np.ndarray:
        return _column(samples, registry, mode_id)

    transmitted, reflected = _mix(mode(protocol.INPUT), mode(protocol.ALICE_VACUUM), params.R)

    # Bell measurement: 50/50 mix of the reflected beam with Alice's EPR half,
    # X read on the reflected port and Y on the transmitted one.
    bell_t, bell_r = _mix(reflected, mode(alice_epr), 0.5)
    measured = np.column_stack((bell_r[:, 0], bell_t[:, 1]))
    channel = transmitted + g * measured

    if params.eta < 1.0:
        eta = params.eta
        channel = eta * channel + math.sqrt(1.0 - eta * eta) * mode(protocol.CHANNEL_VACUUM)

    out1, out2 = _mix(channel, mode(bob_epr), params.R)
    outputs = {"channel": channel, "out1": out1}
    if params.M is None or params.M == 2:
        outputs["out2"] = out2
        return outputs

    remaining = out2
    n_outputs = params.M - 1
    for k, (ancilla, name) in enumerate(zip(protocol.ancilla_ids(params.M), protocol.clone_ids(params.M))):
        n_left = n_outputs - k
        tapped, remaining = _mix(remaining, mode(ancilla), (n_left - 1) / n_left)
        outputs[name] = tapped
    outputs[protocol.clone_ids(params.M)[-1]] = remaining
    return outputs


def output_names(params: ProtocolParams) -> list[str]:
    if params.M is None or params.M == 2:
        return ["out1", "out2"]
    return ["out1", *protocol.clone_ids(params.M)]


# ============================================================================
# ESTIMATES
# ============================================================================

def _estimate(label: str, mu: np.ndarray, cov: np.ndarray, n: int, input_mean) -> MCEstimate:
    var_x, var_y = float(cov[0, 0]), float(cov[1, 1])
    delta = (float(mu[0]) - input_mean[0], float(mu[1]) - input_mean[1])
    fidelity = gaussian_overlap_fidelity(cov, delta)
    se_mx, se_my = math.sqrt(var_x / n), math.sqrt(var_y / n)
    se_vx, se_vy = var_x * math.sqrt(2.0 / (n - 1)), var_y * math.sqrt(2.0 / (n - 1))
    # delta method on log F
    rel = math.sqrt(
        (se_vx / (2.0 * (1.0 + var_x))) ** 2
        + (se_vy / (2.0 * (1.0 + var_y))) ** 2
        + (delta[0] * se_mx / (1.0 + var_x)) ** 2
        + (delta[1] * se_my / (1.0 + var_y)) ** 2
    )
    return MCEstimate(
        label=label,
        mean_x=float(mu[0]),
        mean_y=float(mu[1]),
        var_x=var_x,
        var_y=var_y,
        cov_xy=float(cov[0, 1]),
        stderr_mean_x=se_mx,
        stderr_mean_y=se_my,
        stderr_var_x=se_vx,
        stderr_var_y=se_vy,
        fidelity_estimate=fidelity,
        stderr_fidelity=fidelity * rel,
        shots=n,
    )


def simulate_protocol_shots(params: ProtocolParams, cfg: MCConfig) -> dict[str, MCEstimate]:
    """
    Estimate mean, variance and fidelity of every output by direct sampling.

    Raises:
        DomainError: For out-of-domain params
    """
    g = gain_for(params)
    registry, state = make_registry(protocol.protocol_modes(params))
    factor = symmetric_factor(state.cov)
    names = output_names(params)

    def worker(stream: int, size: int) -> _Moments:
        samples = _sample(state.mean, factor, size, cfg.seed, stream)
        outputs = _propagate(params, g, registry, samples)
        return _Moments.of(np.hstack([outputs[name] for name in names]))

    moments = _run_chunks(cfg.shots, cfg.chunk, worker)
    cov = moments.cov
    return {
        name: _estimate(
            name,
            moments.mean[2 * k:2 * k + 2],
            cov[2 * k:2 * k + 2, 2 * k:2 * k + 2],
            moments.n,
            params.input_mean,
        )
        for k, name in enumerate(names)
    }


def estimate_channel_snr(
    params: ProtocolParams, cfg: MCConfig, input_variance: tuple[float, float]
) -> SnrReport:
    """
    Dual-homodyne eavesdropping on the channel, estimated from shots.

    The input quadratures are drawn with variance ``input_variance``; the SNR of
    each measured port follows from its correlation rho with the input
    quadrature as rho^2 / (1 - rho^2).
    """
    if min(input_variance) <= 0:
        raise DomainError(f"Input variance must be positive, got {input_variance}")
    g = gain_for(params)
    registry, state = make_registry(protocol.protocol_modes(params))
    j = 2 * registry.index(protocol.INPUT)
    cov = np.array(state.cov)
    cov[j:j + 2, j:j + 2] = np.diag(input_variance)
    factor = symmetric_factor(cov)
    probe_stream_offset = 1 << 32

    def worker(stream: int, size: int) -> _Moments:
        samples = _sample(state.mean, factor, size, cfg.seed, stream)
        channel = _propagate(params, g, registry, samples)["channel"]
        probe = stream_generator(cfg.seed, stream + probe_stream_offset).standard_normal((size, 2))
        port_t, port_r = _mix(channel, probe, 0.5)
        return _Moments.of(np.column_stack((
            port_t[:, 0], samples[:, j], port_r[:, 1], samples[:, j + 1],
        )))

    moments = _run_chunks(cfg.shots, cfg.chunk, worker)
    c = moments.cov
    n = moments.n
    snr, stderr, noise = [], [], []
    for k, v_in in ((0, input_variance[0]), (2, input_variance[1])):
        rho = c[k, k + 1] / math.sqrt(c[k, k] * c[k + 1, k + 1])
        rho2 = min(rho * rho, 1.0 - 1e-15)
        value = rho2 / (1.0 - rho2)
        snr.append(value)
        stderr.append(2.0 * abs(rho) / ((1.0 - rho2) * math.sqrt(n)))
        noise.append(v_in / value if value > 0 else math.inf)

    reference = (
        reference_snr_formula(params.R, params.r, input_variance[0]),
        reference_snr_formula(params.R, params.r, input_variance[1]),
    )
    return SnrReport(
        source="monte-carlo",
        snr_x=snr[0],
        snr_y=snr[1],
        signal_variance_ref=tuple(input_variance),
        noise_referred_to_input=tuple(noise),
        reference_formula_value=reference,
        stderr_x=stderr[0],
        stderr_y=stderr[1],
    )


# ============================================================================
# CONCORDANCE
# ============================================================================

@dataclass(frozen=True)
class Comparison:
    output: str
    quantity: str
    analytic: float
    estimate: float
    stderr: float
    sigmas: float

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.analytic)

    @property
    def passed(self) -> bool:
        if self.stderr == 0.0:
            return self.deviation == 0.0
        return self.deviation <= self.sigmas * self.stderr


def compare_with_analytic(
    outputs: "protocol.ProtocolOutputs",
    estimates: dict[str, MCEstimate],
    sigmas: float,
) -> list[Comparison]:
    """Pair every Monte-Carlo estimate with its analytic value."""
    fidelities = output_fidelities(outputs)
    rows: list[Comparison] = []
    for name, expr in outputs.named_outputs().items():
        est = estimates[name]
        cov = output_covariance(expr, outputs.state)
        mx, my = mean(expr, outputs.state)
        rows.extend([
            Comparison(name, "mean_x", mx, est.mean_x, est.stderr_mean_x, sigmas),
            Comparison(name, "mean_y", my, est.mean_y, est.stderr_mean_y, sigmas),
            Comparison(name, "var_x", float(cov[0, 0]), est.var_x, est.stderr_var_x, sigmas),
            Comparison(name, "var_y", float(cov[1, 1]), est.var_y, est.stderr_var_y, sigmas),
            Comparison(name, "F", fidelities[name].F, est.fidelity_estimate, est.stderr_fidelity, sigmas),
        ])
    return rows
