"""
Invariant suite run by the ``check`` command.

Each check returns a CheckResult listing every violation it found; the suite
passes only if all checks pass.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from app.core.config import Settings, get_settings
from app.core.exceptions import TransferError
from app.models.schemas import GainPolicy, MCConfig, ProtocolParams
from app.services import metrics
from app.services.gaussian import SCALAR_TOL, check_commutators
from app.services.montecarlo import compare_with_analytic, estimate_channel_snr, simulate_protocol_shots
from app.services.protocol import EPR_HALVES, build_transfer

logger = logging.getLogger(__name__)

R_BOUNDARY_GRID = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]
R_QUANTUM_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
R_SQUEEZING_GRID = [0.1, 0.34657, 1.0]
SNR_SQUEEZING = [0.0, 1.0]
CLONE_M_RANGE = range(2, 9)
CLONE_R_GRID = [0.0, 0.1, 0.3466, 0.5, 1.0]
LOSS_GRID = [(R, eta) for R in (0.3, 0.5, 0.8) for eta in (0.6, 0.9)]
THREE_DB = math.log(2.0) / 2.0  # e^{-2r} = 0.5


@dataclass
class CheckResult:
    name: str
    checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def expect_close(self, what: str, actual: float, expected: float, tol: float = SCALAR_TOL) -> None:
        self.checked += 1
        if not abs(actual - expected) <= tol:
            self.violations.append(f"{what}: got {actual:.15g}, expected {expected:.15g}")

    def expect(self, what: str, condition: bool) -> None:
        self.checked += 1
        if not condition:
            self.violations.append(what)


def random_params(rng: np.random.Generator) -> ProtocolParams:
    """Draw a valid random protocol configuration."""
    r = float(rng.uniform(0.0, 1.5))
    eta = 1.0 if rng.random() < 0.3 else float(rng.uniform(0.2, 1.0))
    swap = bool(rng.random() < 0.5)
    if rng.random() < 0.3:
        return ProtocolParams.for_cloning(int(rng.integers(2, 9)), r, eta=eta, swap_epr_halves=swap)

    R = float(rng.uniform(0.0, 0.99))
    choice = rng.integers(0, 3)
    if choice == 1 and R > 0.0:
        return ProtocolParams(R=R, r=r, eta=eta, gain_policy=GainPolicy.LOSS_COMPENSATED, swap_epr_halves=swap)
    if choice == 2:
        gain = float(rng.uniform(0.0, 4.0))
        return ProtocolParams(R=R, r=r, eta=eta, gain_policy=GainPolicy.MANUAL, gain=gain, swap_epr_halves=swap)
    return ProtocolParams(R=R, r=r, eta=eta, swap_epr_halves=swap)


def check_commutator_suite(n_circuits: int, seed: int) -> CheckResult:
    result = CheckResult("commutators of randomized circuits")
    rng = np.random.default_rng(seed)
    for _ in range(n_circuits):
        params = random_params(rng)
        try:
            outputs = build_transfer(params)
        except TransferError as exc:
            result.expect(f"{params}: {exc}", False)
            continue
        report = check_commutators([outputs.channel])
        final = check_commutators(list(outputs.named_outputs().values()))
        result.expect(
            f"{params}: {'; '.join(report.describe() + final.describe())}",
            report.ok and final.ok,
        )
    return result


def check_boundary_curve() -> CheckResult:
    result = CheckResult("fidelity boundary 1/(R+1) at r=0")
    for R in R_BOUNDARY_GRID:
        F = metrics.output_fidelities(build_transfer(ProtocolParams(R=R, r=0.0)))["out1"].F
        result.expect_close(f"F(out1) at R={R}", F, metrics.fidelity_bound_transfer(R))
    return result


def check_quantum_fidelity_grid() -> CheckResult:
    result = CheckResult("quantum fidelity 1/(1+R e^-2r)")
    for R in R_QUANTUM_GRID:
        for r in R_SQUEEZING_GRID:
            outputs = build_transfer(ProtocolParams(R=R, r=r))
            reports = metrics.output_fidelities(outputs)
            result.expect_close(f"F(out1) at R={R}, r={r}", reports["out1"].F, metrics.transfer_fidelity(R, r))
            result.expect(f"F(out1) does not beat the boundary at R={R}, r={r}", reports["out1"].beats_boundary)
            result.expect(f"out1 mean differs from input at R={R}, r={r}", outputs.unity_gain)
    return result


def check_clone_table() -> CheckResult:
    result = CheckResult("1->M cloning table")
    for M in CLONE_M_RANGE:
        for r in CLONE_R_GRID:
            try:
                clone = metrics.clone_fidelities(M, r)
            except TransferError as exc:
                result.expect(str(exc), False)
                continue
            result.checked += 1
            if r == 0.0:
                for k, F in enumerate(clone.F_clones_circuit, start=1):
                    result.expect_close(f"clone {k} at M={M}, r=0", F, metrics.clone_bound(M))
            if r in (0.0, 0.5):
                result.expect_close(
                    f"out1 at M={M}, r={r}", clone.F_out1_circuit, metrics.clone_out1_fidelity(M, r)
                )
    for r in (0.0, 0.5):
        f1, f2 = metrics.asymmetric_clone_fidelities(r)
        clone = metrics.clone_fidelities(2, r)
        result.expect_close(f"M=2 out1 at r={r}", clone.F_out1_circuit, f1)
        result.expect_close(f"M=2 out2 at r={r}", clone.F_clones_circuit[0], f2)
    return result


def check_no_cloning_threshold() -> CheckResult:
    result = CheckResult("no-cloning threshold at 3 dB")
    F = metrics.output_fidelities(build_transfer(ProtocolParams(R=0.5, r=THREE_DB)))["out1"].F
    result.expect_close("F(out1) at R=0.5, 3 dB", F, 0.8)
    result.expect("F(out1) at R=0.5, 3 dB does not beat 2/3", F > metrics.NO_CLONING_LIMIT)
    result.expect_close("teleportation limit at 3 dB", metrics.teleport_limit_fidelity(THREE_DB), 2.0 / 3.0)
    return result


def check_loss_coefficients() -> CheckResult:
    result = CheckResult("lossy output coefficients")
    alice_epr, bob_epr = EPR_HALVES
    for R, eta in LOSS_GRID:
        params = ProtocolParams(R=R, r=0.3, eta=eta, gain_policy=GainPolicy.LOSS_COMPENSATED)
        out1 = build_transfer(params).out1
        expected = {
            ("a_in", 0): 1.0,
            (alice_epr, 1): -math.sqrt(R) - (1 - eta) * (1 - R) / math.sqrt(R),
            ("v1", 0): -(1 - eta) * math.sqrt(1 - R) / math.sqrt(R),
            ("v_c", 0): math.sqrt((1 - eta**2) * (1 - R)),
            (bob_epr, 0): math.sqrt(R),
        }
        for (mode_id, part), value in expected.items():
            coefficients = out1.ladder(mode_id)
            result.expect_close(f"{mode_id} at R={R}, eta={eta}", coefficients[part], value)
            result.expect_close(f"{mode_id} spurious term at R={R}, eta={eta}", coefficients[1 - part], 0.0)
    return result


def check_snr_identities() -> CheckResult:
    result = CheckResult("signal-to-noise identities")
    v_in = (1.0, 1.0)
    for R in R_BOUNDARY_GRID:
        snr = metrics.protocol_snr(ProtocolParams(R=R, r=0.0), v_in)
        result.expect_close(f"SNR at r=0, R={R}", snr.snr_x, metrics.reference_snr_formula(R, 0.0, 1.0))
        result.expect(f"SNR at r=0, R={R} disagrees with the reference formula", bool(snr.agrees_with_reference_formula))
    previous = math.inf
    for R in R_BOUNDARY_GRID:
        snr = metrics.protocol_snr(ProtocolParams(R=R, r=1.0), v_in)
        result.expect_close(f"SNR closed form at r=1, R={R}", snr.snr_x, metrics.channel_snr_closed_form(R, 1.0, 1.0))
        result.expect(f"SNR not decreasing at r=1, R={R}", snr.snr_x < previous)
        previous = snr.snr_x
    return result


def check_mc_concordance(shots: int, seed: int, sigmas: float) -> CheckResult:
    result = CheckResult("Monte-Carlo concordance")
    cases = [ProtocolParams(R=R, r=r) for R in R_QUANTUM_GRID for r in R_SQUEEZING_GRID]
    cases += [
        ProtocolParams(R=R, r=0.3, eta=eta, gain_policy=GainPolicy.LOSS_COMPENSATED)
        for R, eta in LOSS_GRID
    ]
    cases.append(ProtocolParams.for_cloning(4, 0.5))
    for params in cases:
        cfg = MCConfig(shots=shots, seed=seed)
        estimates = simulate_protocol_shots(params, cfg)
        for row in compare_with_analytic(build_transfer(params), estimates, sigmas):
            result.expect(
                f"{row.output} {row.quantity} at {params}: analytic {row.analytic:.6g}, "
                f"MC {row.estimate:.6g} +- {row.stderr:.2g}",
                row.passed,
            )
    first = simulate_protocol_shots(cases[0], MCConfig(shots=shots, seed=seed))
    rerun = simulate_protocol_shots(cases[0], MCConfig(shots=shots, seed=seed))
    result.expect("reruns with the same seed differ", rerun == first)
    return result


def check_mc_snr_concordance(shots: int, seed: int, sigmas: float) -> CheckResult:
    result = CheckResult("Monte-Carlo SNR concordance")
    v_in = (1.0, 1.0)
    for r in SNR_SQUEEZING:
        for R in R_QUANTUM_GRID:
            params = ProtocolParams(R=R, r=r)
            analytic = metrics.protocol_snr(params, v_in)
            estimate = estimate_channel_snr(params, MCConfig(shots=shots, seed=seed), v_in)
            for quad, value, sampled, stderr in (
                ("X", analytic.snr_x, estimate.snr_x, estimate.stderr_x),
                ("Y", analytic.snr_y, estimate.snr_y, estimate.stderr_y),
            ):
                result.expect(
                    f"SNR {quad} at R={R}, r={r}: analytic {value:.6g}, MC {sampled:.6g} +- {stderr:.2g}",
                    abs(sampled - value) <= sigmas * stderr,
                )
    return result


def run_invariant_suite(settings: Settings | None = None) -> list[CheckResult]:
    settings = settings or get_settings()
    checks = [
        lambda: check_commutator_suite(settings.CHECK_RANDOM_CIRCUITS, settings.CHECK_SEED),
        check_boundary_curve,
        check_quantum_fidelity_grid,
        check_clone_table,
        check_no_cloning_threshold,
        check_loss_coefficients,
        check_snr_identities,
        lambda: check_mc_concordance(
            settings.CHECK_SHOTS, settings.CHECK_SEED, settings.CHECK_SIGMA_TOLERANCE
        ),
        lambda: check_mc_snr_concordance(
            settings.CHECK_SHOTS, settings.CHECK_SEED, settings.CHECK_SIGMA_TOLERANCE
        ),
    ]
    results = []
    for check in checks:
        result = check()
        logger.info("%s: %d checked, %d violations", result.name, result.checked, len(result.violations))
        results.append(result)
    return results
