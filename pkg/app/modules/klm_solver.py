import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from app.core.fock import state_fidelity
from app.core.schemas import CircuitIR, GateReport, ScatteringModel
from app.modules.ideal_backend import run_circuit
from app.modules.klm_gates import NS_SUCCESS_PROBABILITY, ns_gate_circuit, with_inputs
from app.modules.timebin import NO_SCATTERING, run_binned_circuit, without_postselection
from app.utils.logger import get_logger

logger = get_logger(__name__)

# Starting point for the NS angle search (outer, middle)
NS_INITIAL_GUESS = (0.4, 2.0)
NS_RESIDUAL_TOL = 1e-10


def postselected_amplitudes(ir: CircuitIR, signal_mode: int = 0, max_photons: int = 2) -> List[complex]:
    """
    Post-selected amplitude t_k for k = 0..max_photons photons injected into `signal_mode`.

    The circuit is linear per photon-number sector, so a superposed signal sum_k a_k |k>
    leaves as sum_k a_k t_k |k>. Each sector must herald a single output term.
    """
    amplitudes = []
    for k in range(max_photons + 1):
        state = run_circuit(with_inputs(ir, {signal_mode: k}), normalize=False)
        matching = [(v, a) for v, a in state.terms.items() if v[signal_mode] == k]
        if len(matching) > 1:
            raise ValueError(f"sector k={k} heralds {len(matching)} output terms; expected one")
        amplitudes.append(matching[0][1] if matching else 0.0j)
    return amplitudes


def _ns_residual_vector(angles: Sequence[float]) -> np.ndarray:
    outer, middle = angles
    t0, t1, t2 = postselected_amplitudes(ns_gate_circuit(outer=outer, middle=middle))
    residual = [t1 - t0, t2 + t0, t0 * t0 - NS_SUCCESS_PROBABILITY]
    return np.array([part for r in residual for part in (r.real, r.imag)])


def ns_residual(angles: Sequence[float]) -> float:
    """Largest violation of t1 = t0, t2 = -t0, t0^2 = 1/4 for NS angles (outer, middle)."""
    return float(np.max(np.abs(_ns_residual_vector(angles))))


def solve_ns_angles(initial: Tuple[float, float] = NS_INITIAL_GUESS) -> Tuple[float, float]:
    """
    Solve the NS post-selection constraints for (outer, middle) beamsplitter angles.

    Raises:
        RuntimeError: if the solver does not reach NS_RESIDUAL_TOL
    """
    result = least_squares(
        _ns_residual_vector,
        np.asarray(initial, dtype=float),
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    outer, middle = (float(x) for x in result.x)
    residual = ns_residual((outer, middle))
    if residual > NS_RESIDUAL_TOL:
        raise RuntimeError(f"NS angle search did not converge (residual {residual:.3e})")
    logger.info(f"NS angles: outer={outer:.15g} middle={middle:.15g} residual={residual:.2e}")
    return outer, middle


def apply_ns(alphas: Sequence[complex], ir: Optional[CircuitIR] = None) -> Tuple[float, np.ndarray]:
    """
    Apply the post-selected NS gate to signal amplitudes (a0, a1, a2).

    Returns:
        (success probability, normalized output amplitudes)
    """
    alphas = np.asarray(alphas, dtype=complex)
    norm = np.linalg.norm(alphas)
    if alphas.shape != (3,) or norm == 0.0:
        raise ValueError("NS input needs three amplitudes, not all zero")
    alphas = alphas / norm
    transfer = np.asarray(postselected_amplitudes(ir or ns_gate_circuit()), dtype=complex)
    output = alphas * transfer
    success = float(np.vdot(output, output).real)
    if success == 0.0:
        return 0.0, output
    return min(success, 1.0), output / math.sqrt(success)


def evaluate_gate(ir: CircuitIR, n: int, model: ScatteringModel) -> GateReport:
    """
    Post-selected gate performance on n bins against the scattering-free run at the same n.

    scattered_probability is the sink mass of the run without its post-selections.
    """
    state = run_binned_circuit(ir, n, model, normalize=False)
    ideal = run_binned_circuit(ir, n, NO_SCATTERING, normalize=False)
    scattered = run_binned_circuit(without_postselection(ir), n, model).scattered_probability
    report = GateReport(
        n=n,
        success_probability=min(state.norm_squared, 1.0),
        ideal_success_probability=min(ideal.norm_squared, 1.0),
        fidelity_to_ideal=state_fidelity(ideal, state),
        scattered_probability=min(scattered, 1.0),
    )
    logger.info(
        f"Gate '{ir.name}' n={n}: success={report.success_probability:.6g} "
        f"(ideal {report.ideal_success_probability:.6g}) fidelity={report.fidelity_to_ideal:.6g}"
    )
    return report


def evaluate_ns_superposition(
    alphas: Sequence[complex],
    n: int,
    model: ScatteringModel,
    ir: Optional[CircuitIR] = None,
) -> GateReport:
    """
    Binned NS gate on a superposed signal a0|0> + a1|1> + a2|2>.

    Photon-number sectors never mix: each runs as its own binned circuit and the sector
    results add with weights |a_k|^2, overlaps included.
    """
    alphas = np.asarray(alphas, dtype=complex)
    norm = np.linalg.norm(alphas)
    if alphas.shape != (3,) or norm == 0.0:
        raise ValueError("NS input needs three amplitudes, not all zero")
    weights = np.abs(alphas / norm) ** 2
    ir = ir or ns_gate_circuit()

    success = ideal_success = scattered = 0.0
    overlap = 0.0j
    for k, weight in enumerate(weights):
        if weight == 0.0:
            continue
        sector = with_inputs(ir, {0: k})
        state = run_binned_circuit(sector, n, model, normalize=False)
        ideal = run_binned_circuit(sector, n, NO_SCATTERING, normalize=False)
        success += weight * state.norm_squared
        ideal_success += weight * ideal.norm_squared
        overlap += weight * ideal.overlap(state)
        scattered += weight * run_binned_circuit(without_postselection(sector), n, model).scattered_probability

    denominator = success * ideal_success
    fidelity = min(abs(overlap) ** 2 / denominator, 1.0) if denominator > 0.0 else 0.0
    report = GateReport(
        n=n,
        success_probability=min(success, 1.0),
        ideal_success_probability=min(ideal_success, 1.0),
        fidelity_to_ideal=fidelity,
        scattered_probability=min(scattered, 1.0),
    )
    logger.info(
        f"NS superposition n={n}: success={report.success_probability:.6g} fidelity={report.fidelity_to_ideal:.6g}"
    )
    return report
