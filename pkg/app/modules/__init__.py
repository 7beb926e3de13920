from .circuit_lang import parse, validate, format_circuit, compile_circuit, load_circuit, lower
from .ideal_backend import run_circuit, run_plan
from .klm_gates import (
    beamsplitter_unitary,
    phase_shifter_unitary,
    hom_circuit,
    ns_gate_circuit,
    cz_gate_circuit,
    with_inputs,
)
from .timebin import (
    BinnedLayout,
    expand_time_bins,
    apply_element_binned,
    run_binned_circuit,
    without_postselection,
    hom_metrics,
    scaling_series,
)
from .klm_solver import solve_ns_angles, apply_ns, evaluate_gate, evaluate_ns_superposition

__all__ = [
    "parse",
    "validate",
    "format_circuit",
    "compile_circuit",
    "load_circuit",
    "lower",
    "run_circuit",
    "run_plan",
    "beamsplitter_unitary",
    "phase_shifter_unitary",
    "hom_circuit",
    "ns_gate_circuit",
    "cz_gate_circuit",
    "with_inputs",
    "BinnedLayout",
    "expand_time_bins",
    "apply_element_binned",
    "run_binned_circuit",
    "without_postselection",
    "hom_metrics",
    "scaling_series",
    "solve_ns_angles",
    "apply_ns",
    "evaluate_gate",
    "evaluate_ns_superposition",
]
