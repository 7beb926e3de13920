import cmath
import math
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from app.core.fock import ModeUnitary
from app.core.schemas import (
    Beamsplitter,
    BeamsplitterSpec,
    CircuitIR,
    Element,
    Inject,
    Postselect,
)

# NS gate angles (signal mode 0, ancilla photon mode 1, vacuum ancilla mode 2).
# Closed forms of the post-selection solution; klm_solver.solve_ns_angles re-derives them.
NS_OUTER_THETA = math.pi / 8
NS_MIDDLE_THETA = math.acos(1.0 - math.sqrt(2.0))

NS_SUCCESS_PROBABILITY = 0.25
CZ_SUCCESS_PROBABILITY = 1.0 / 16.0

# Dual-rail layout of the CZ circuit: (rail for |0>, rail for |1>) per qubit
CZ_QUBIT_A = (0, 1)
CZ_QUBIT_B = (3, 2)


def beamsplitter_unitary(spec: Optional[BeamsplitterSpec] = None) -> ModeUnitary:
    """
    2x2 mode transform [[cos t, e^{i phi} sin t], [e^{-i phi} sin t, -cos t]].

    The default spec (pi/4, 0) is the balanced real-symmetric beamsplitter.
    """
    spec = spec or BeamsplitterSpec()
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    phase = cmath.exp(1j * spec.phi)
    return ModeUnitary(np.array([[c, phase * s], [s / phase, -c]], dtype=complex))


def phase_shifter_unitary(phi: float) -> ModeUnitary:
    return ModeUnitary(np.array([[cmath.exp(1j * phi)]], dtype=complex))


# CIRCUIT BUILDERS
def hom_circuit() -> CircuitIR:
    """One particle in each of two modes meeting on a balanced beamsplitter."""
    return CircuitIR(
        mode_count=2,
        elements=[
            Inject(i=0, count=1),
            Inject(i=1, count=1),
            Beamsplitter(i=0, j=1, theta=math.pi / 4, phi=0.0),
        ],
        name="hom",
    )


def _ns_elements(signal: int, ancilla: int, vacuum: int, outer: float, middle: float) -> List[Element]:
    return [
        Beamsplitter(i=ancilla, j=vacuum, theta=outer, phi=0.0),
        Beamsplitter(i=signal, j=ancilla, theta=middle, phi=0.0),
        Beamsplitter(i=ancilla, j=vacuum, theta=outer, phi=0.0),
    ]


def ns_gate_circuit(outer: float = NS_OUTER_THETA, middle: float = NS_MIDDLE_THETA) -> CircuitIR:
    """
    Post-selected nonlinear sign gate on signal mode 0.

    On success (ancilla pattern 1, 0) the signal amplitudes over |0>, |1>, |2> map to
    (a0, a1, -a2) with probability 1/4. The signal itself is not injected; see with_inputs.
    """
    elements: List[Element] = [Inject(i=1, count=1)]
    elements.extend(_ns_elements(0, 1, 2, outer, middle))
    elements.append(Postselect(constraints={1: 1, 2: 0}))
    return CircuitIR(mode_count=3, elements=elements, name="ns")


def cz_gate_circuit() -> CircuitIR:
    """
    Dual-rail controlled-Z: NS gates on the two |1> rails between balanced beamsplitters.

    Qubit A uses rails (0, 1), qubit B rails (3, 2); ancillas sit in modes 4-7.
    Succeeds with probability 1/16.
    """
    a_one, b_one = CZ_QUBIT_A[1], CZ_QUBIT_B[1]
    elements: List[Element] = [Inject(i=4, count=1), Inject(i=6, count=1)]
    elements.append(Beamsplitter(i=a_one, j=b_one, theta=math.pi / 4, phi=0.0))
    elements.extend(_ns_elements(a_one, 4, 5, NS_OUTER_THETA, NS_MIDDLE_THETA))
    elements.extend(_ns_elements(b_one, 6, 7, NS_OUTER_THETA, NS_MIDDLE_THETA))
    elements.append(Beamsplitter(i=a_one, j=b_one, theta=math.pi / 4, phi=0.0))
    elements.append(Postselect(constraints={4: 1, 5: 0, 6: 1, 7: 0}))
    return CircuitIR(mode_count=8, elements=elements, name="cz")


def with_inputs(ir: CircuitIR, sources: Mapping[int, int]) -> CircuitIR:
    """Copy of `ir` with injections for `sources` (mode -> count) prepended."""
    injections: List[Element] = [Inject(i=mode, count=count) for mode, count in sorted(sources.items()) if count]
    return CircuitIR(mode_count=ir.mode_count, elements=injections + list(ir.elements), name=ir.name)


def dual_rail_sources(a: int, b: int) -> Dict[int, int]:
    """Injection map for the CZ logical input |a b>."""
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError(f"qubit values must be 0 or 1, got ({a}, {b})")
    return {CZ_QUBIT_A[a]: 1, CZ_QUBIT_B[b]: 1}


def dual_rail_output(a: int, b: int) -> Tuple[int, ...]:
    """Occupation vector of the CZ circuit for logical |a b> with the ancillas heralded."""
    vector = [0] * 8
    for mode in dual_rail_sources(a, b):
        vector[mode] = 1
    vector[4] = vector[6] = 1
    return tuple(vector)


CORPUS = {
    "hom": hom_circuit,
    "ns": ns_gate_circuit,
    "cz": cz_gate_circuit,
}
