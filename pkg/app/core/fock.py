import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import (
    CapacityError,
    ModeRangeError,
    NonUnitaryError,
    ShapeError,
)
from app.core.permanent import permanent
from app.utils.config import get_config

OccupationVector = Tuple[int, ...]
SCATTERED = "scattered"


@dataclass(frozen=True, order=True)
class SinkLabel:
    """
    Orthonormal basis element outside the interferometric modes.

    `input_pattern` is the full fine-mode occupation of the term at the moment it
    scattered, so distinct scattering events never interfere. `injected` holds the
    fine-mode occupation of sources added after scattering (empty when none were).
    """
    element_id: int
    bin_index: int
    input_pattern: OccupationVector
    particle_count: int
    injected: OccupationVector = ()

    def __post_init__(self):
        if sum(self.input_pattern) != self.particle_count:
            raise ValueError("sink particle_count must equal the occupancy of its input pattern")
        if self.injected and len(self.injected) != len(self.input_pattern):
            raise ShapeError("sink injected pattern must cover the same modes as its input pattern")

    @property
    def total_particles(self) -> int:
        return self.particle_count + sum(self.injected)


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """Dense unitary acting on the creation operators of `dim` modes: a_i^dag -> sum_j U[j, i] b_j^dag."""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ShapeError(f"mode unitary must be a non-empty square matrix, got shape {m.shape}")
        deviation = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
        if deviation >= get_config().UNITARITY_TOL:
            raise NonUnitaryError(f"matrix is not unitary (max deviation {deviation:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def then(self, other: "ModeUnitary") -> "ModeUnitary":
        """Transform equal to applying self first and `other` second."""
        return ModeUnitary(other.matrix @ self.matrix)


@dataclass(frozen=True)
class OccupationState:
    """
    Sparse pure state over Fock basis vectors plus scattering sinks.

    Terms are kept in lexicographic order; amplitudes below PRUNE_THRESHOLD are dropped.
    """
    mode_count: int
    terms: Dict[OccupationVector, complex] = field(default_factory=dict)
    sinks: Dict[SinkLabel, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode_count <= 0:
            raise ValueError("mode_count must be positive")
        threshold = get_config().PRUNE_THRESHOLD

        terms: Dict[OccupationVector, complex] = {}
        for vector, amplitude in self.terms.items():
            vector = tuple(int(c) for c in vector)
            if len(vector) != self.mode_count:
                raise ShapeError(f"occupation vector {vector} does not have {self.mode_count} modes")
            if any(c < 0 for c in vector):
                raise ValueError(f"negative occupation in {vector}")
            if abs(amplitude) >= threshold:
                terms[vector] = complex(amplitude)
        sinks = {label: complex(a) for label, a in self.sinks.items() if abs(a) >= threshold}

        counts = {sum(v) for v in terms} | {label.total_particles for label in sinks}
        if len(counts) > 1:
            raise ValueError(f"particle number is not conserved across terms: {sorted(counts)}")

        object.__setattr__(self, "terms", dict(sorted(terms.items())))
        object.__setattr__(self, "sinks", dict(sorted(sinks.items())))

    @classmethod
    def empty(cls, mode_count: int) -> "OccupationState":
        """Explicit marker for a post-selection that matched nothing."""
        return cls(mode_count)

    @property
    def is_empty(self) -> bool:
        return not self.terms and not self.sinks

    @property
    def particle_number(self) -> Optional[int]:
        for vector in self.terms:
            return sum(vector)
        for label in self.sinks:
            return label.total_particles
        return None

    @property
    def norm_squared(self) -> float:
        return float(
            sum(abs(a) ** 2 for a in self.terms.values()) + sum(abs(a) ** 2 for a in self.sinks.values())
        )

    @property
    def scattered_probability(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.sinks.values()))

    def amplitude(self, vector: Sequence[int]) -> complex:
        return self.terms.get(tuple(vector), 0.0j)

    def overlap(self, other: "OccupationState") -> complex:
        """<self|other>, sinks included."""
        total = sum(a.conjugate() * other.terms.get(v, 0.0) for v, a in self.terms.items())
        total += sum(a.conjugate() * other.sinks.get(s, 0.0) for s, a in self.sinks.items())
        return complex(total)

    def scaled(self, factor: complex) -> "OccupationState":
        return OccupationState(
            self.mode_count,
            {v: a * factor for v, a in self.terms.items()},
            {s: a * factor for s, a in self.sinks.items()},
        )

    def normalized(self) -> "OccupationState":
        norm = math.sqrt(self.norm_squared)
        if norm == 0.0:
            return self
        return self.scaled(1.0 / norm)


def occupation_patterns(total: int, modes: int) -> Iterator[OccupationVector]:
    """All ways to place `total` particles in `modes` modes, lexicographically ascending."""
    if modes == 0:
        if total == 0:
            yield ()
        return
    if modes == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in occupation_patterns(total - first, modes - 1):
            yield (first,) + rest


def _check_capacity(mode_count: int, particles: int) -> None:
    config = get_config()
    if mode_count > config.MAX_FINE_MODES:
        raise CapacityError(f"{mode_count} modes exceed the cap of {config.MAX_FINE_MODES}")
    if particles > config.MAX_PARTICLES:
        raise CapacityError(f"{particles} particles exceed the cap of {config.MAX_PARTICLES}")


def _check_mode(state: OccupationState, mode: int) -> None:
    if not 0 <= mode < state.mode_count:
        raise ModeRangeError(f"mode {mode} out of range for {state.mode_count} modes")


def vacuum(mode_count: int) -> OccupationState:
    _check_capacity(mode_count, 0)
    return OccupationState(mode_count, {(0,) * mode_count: 1.0})


def inject(state: OccupationState, mode: int, count: int) -> OccupationState:
    """
    Add `count` particles to `mode` in every basis term, amplitudes unchanged.

    Args:
        state: State to extend (must not carry scattered components)
        mode: Target mode index
        count: Number of particles, >= 0

    Returns:
        New state with particle number increased by `count`
    """
    _check_mode(state, mode)
    if count < 0:
        raise ValueError("particle count must be non-negative")
    if count == 0:
        return state
    if state.sinks:
        raise ValueError("cannot inject into a state with scattered components")
    _check_capacity(state.mode_count, (state.particle_number or 0) + count)

    terms = {}
    for vector, amplitude in state.terms.items():
        updated = list(vector)
        updated[mode] += count
        terms[tuple(updated)] = amplitude
    return OccupationState(state.mode_count, terms, state.sinks)


def transition_amplitudes(unitary: ModeUnitary, pattern: OccupationVector) -> List[Tuple[OccupationVector, complex]]:
    """
    Output patterns and amplitudes of one local input pattern under `unitary`.

    <k|U|m> = Per(U[rows(k), cols(m)]) / sqrt(prod m_i! prod k_j!), where rows/cols repeat
    each mode index by its occupancy.
    """
    if len(pattern) != unitary.dim:
        raise ShapeError(f"pattern {pattern} does not match a {unitary.dim}-mode unitary")
    total = sum(pattern)
    if total == 0:
        return [(tuple(pattern), 1.0 + 0.0j)]

    threshold = get_config().PRUNE_THRESHOLD
    cols = np.array([mode for mode, count in enumerate(pattern) for _ in range(count)], dtype=int)
    in_norm = math.prod(math.factorial(c) for c in pattern)

    results = []
    for output in occupation_patterns(total, unitary.dim):
        rows = np.array([mode for mode, count in enumerate(output) for _ in range(count)], dtype=int)
        out_norm = math.prod(math.factorial(c) for c in output)
        amplitude = permanent(unitary.matrix[np.ix_(rows, cols)]) / math.sqrt(in_norm * out_norm)
        if abs(amplitude) >= threshold:
            results.append((output, amplitude))
    return results


def apply_unitary(
    state: OccupationState,
    unitary: Union[ModeUnitary, np.ndarray],
    modes: Sequence[int],
) -> OccupationState:
    """
    Evolve `state` by a linear mode transform acting on the ordered subset `modes`.

    Sinks are decoupled and pass through unchanged.
    """
    if not isinstance(unitary, ModeUnitary):
        unitary = ModeUnitary(unitary)
    modes = tuple(modes)
    if len(modes) != unitary.dim:
        raise ShapeError(f"{unitary.dim}-mode unitary applied to {len(modes)} modes")
    if len(set(modes)) != len(modes):
        raise ValueError(f"duplicate mode index in {modes}")
    for mode in modes:
        _check_mode(state, mode)

    table: Dict[OccupationVector, List[Tuple[OccupationVector, complex]]] = {}
    evolved: Dict[OccupationVector, complex] = defaultdict(complex)
    for vector, amplitude in state.terms.items():
        local = tuple(vector[m] for m in modes)
        if local not in table:
            table[local] = transition_amplitudes(unitary, local)
        for output, transition in table[local]:
            updated = list(vector)
            for mode, count in zip(modes, output):
                updated[mode] = count
            evolved[tuple(updated)] += amplitude * transition
    return OccupationState(state.mode_count, evolved, state.sinks)


def coarse_grain(vector: OccupationVector, grouping: Sequence[int], logical_count: int) -> OccupationVector:
    counts = [0] * logical_count
    for fine, count in enumerate(vector):
        counts[grouping[fine]] += count
    return tuple(counts)


def _resolve_grouping(state: OccupationState, grouping: Optional[Sequence[int]]) -> Tuple[Tuple[int, ...], int]:
    if grouping is None:
        return tuple(range(state.mode_count)), state.mode_count
    grouping = tuple(grouping)
    if len(grouping) != state.mode_count:
        raise ShapeError(f"grouping covers {len(grouping)} modes, state has {state.mode_count}")
    if any(g < 0 for g in grouping):
        raise ModeRangeError("grouping maps a mode to a negative logical index")
    return grouping, max(grouping) + 1


def postselect(
    state: OccupationState,
    pattern: Mapping[int, int],
    grouping: Optional[Sequence[int]] = None,
    normalize: bool = True,
) -> Tuple[float, OccupationState]:
    """
    Condition on detector counts.

    Args:
        state: State to condition
        pattern: Partial map mode -> required count (logical modes when `grouping` is given)
        grouping: Optional fine mode -> logical mode map; counts are summed per logical mode
        normalize: Renormalize the surviving component to 1

    Returns:
        (probability, state); probability 0 comes with the empty-state marker
    """
    grouping, logical_count = _resolve_grouping(state, grouping)
    for mode in pattern:
        if not 0 <= mode < logical_count:
            raise ModeRangeError(f"mode {mode} out of range for {logical_count} modes")

    matched = {}
    for vector, amplitude in state.terms.items():
        counts = coarse_grain(vector, grouping, logical_count)
        if all(counts[mode] == count for mode, count in pattern.items()):
            matched[vector] = amplitude

    probability = float(sum(abs(a) ** 2 for a in matched.values()))
    if probability == 0.0:
        return 0.0, OccupationState.empty(state.mode_count)
    result = OccupationState(state.mode_count, matched)
    if normalize:
        result = result.scaled(1.0 / math.sqrt(probability))
    return min(probability, 1.0), result


def marginal_distribution(
    state: OccupationState,
    grouping: Optional[Sequence[int]] = None,
) -> Dict[Union[OccupationVector, str], float]:
    """
    Detection probabilities of logical occupation patterns.

    Fine patterns that coarse-grain to the same logical pattern are summed; sink weight
    is reported under the reserved SCATTERED key when the state has sinks.
    """
    grouping, logical_count = _resolve_grouping(state, grouping)
    distribution: Dict[OccupationVector, float] = defaultdict(float)
    for vector, amplitude in state.terms.items():
        distribution[coarse_grain(vector, grouping, logical_count)] += abs(amplitude) ** 2

    result: Dict[Union[OccupationVector, str], float] = dict(sorted(distribution.items()))
    if state.sinks:
        result[SCATTERED] = state.scattered_probability
    return result


def state_fidelity(reference: OccupationState, state: OccupationState) -> float:
    """|<reference|state>|^2 / (|reference|^2 |state|^2); 0 if either state is empty."""
    denominator = reference.norm_squared * state.norm_squared
    if denominator == 0.0:
        return 0.0
    return min(abs(reference.overlap(state)) ** 2 / denominator, 1.0)
