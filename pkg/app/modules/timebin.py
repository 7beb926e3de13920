import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from app.core.errors import CapacityError, LayoutMismatchError, ModeRangeError
from app.core.fock import (
    ModeUnitary,
    OccupationState,
    OccupationVector,
    SinkLabel,
    marginal_distribution,
    occupation_patterns,
    postselect,
    state_fidelity,
    transition_amplitudes,
    vacuum,
)
from app.core.schemas import (
    Beamsplitter,
    BeamsplitterSpec,
    CircuitIR,
    HomReport,
    PhaseShifter,
    Postselect,
    ScatteringModel,
)
from app.modules.circuit_lang import InjectStep, PostselectStep, UnitaryStep, lower
from app.modules.klm_gates import beamsplitter_unitary, hom_circuit, phase_shifter_unitary
from app.utils.config import get_config
from app.utils.logger import get_logger

logger = get_logger(__name__)

NO_SCATTERING = ScatteringModel.partial(0.0)


@dataclass(frozen=True)
class BinnedLayout:
    """
    Each logical mode split into `bins` time bins; fine index = logical * bins + bin.
    """
    logical_mode_count: int
    bins: int

    def __post_init__(self):
        if self.logical_mode_count <= 0:
            raise ValueError("logical_mode_count must be positive")
        if self.bins <= 0:
            raise ValueError("bins must be positive")

    @property
    def fine_mode_count(self) -> int:
        return self.logical_mode_count * self.bins

    def fine_index(self, logical: int, bin_index: int) -> int:
        if not 0 <= logical < self.logical_mode_count:
            raise ModeRangeError(f"logical mode {logical} out of range for {self.logical_mode_count} modes")
        if not 0 <= bin_index < self.bins:
            raise ModeRangeError(f"bin {bin_index} out of range for {self.bins} bins")
        return logical * self.bins + bin_index

    def logical_of(self, fine: int) -> int:
        return fine // self.bins

    def bin_of(self, fine: int) -> int:
        return fine % self.bins

    def grouping(self) -> Tuple[int, ...]:
        """Fine mode -> logical mode map, as taken by fock.postselect and marginal_distribution."""
        return tuple(fine // self.bins for fine in range(self.fine_mode_count))


@dataclass(frozen=True)
class OutcomeMetrics:
    coincidence: float
    bunching: float
    scattered: float


def _check_layout(state: OccupationState, layout: BinnedLayout) -> None:
    if state.mode_count != layout.fine_mode_count:
        raise LayoutMismatchError(
            f"state has {state.mode_count} modes, layout expects {layout.fine_mode_count} "
            f"({layout.logical_mode_count} x {layout.bins})"
        )


# 1. SOURCE EXPANSION
def _bin_creation(
    vector: OccupationVector,
    fine_modes: Sequence[int],
    count: int,
) -> List[Tuple[OccupationVector, float]]:
    """
    Add `count` particles spread evenly over `fine_modes`, one logical mode's bins.

    Applies (B^dag)^count with B^dag = n^{-1/2} sum_t a_t^dag, scaled by sqrt(m! / (m + count)!)
    for the m particles already in the logical mode. On bin-symmetric states this is the
    binned image of the unbinned relabelling |m> -> |m + count>; with one bin it is exactly
    that relabelling.
    """
    bins = len(fine_modes)
    occupied = [vector[f] for f in fine_modes]
    m = sum(occupied)
    scale = bins ** (-count / 2) * math.factorial(count) * math.sqrt(math.factorial(m) / math.factorial(m + count))
    results = []
    for added in occupation_patterns(count, bins):
        weight = scale
        updated = list(vector)
        for fine, before, k in zip(fine_modes, occupied, added):
            weight *= math.sqrt(math.factorial(before + k) / math.factorial(before)) / math.factorial(k)
            updated[fine] = before + k
        results.append((tuple(updated), weight))
    return results


def expand_time_bins(
    logical_sources: Mapping[int, int],
    layout: BinnedLayout,
    base: Optional[OccupationState] = None,
) -> OccupationState:
    """
    Inject particles whose wave-packets spread evenly over all bins of their logical mode.

    Args:
        logical_sources: logical mode -> particle count
        layout: Binned layout
        base: State to inject into (vacuum when None)

    Returns:
        State over layout.fine_mode_count modes

    Scattered components keep their sink and record the new particles' bin pattern in
    SinkLabel.injected. Injecting into an occupied logical mode keeps the unscattered
    weight fixed.
    """
    state = base if base is not None else vacuum(layout.fine_mode_count)
    _check_layout(state, layout)
    sources = {mode: count for mode, count in sorted(logical_sources.items()) if count}
    if any(count < 0 for count in sources.values()):
        raise ValueError("particle count must be non-negative")
    if not sources:
        return state

    config = get_config()
    total = (state.particle_number or 0) + sum(sources.values())
    if total > config.MAX_PARTICLES:
        raise CapacityError(f"{total} particles exceed the cap of {config.MAX_PARTICLES}")

    terms: Dict[OccupationVector, complex] = dict(state.terms)
    sinks: Dict[SinkLabel, complex] = dict(state.sinks)
    empty = (0,) * layout.fine_mode_count
    rescale = False
    for logical, count in sources.items():
        fine_modes = [layout.fine_index(logical, t) for t in range(layout.bins)]
        rescale = rescale or any(vector[f] for vector in terms for f in fine_modes)

        expanded: Dict[OccupationVector, complex] = defaultdict(complex)
        for vector, amplitude in terms.items():
            for updated, weight in _bin_creation(vector, fine_modes, count):
                expanded[updated] += amplitude * weight
        terms = expanded

        extended: Dict[SinkLabel, complex] = defaultdict(complex)
        for label, amplitude in sinks.items():
            for updated, weight in _bin_creation(label.injected or empty, fine_modes, count):
                extended[replace(label, injected=updated)] += amplitude * weight
        sinks = extended

    if rescale:
        before = sum(abs(a) ** 2 for a in state.terms.values())
        after = sum(abs(a) ** 2 for a in terms.values())
        if after > 0.0:
            factor = math.sqrt(before / after)
            terms = {vector: amplitude * factor for vector, amplitude in terms.items()}
    return OccupationState(state.mode_count, terms, sinks)


# 2. ELEMENT APPLICATION
def _element_unitary(element: Union[Beamsplitter, PhaseShifter]) -> ModeUnitary:
    if isinstance(element, Beamsplitter):
        return beamsplitter_unitary(BeamsplitterSpec(theta=element.theta, phi=element.phi))
    return phase_shifter_unitary(element.phi)


def apply_element_binned(
    state: OccupationState,
    element: Union[Beamsplitter, PhaseShifter],
    layout: BinnedLayout,
    model: ScatteringModel,
    element_id: int = 0,
) -> OccupationState:
    """
    Apply a linear element bin by bin with coincidence scattering.

    A bin is coincident when the term holds >= 2 particles across the element's two fine
    modes at that bin. Coincident bins are resolved in ascending order, each sending
    sqrt(p) of the still unscattered amplitude to SinkLabel(element_id, bin, term, N).
    What remains evolves photonically, every bin independently. Phase shifters never
    scatter and existing sinks pass through unchanged.
    """
    _check_layout(state, layout)
    if not isinstance(element, (Beamsplitter, PhaseShifter)):
        raise TypeError(f"binned evolution applies beamsplitters and phase shifters, got {type(element).__name__}")
    for mode in element.modes:
        if not 0 <= mode < layout.logical_mode_count:
            raise ModeRangeError(f"mode {mode} out of range for {layout.logical_mode_count} modes")

    unitary = _element_unitary(element)
    scatters = isinstance(element, Beamsplitter)
    keep = math.sqrt(1.0 - model.p_scatter)
    leak = math.sqrt(model.p_scatter)
    bin_modes = [tuple(layout.fine_index(m, t) for m in element.modes) for t in range(layout.bins)]

    table: Dict[OccupationVector, List[Tuple[OccupationVector, complex]]] = {}
    evolved: Dict[OccupationVector, complex] = defaultdict(complex)
    sinks: Dict[SinkLabel, complex] = defaultdict(complex, state.sinks)

    for vector, amplitude in state.terms.items():
        locals_ = [(modes, tuple(vector[f] for f in modes)) for modes in bin_modes]
        occupied = [(t, modes, local) for t, (modes, local) in enumerate(locals_) if sum(local)]

        if scatters:
            particles = sum(vector)
            for t, _, local in occupied:
                if sum(local) >= 2:
                    sinks[SinkLabel(element_id, t, vector, particles)] += amplitude * leak
                    amplitude *= keep
            if amplitude == 0:
                continue

        branches: Dict[OccupationVector, complex] = {vector: amplitude}
        for _, modes, local in occupied:
            if local not in table:
                table[local] = transition_amplitudes(unitary, local)
            stepped: Dict[OccupationVector, complex] = defaultdict(complex)
            for branch, branch_amplitude in branches.items():
                for output, transition in table[local]:
                    updated = list(branch)
                    for fine, count in zip(modes, output):
                        updated[fine] = count
                    stepped[tuple(updated)] += branch_amplitude * transition
            branches = stepped
        for output, output_amplitude in branches.items():
            evolved[output] += output_amplitude

    return OccupationState(state.mode_count, evolved, sinks)


# 3. WHOLE CIRCUITS
def without_postselection(ir: CircuitIR) -> CircuitIR:
    """Same circuit with its post-selections removed; its sink mass is the unheralded scattering."""
    elements = [e for e in ir.elements if not isinstance(e, Postselect)]
    return CircuitIR(mode_count=ir.mode_count, elements=elements, name=ir.name)


def run_binned_circuit(
    ir: CircuitIR,
    n: int,
    model: ScatteringModel,
    normalize: bool = True,
) -> OccupationState:
    """
    Run a validated circuit on n time bins per logical mode.

    Consecutive injections are expanded together; post-selections condition on bin-summed
    logical counts. With normalize=False the squared norm of a post-selected result is the
    success probability.
    """
    layout = BinnedLayout(ir.mode_count, n)
    grouping = layout.grouping()
    state = vacuum(layout.fine_mode_count)
    pending: Dict[int, int] = defaultdict(int)

    def flush(current: OccupationState) -> OccupationState:
        if not pending:
            return current
        expanded = expand_time_bins(pending, layout, base=current)
        pending.clear()
        return expanded

    for step in lower(ir).operations:
        if isinstance(step, InjectStep):
            pending[step.mode] += step.count
            continue
        state = flush(state)
        if isinstance(step, UnitaryStep):
            state = apply_element_binned(state, step.element, layout, model, element_id=step.element_id)
        elif isinstance(step, PostselectStep):
            probability, state = postselect(state, step.constraints, grouping=grouping, normalize=normalize)
            if probability == 0.0:
                logger.warning(f"Post-selection at element {step.element_id} matched nothing (n={n})")
    state = flush(state)
    logger.debug(f"Binned run n={n}: {len(state.terms)} terms, {len(state.sinks)} sinks")
    return state


# 4. METRICS
def _probability(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def outcome_metrics(state: OccupationState, layout: BinnedLayout) -> OutcomeMetrics:
    """
    Coincidence: no logical mode holds >= 2 particles. Bunching: some mode does.
    Scattered: sink mass.
    """
    _check_layout(state, layout)
    coincidence = bunching = 0.0
    for pattern, probability in marginal_distribution(state, layout.grouping()).items():
        if not isinstance(pattern, tuple):
            continue
        if max(pattern, default=0) >= 2:
            bunching += probability
        else:
            coincidence += probability
    return OutcomeMetrics(
        coincidence=_probability(coincidence),
        bunching=_probability(bunching),
        scattered=_probability(state.scattered_probability),
    )


def hom_metrics(
    state: OccupationState,
    layout: BinnedLayout,
    ideal: Optional[OccupationState] = None,
) -> HomReport:
    """
    HOM report of a two-particle, two-mode binned state.

    `ideal` is the scattering-free evolution at the same n; it defaults to the HOM circuit run
    with p_scatter = 0.
    """
    if layout.logical_mode_count != 2:
        raise ValueError(f"HOM metrics need 2 logical modes, layout has {layout.logical_mode_count}")
    if state.particle_number != 2:
        raise ValueError(f"HOM metrics need a two-particle state, got {state.particle_number}")
    if ideal is None:
        ideal = run_binned_circuit(hom_circuit(), layout.bins, NO_SCATTERING)

    metrics = outcome_metrics(state, layout)
    return HomReport(
        n=layout.bins,
        coincidence_probability=metrics.coincidence,
        bunching_probability=metrics.bunching,
        scattered_probability=metrics.scattered,
        fidelity_to_ideal=_probability(state_fidelity(ideal, state)),
    )


def check_n_values(n_values: Sequence[int]) -> None:
    if not n_values:
        raise ValueError("n_values must not be empty")
    if any(n <= 0 for n in n_values):
        raise ValueError("n_values must be positive")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly ascending")


def scaling_series(ir: CircuitIR, n_values: Sequence[int], model: ScatteringModel) -> List[HomReport]:
    """One HomReport per n, in ascending n."""
    check_n_values(n_values)
    reports = []
    for n in n_values:
        layout = BinnedLayout(ir.mode_count, n)
        state = run_binned_circuit(ir, n, model)
        ideal = run_binned_circuit(ir, n, NO_SCATTERING)
        report = hom_metrics(state, layout, ideal)
        logger.info(f"n={n}: scattered={report.scattered_probability:.6g} fidelity={report.fidelity_to_ideal:.6g}")
        reports.append(report)
    return reports
