import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from app.core.errors import CapacityError, ModeRangeError, NonUnitaryError, ShapeError
from app.core.fock import (
    SCATTERED,
    ModeUnitary,
    OccupationState,
    SinkLabel,
    apply_unitary,
    inject,
    marginal_distribution,
    occupation_patterns,
    postselect,
    state_fidelity,
    transition_amplitudes,
    vacuum,
)
from app.utils.config import reload_config

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def expand_creation_operators(matrix: np.ndarray, pattern) -> dict:
    """
    Brute-force product of a_i^dag -> sum_j U[j, i] b_j^dag as a polynomial in b^dag.

    Returns output occupation -> amplitude for the normalized input |pattern>.
    """
    dim = matrix.shape[0]
    poly = {(0,) * dim: 1.0 + 0.0j}
    for mode, count in enumerate(pattern):
        for _ in range(count):
            stepped = defaultdict(complex)
            for monomial, coefficient in poly.items():
                for out in range(dim):
                    raised = list(monomial)
                    raised[out] += 1
                    stepped[tuple(raised)] += coefficient * matrix[out, mode]
            poly = stepped
    in_norm = math.prod(math.factorial(c) for c in pattern)
    return {
        monomial: coefficient * math.sqrt(math.prod(math.factorial(c) for c in monomial) / in_norm)
        for monomial, coefficient in poly.items()
    }


def prepared(mode_count: int, sources: dict) -> OccupationState:
    state = vacuum(mode_count)
    for mode, count in sources.items():
        state = inject(state, mode, count)
    return state


@pytest.fixture
def hom_state():
    return apply_unitary(prepared(2, {0: 1, 1: 1}), H, (0, 1))


# 1. STATE CONSTRUCTION
class TestOccupationState:

    def test_vacuum(self):
        state = vacuum(3)
        assert state.terms == {(0, 0, 0): 1.0}
        assert state.particle_number == 0
        assert state.norm_squared == pytest.approx(1.0)

    def test_terms_sorted(self):
        state = OccupationState(2, {(1, 0): 0.6, (0, 1): 0.8})
        assert list(state.terms) == [(0, 1), (1, 0)]

    def test_prunes_tiny_amplitudes(self):
        state = OccupationState(2, {(1, 0): 1.0, (0, 1): 1e-16})
        assert list(state.terms) == [(1, 0)]

    def test_rejects_mixed_particle_numbers(self):
        with pytest.raises(ValueError, match="particle number"):
            OccupationState(2, {(1, 0): 0.6, (1, 1): 0.8})

    def test_rejects_wrong_length(self):
        with pytest.raises(ShapeError):
            OccupationState(2, {(1, 0, 0): 1.0})

    def test_rejects_negative_occupation(self):
        with pytest.raises(ValueError, match="negative"):
            OccupationState(2, {(-1, 2): 1.0})

    def test_sinks_count_towards_particle_number(self):
        label = SinkLabel(0, 0, (1, 1), 2)
        with pytest.raises(ValueError, match="particle number"):
            OccupationState(2, {(1, 0): 0.6}, {label: 0.8})

    def test_sink_label_checks_count(self):
        with pytest.raises(ValueError):
            SinkLabel(0, 0, (1, 1), 3)

    def test_sink_with_later_sources(self):
        label = SinkLabel(0, 0, (1, 1), 2, injected=(0, 1))
        assert label.total_particles == 3
        state = OccupationState(2, {(2, 1): 0.6}, {label: 0.8})
        assert state.particle_number == 3
        with pytest.raises(ValueError):
            SinkLabel(0, 0, (1, 1), 2, injected=(0, 0, 1))

    def test_empty_marker(self):
        state = OccupationState.empty(3)
        assert state.is_empty
        assert state.particle_number is None
        assert state.norm_squared == 0.0


class TestOccupationPatterns:

    def test_count_is_binomial(self):
        assert len(list(occupation_patterns(3, 4))) == math.comb(6, 3)

    def test_lexicographic(self):
        patterns = list(occupation_patterns(2, 2))
        assert patterns == [(0, 2), (1, 1), (2, 0)]

    def test_zero_particles(self):
        assert list(occupation_patterns(0, 3)) == [(0, 0, 0)]


class TestInject:

    def test_adds_particles_to_every_term(self, hom_state):
        state = inject(hom_state, 0, 1)
        assert state.particle_number == 3
        assert state.amplitude((3, 0)) == pytest.approx(hom_state.amplitude((2, 0)))

    def test_zero_count_is_identity(self):
        state = vacuum(2)
        assert inject(state, 1, 0) is state

    def test_mode_out_of_range(self):
        with pytest.raises(ModeRangeError):
            inject(vacuum(2), 2, 1)

    def test_negative_count(self):
        with pytest.raises(ValueError):
            inject(vacuum(2), 0, -1)

    def test_particle_cap(self, monkeypatch):
        monkeypatch.setenv("BOSONSIM_MAX_PARTICLES", "3")
        reload_config(skip_dotenv=True)

        with pytest.raises(CapacityError):
            inject(vacuum(2), 0, 4)

    def test_mode_cap(self, monkeypatch):
        monkeypatch.setenv("BOSONSIM_MAX_FINE_MODES", "4")
        reload_config(skip_dotenv=True)

        with pytest.raises(CapacityError):
            vacuum(5)

    def test_refuses_scattered_state(self):
        state = OccupationState(2, {}, {SinkLabel(0, 0, (1, 1), 2): 1.0})
        with pytest.raises(ValueError, match="scattered"):
            inject(state, 0, 1)


# 2. UNITARY EVOLUTION
class TestModeUnitary:

    def test_rejects_non_unitary(self):
        with pytest.raises(NonUnitaryError):
            ModeUnitary(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            ModeUnitary(np.ones((2, 3)))

    def test_matrix_is_read_only(self):
        unitary = ModeUnitary(H)
        with pytest.raises(ValueError):
            unitary.matrix[0, 0] = 2.0

    def test_then_composes_in_order(self):
        first = ModeUnitary(unitary_group.rvs(3, random_state=1))
        second = ModeUnitary(unitary_group.rvs(3, random_state=2))
        state = prepared(3, {0: 1, 1: 2})

        stepwise = apply_unitary(apply_unitary(state, first, (0, 1, 2)), second, (0, 1, 2))
        composed = apply_unitary(state, first.then(second), (0, 1, 2))

        for vector in set(stepwise.terms) | set(composed.terms):
            assert abs(stepwise.amplitude(vector) - composed.amplitude(vector)) < 1e-10


class TestHongOuMandel:

    def test_amplitudes(self, hom_state):
        assert hom_state.amplitude((2, 0)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert hom_state.amplitude((0, 2)) == pytest.approx(-1 / math.sqrt(2), abs=1e-12)

    def test_no_coincidence(self, hom_state):
        assert abs(hom_state.amplitude((1, 1))) < 1e-12
        assert marginal_distribution(hom_state).get((1, 1), 0.0) < 1e-12


class TestOperatorExpansionOracle:
    """Transition amplitudes against the expanded creation-operator polynomial."""

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_n_particles_in_one_mode(self, n):
        for seed in range(5):
            matrix = unitary_group.rvs(2, random_state=10 * n + seed)
            state = apply_unitary(prepared(2, {0: n}), matrix, (0, 1))
            expected = expand_creation_operators(matrix, (n, 0))
            for vector, amplitude in expected.items():
                assert abs(state.amplitude(vector) - amplitude) < 1e-10

    @pytest.mark.parametrize("pattern", [(1, 1, 0), (2, 0, 1), (1, 1, 1), (0, 3, 1)])
    def test_three_mode_patterns(self, pattern):
        matrix = unitary_group.rvs(3, random_state=sum(pattern) * 7)
        results = dict(transition_amplitudes(ModeUnitary(matrix), pattern))
        for vector, amplitude in expand_creation_operators(matrix, pattern).items():
            assert abs(results.get(vector, 0.0) - amplitude) < 1e-10

    def test_subset_of_modes(self):
        matrix = unitary_group.rvs(2, random_state=3)
        state = apply_unitary(prepared(4, {1: 1, 3: 2}), matrix, (3, 1))
        expected = expand_creation_operators(matrix, (2, 1))
        for (out3, out1), amplitude in expected.items():
            assert abs(state.amplitude((0, out1, 0, out3)) - amplitude) < 1e-10

    def test_duplicate_modes_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            apply_unitary(vacuum(3), H, (1, 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            apply_unitary(vacuum(3), H, (0, 1, 2))

    def test_sinks_pass_through(self):
        label = SinkLabel(4, 1, (2, 0), 2)
        state = OccupationState(2, {(1, 1): 0.6}, {label: 0.8})
        evolved = apply_unitary(state, H, (0, 1))
        assert evolved.sinks == {label: 0.8}
        assert evolved.norm_squared == pytest.approx(1.0)


# 3. POST-SELECTION AND READOUT
class TestPostselect:

    def test_probability_and_renormalization(self):
        state = apply_unitary(prepared(3, {0: 1}), unitary_group.rvs(3, random_state=5), (0, 1, 2))
        probability, conditioned = postselect(state, {2: 0})

        expected = abs(state.amplitude((1, 0, 0))) ** 2 + abs(state.amplitude((0, 1, 0))) ** 2
        assert probability == pytest.approx(expected)
        assert conditioned.norm_squared == pytest.approx(1.0)

    def test_unnormalized(self, hom_state):
        probability, conditioned = postselect(hom_state, {0: 2}, normalize=False)
        assert probability == pytest.approx(0.5)
        assert conditioned.norm_squared == pytest.approx(0.5)

    def test_no_match(self, hom_state):
        probability, conditioned = postselect(hom_state, {0: 1, 1: 1})
        assert probability == 0.0
        assert conditioned.is_empty

    def test_grouping(self):
        state = OccupationState(4, {(1, 0, 0, 1): 0.6, (0, 1, 1, 0): 0.8})
        probability, _ = postselect(state, {0: 1}, grouping=(0, 0, 1, 1))
        assert probability == pytest.approx(1.0)

    def test_mode_out_of_range(self, hom_state):
        with pytest.raises(ModeRangeError):
            postselect(hom_state, {5: 0})

    def test_sinks_never_match(self):
        state = OccupationState(2, {(1, 1): 0.6}, {SinkLabel(0, 0, (2, 0), 2): 0.8})
        probability, conditioned = postselect(state, {0: 1})
        assert probability == pytest.approx(0.36)
        assert not conditioned.sinks


class TestMarginalDistribution:

    def test_hom_marginal(self, hom_state):
        marginal = marginal_distribution(hom_state)
        assert marginal[(2, 0)] == pytest.approx(0.5)
        assert marginal[(0, 2)] == pytest.approx(0.5)
        assert SCATTERED not in marginal

    def test_grouping_sums_fine_patterns(self):
        state = OccupationState(4, {(1, 0, 0, 1): 0.6, (0, 1, 1, 0): 0.8})
        assert marginal_distribution(state, (0, 0, 1, 1)) == {(1, 1): pytest.approx(1.0)}

    def test_scattered_key(self):
        state = OccupationState(2, {(1, 1): 0.6}, {SinkLabel(0, 0, (2, 0), 2): 0.8})
        marginal = marginal_distribution(state)
        assert marginal[SCATTERED] == pytest.approx(0.64)

    def test_grouping_length_checked(self, hom_state):
        with pytest.raises(ShapeError):
            marginal_distribution(hom_state, (0, 0, 1))


class TestFidelity:

    def test_self_fidelity(self, hom_state):
        assert state_fidelity(hom_state, hom_state) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert state_fidelity(OccupationState(2, {(1, 0): 1.0}), OccupationState(2, {(0, 1): 1.0})) == 0.0

    def test_global_phase_ignored(self, hom_state):
        assert state_fidelity(hom_state, hom_state.scaled(1j)) == pytest.approx(1.0)

    def test_empty_state(self, hom_state):
        assert state_fidelity(hom_state, OccupationState.empty(2)) == 0.0


# 4. CONSERVATION (PROPERTY-BASED)
@st.composite
def random_circuits(draw):
    mode_count = draw(st.integers(min_value=2, max_value=4))
    sources = draw(
        st.dictionaries(
            st.integers(min_value=0, max_value=mode_count - 1),
            st.integers(min_value=1, max_value=2),
            min_size=1,
            max_size=2,
        )
    )
    steps = draw(
        st.lists(
            st.tuples(
                st.permutations(range(mode_count)).map(lambda p: tuple(p[:2])),
                st.integers(min_value=0, max_value=2**31 - 1),
            ),
            min_size=1,
            max_size=4,
        )
    )
    return mode_count, sources, steps


class TestConservation:

    @settings(max_examples=500, deadline=None)
    @given(random_circuits())
    def test_norm_and_particle_number(self, circuit):
        mode_count, sources, steps = circuit
        state = prepared(mode_count, sources)
        particles = sum(sources.values())
        for modes, seed in steps:
            state = apply_unitary(state, unitary_group.rvs(2, random_state=seed), modes)
            assert abs(state.norm_squared - 1.0) < 1e-10
            assert all(sum(v) == particles for v in state.terms)


# ============================================================================
# RUN ALL TESTS
# ============================================================================

if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
