import math

import pytest
from pydantic import TypeAdapter, ValidationError

from app.core.schemas import (
    Beamsplitter,
    BeamsplitterSpec,
    CircuitIR,
    Diagnostic,
    Element,
    FitResult,
    GateReport,
    HomReport,
    Inject,
    PhaseShifter,
    Postselect,
    REPORT_COLUMNS,
    ReportRow,
    RunConfig,
    ScatteringModel,
)

# 1. CIRCUIT IR TESTS
class TestElements:

    def test_beamsplitter_modes(self):
        bs = Beamsplitter(i=0, j=1, theta=math.pi / 4)
        assert bs.kind == "bs"
        assert bs.modes == (0, 1)
        assert bs.phi == 0.0

    def test_elements_are_frozen(self):
        bs = Beamsplitter(i=0, j=1, theta=0.3)
        with pytest.raises(ValidationError):
            bs.theta = 0.1

    def test_inject_default_count(self):
        assert Inject(i=2).count == 1

    def test_postselect_modes_follow_constraints(self):
        ps = Postselect(constraints={1: 1, 2: 0})
        assert ps.modes == (1, 2)

    def test_discriminated_union(self):
        adapter = TypeAdapter(Element)
        element = adapter.validate_python({"kind": "ps", "i": 0, "phi": 1.5})
        assert isinstance(element, PhaseShifter)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            TypeAdapter(Element).validate_python({"kind": "mirror", "i": 0})


class TestCircuitIR:

    def test_equality_by_value(self):
        a = CircuitIR(mode_count=2, elements=[Inject(i=0), Beamsplitter(i=0, j=1, theta=0.5)])
        b = CircuitIR(mode_count=2, elements=[Inject(i=0), Beamsplitter(i=0, j=1, theta=0.5)])
        assert a == b

    def test_serialization_round_trip(self):
        ir = CircuitIR(
            mode_count=3,
            elements=[Inject(i=1), Beamsplitter(i=1, j=2, theta=0.4), Postselect(constraints={1: 1})],
            name="demo",
        )
        assert CircuitIR.model_validate(ir.model_dump()) == ir


class TestDiagnostic:

    def test_str_with_line_and_element(self):
        d = Diagnostic(message="mode 5 out of range", line=3, element=1)
        assert str(d) == "line 3: element 1: mode 5 out of range"

    def test_str_message_only(self):
        assert str(Diagnostic(message="missing modes declaration")) == "missing modes declaration"

# 2. PARAMETER MODELS
class TestBeamsplitterSpec:

    def test_defaults_are_balanced(self):
        spec = BeamsplitterSpec()
        assert spec.theta == pytest.approx(math.pi / 4)
        assert spec.phi == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError, match="finite"):
            BeamsplitterSpec(theta=float("nan"))


class TestScatteringModel:

    def test_hard_is_full_scattering(self):
        model = ScatteringModel.hard()
        assert model.kind == "hard"
        assert model.p_scatter == 1.0

    def test_hard_with_partial_probability_rejected(self):
        with pytest.raises(ValidationError):
            ScatteringModel(kind="hard", p_scatter=0.5)

    def test_partial_range(self):
        assert ScatteringModel.partial(0.0).p_scatter == 0.0
        with pytest.raises(ValidationError):
            ScatteringModel.partial(1.2)

    def test_from_probability(self):
        assert ScatteringModel.from_probability(1.0).kind == "hard"
        assert ScatteringModel.from_probability(0.3).kind == "partial"

# 3. REPORTS
class TestReports:

    def test_hom_report_probability_bounds(self):
        with pytest.raises(ValidationError):
            HomReport(
                n=2,
                coincidence_probability=0.0,
                bunching_probability=1.1,
                scattered_probability=0.0,
                fidelity_to_ideal=1.0,
            )

    def test_hom_report_needs_positive_n(self):
        with pytest.raises(ValidationError):
            HomReport(
                n=0,
                coincidence_probability=0.0,
                bunching_probability=1.0,
                scattered_probability=0.0,
                fidelity_to_ideal=1.0,
            )

    def test_gate_report(self):
        report = GateReport(
            n=4,
            success_probability=0.2,
            ideal_success_probability=0.25,
            fidelity_to_ideal=0.9,
            scattered_probability=0.1,
        )
        assert report.ideal_success_probability == 0.25

    def test_report_row_columns(self):
        row = ReportRow(n=1, coincidence=0.0, bunching=1.0, scattered=0.0, fidelity=1.0, wall_time_ms=0.0)
        assert tuple(row.model_dump()) == REPORT_COLUMNS

    def test_fit_result(self):
        fit = FitResult(column="scattered", slope=-1.0, intercept=0.0, r_squared=1.0, points=5)
        assert fit.points == 5

# 4. RUN CONFIG
class TestRunConfig:

    def test_defaults(self, tmp_path):
        config = RunConfig(circuit_path=tmp_path / "hom.circ")
        assert config.backend == "binned"
        assert config.n_list == [1]
        assert config.p_scatter == 1.0
        assert config.record_timing is True

    def test_binned_requires_ascending_n(self, tmp_path):
        with pytest.raises(ValidationError, match="strictly ascending"):
            RunConfig(circuit_path=tmp_path / "c", n_list=[4, 2])

    def test_binned_requires_non_empty_n(self, tmp_path):
        with pytest.raises(ValidationError, match="must not be empty"):
            RunConfig(circuit_path=tmp_path / "c", n_list=[])

    def test_binned_requires_positive_n(self, tmp_path):
        with pytest.raises(ValidationError, match="positive"):
            RunConfig(circuit_path=tmp_path / "c", n_list=[0, 1])

    def test_ideal_ignores_n_list(self, tmp_path):
        config = RunConfig(circuit_path=tmp_path / "c", backend="ideal", n_list=[])
        assert config.backend == "ideal"

    def test_unknown_backend(self, tmp_path):
        with pytest.raises(ValidationError):
            RunConfig(circuit_path=tmp_path / "c", backend="gpu")


# RUN ALL TESTS
if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
