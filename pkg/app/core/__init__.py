from .errors import (
    BosonSimError,
    CapacityError,
    CircuitError,
    CircuitParseError,
    CircuitValidationError,
    FitError,
    LayoutMismatchError,
    ModeRangeError,
    NonUnitaryError,
    ShapeError,
)
from .schemas import (
    Beamsplitter,
    PhaseShifter,
    Inject,
    Postselect,
    CircuitIR,
    Diagnostic,
    BeamsplitterSpec,
    ScatteringModel,
    HomReport,
    GateReport,
    RunConfig,
    ReportRow,
    FitResult,
)
from .permanent import permanent, permanent_by_definition
from .fock import (
    ModeUnitary,
    OccupationState,
    SinkLabel,
    vacuum,
    inject,
    apply_unitary,
    postselect,
    marginal_distribution,
    state_fidelity,
)

__all__ = [
    "BosonSimError",
    "CapacityError",
    "CircuitError",
    "CircuitParseError",
    "CircuitValidationError",
    "FitError",
    "LayoutMismatchError",
    "ModeRangeError",
    "NonUnitaryError",
    "ShapeError",
    "Beamsplitter",
    "PhaseShifter",
    "Inject",
    "Postselect",
    "CircuitIR",
    "Diagnostic",
    "BeamsplitterSpec",
    "ScatteringModel",
    "HomReport",
    "GateReport",
    "RunConfig",
    "ReportRow",
    "FitResult",
    "permanent",
    "permanent_by_definition",
    "ModeUnitary",
    "OccupationState",
    "SinkLabel",
    "vacuum",
    "inject",
    "apply_unitary",
    "postselect",
    "marginal_distribution",
    "state_fidelity",
]
