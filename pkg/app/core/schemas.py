import math
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 1. CIRCUIT IR (circuit-lang)
class Beamsplitter(BaseModel):
    """
    Two-mode element; theta is the reflectivity angle, phi the relative phase (radians).
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["bs"] = "bs"
    i: int
    j: int
    theta: float
    phi: float = 0.0

    @property
    def modes(self) -> Tuple[int, ...]:
        return (self.i, self.j)


class PhaseShifter(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["ps"] = "ps"
    i: int
    phi: float

    @property
    def modes(self) -> Tuple[int, ...]:
        return (self.i,)


class Inject(BaseModel):
    """
    Particle source: `count` particles enter mode `i`.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["inject"] = "inject"
    i: int
    count: int = 1

    @property
    def modes(self) -> Tuple[int, ...]:
        return (self.i,)


class Postselect(BaseModel):
    """
    Detector condition applied when reached: mode -> required particle count.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["postselect"] = "postselect"
    constraints: Dict[int, int]

    @property
    def modes(self) -> Tuple[int, ...]:
        return tuple(self.constraints)


Element = Annotated[
    Union[Beamsplitter, PhaseShifter, Inject, Postselect],
    Field(discriminator="kind"),
]


class CircuitIR(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode_count: int
    elements: List[Element] = Field(default_factory=list)
    name: str = Field(default="circuit", description="Metadata only; not part of the text format")


class Diagnostic(BaseModel):
    """
    One parse or validation finding, anchored to a source line and/or element index.
    """
    message: str
    line: Optional[int] = None
    element: Optional[int] = None

    def __str__(self) -> str:
        parts = []
        if self.line is not None:
            parts.append(f"line {self.line}")
        if self.element is not None:
            parts.append(f"element {self.element}")
        parts.append(self.message)
        return ": ".join(parts)

# 2. ELEMENT AND MODEL PARAMETERS
class BeamsplitterSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta: float = Field(default=math.pi / 4, description="Reflectivity angle (radians)")
    phi: float = Field(default=0.0, description="Relative phase (radians)")

    @field_validator("theta", "phi")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("beamsplitter angles must be finite")
        return value


class ScatteringModel(BaseModel):
    """
    Coincidence scattering at beamsplitters. Hard always scatters coincident bins;
    Partial splits amplitude sqrt(p) into the sink and sqrt(1 - p) onwards.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["hard", "partial"] = "hard"
    p_scatter: float = Field(default=1.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _hard_scatters_fully(self) -> "ScatteringModel":
        if self.kind == "hard" and self.p_scatter != 1.0:
            raise ValueError("hard scattering model has p_scatter = 1")
        return self

    @classmethod
    def hard(cls) -> "ScatteringModel":
        return cls(kind="hard", p_scatter=1.0)

    @classmethod
    def partial(cls, p_scatter: float) -> "ScatteringModel":
        return cls(kind="partial", p_scatter=p_scatter)

    @classmethod
    def from_probability(cls, p_scatter: float) -> "ScatteringModel":
        return cls.hard() if p_scatter == 1.0 else cls.partial(p_scatter)

# 3. METRIC REPORTS
Probability = Annotated[float, Field(ge=0.0, le=1.0)]


class HomReport(BaseModel):
    n: int = Field(ge=1, description="Number of time bins")
    coincidence_probability: Probability
    bunching_probability: Probability
    scattered_probability: Probability
    fidelity_to_ideal: Probability


class GateReport(BaseModel):
    """
    Post-selected gate performance at n bins against the same-n scattering-free run.
    """
    n: int = Field(ge=1)
    success_probability: Probability
    ideal_success_probability: Probability
    fidelity_to_ideal: Probability
    scattered_probability: Probability

# 4. EXPERIMENT RUNNER
class RunConfig(BaseModel):
    circuit_path: Path
    backend: Literal["ideal", "binned"] = "binned"
    n_list: List[int] = Field(default_factory=lambda: [1])
    p_scatter: float = Field(default=1.0, ge=0.0, le=1.0)
    output_path: Optional[Path] = None
    seed: int = Field(default=0, description="Reserved; runs are deterministic")
    record_timing: bool = True

    @model_validator(mode="after")
    def _check_n_list(self) -> "RunConfig":
        if self.backend == "binned":
            if not self.n_list:
                raise ValueError("n_list must not be empty for the binned backend")
            if any(n <= 0 for n in self.n_list):
                raise ValueError("n_list must hold positive integers")
            if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
                raise ValueError("n_list must be strictly ascending")
        return self


class ReportRow(BaseModel):
    n: int = Field(ge=1)
    coincidence: Probability
    bunching: Probability
    scattered: Probability
    fidelity: Probability
    wall_time_ms: float = Field(ge=0.0)


REPORT_COLUMNS = ("n", "coincidence", "bunching", "scattered", "fidelity", "wall_time_ms")


class FitResult(BaseModel):
    column: str
    slope: float
    intercept: float
    r_squared: float
    points: int
