import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from app.core.errors import CircuitParseError, CircuitValidationError
from app.core.fock import ModeUnitary
from app.core.schemas import (
    Beamsplitter,
    BeamsplitterSpec,
    CircuitIR,
    Diagnostic,
    Element,
    Inject,
    PhaseShifter,
    Postselect,
)
from app.modules.klm_gates import beamsplitter_unitary, phase_shifter_unitary
from app.utils.logger import get_logger

logger = get_logger(__name__)

_DECIMAL = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_DECIMAL_RE = re.compile(rf"^{_DECIMAL}$")
_PI_RE = re.compile(r"^(?P<sign>[+-]?)(?P<coef>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?pi(?:/(?P<den>\d+))?$")
_INT_RE = re.compile(r"^[+-]?\d+$")

# Largest denominator tried when printing an angle as a rational multiple of pi
_MAX_PI_DENOMINATOR = 64
_MAX_PI_NUMERATOR = 4096

_ARITY = {"modes": 1, "inject": 2, "bs": 4, "ps": 2}


class _LineError(Exception):
    pass


# 1. PARSING
def parse_angle(token: str) -> float:
    """Angle literal: a decimal, or [decimal]pi[/int] such as pi/4, 3pi/2, -0.5pi."""
    if _DECIMAL_RE.match(token):
        value = float(token)
    else:
        match = _PI_RE.match(token)
        if not match:
            raise _LineError(f"malformed angle '{token}'")
        coef = float(match.group("coef")) if match.group("coef") else 1.0
        den = int(match.group("den")) if match.group("den") else 1
        if den == 0:
            raise _LineError(f"malformed angle '{token}' (zero denominator)")
        value = coef * math.pi / den
        if match.group("sign") == "-":
            value = -value
    if not math.isfinite(value):
        raise _LineError(f"malformed angle '{token}' (not finite)")
    return value


def _parse_int(token: str) -> int:
    if not _INT_RE.match(token):
        raise _LineError(f"expected integer, got '{token}'")
    return int(token)


def _parse_constraints(text: str) -> Dict[int, int]:
    compact = "".join(text.split())
    if not compact:
        raise _LineError("'postselect' expects at least one MODE=COUNT constraint")
    constraints: Dict[int, int] = {}
    for item in compact.split(","):
        mode_text, sep, count_text = item.partition("=")
        if not sep:
            raise _LineError(f"malformed constraint '{item}', expected MODE=COUNT")
        mode = _parse_int(mode_text)
        if mode in constraints:
            raise _LineError(f"duplicate mode index {mode} in postselect")
        constraints[mode] = _parse_int(count_text)
    return constraints


def _parse_element(keyword: str, args: List[str], rest: str) -> Element:
    if keyword == "postselect":
        return Postselect(constraints=_parse_constraints(rest))
    expected = _ARITY[keyword]
    if len(args) != expected:
        raise _LineError(f"'{keyword}' expects {expected} arguments, got {len(args)}")
    if keyword == "inject":
        return Inject(i=_parse_int(args[0]), count=_parse_int(args[1]))
    if keyword == "bs":
        return Beamsplitter(
            i=_parse_int(args[0]),
            j=_parse_int(args[1]),
            theta=parse_angle(args[2]),
            phi=parse_angle(args[3]),
        )
    return PhaseShifter(i=_parse_int(args[0]), phi=parse_angle(args[1]))


def _parse_with_lines(text: str, name: str) -> Tuple[CircuitIR, List[int]]:
    diagnostics: List[Diagnostic] = []
    mode_count: Optional[int] = None
    elements: List[Element] = []
    element_lines: List[int] = []
    seen_statement = False
    last_line = 1

    for number, raw in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *tail = line.split(None, 1)
        rest = tail[0] if tail else ""
        args = rest.split()
        try:
            if keyword == "modes":
                if mode_count is not None:
                    raise _LineError("duplicate modes declaration")
                if seen_statement:
                    raise _LineError("modes declaration must come first")
                if len(args) != 1:
                    raise _LineError(f"'modes' expects 1 argument, got {len(args)}")
                mode_count = _parse_int(args[0])
                if mode_count <= 0:
                    raise _LineError("modes must be positive")
            elif keyword in _ARITY or keyword == "postselect":
                if not seen_statement:
                    diagnostics.append(Diagnostic(line=number, message="missing modes declaration"))
                elements.append(_parse_element(keyword, args, rest))
                element_lines.append(number)
            else:
                raise _LineError(f"unknown keyword '{keyword}'")
        except _LineError as e:
            diagnostics.append(Diagnostic(line=number, message=str(e)))
        seen_statement = True

    if mode_count is None and not diagnostics:
        diagnostics.append(Diagnostic(line=last_line, message="missing modes declaration"))
    if diagnostics:
        raise CircuitParseError(diagnostics)
    return CircuitIR(mode_count=mode_count, elements=elements, name=name), element_lines


def parse(text: str, name: str = "circuit") -> CircuitIR:
    """
    Parse circuit text into IR.

    Raises:
        CircuitParseError: with line-anchored diagnostics
    """
    ir, _ = _parse_with_lines(text, name)
    return ir


# 2. VALIDATION
def validate(ir: CircuitIR) -> List[Diagnostic]:
    """Return diagnostics (element index + reason); empty iff the IR is well formed."""
    diagnostics: List[Diagnostic] = []
    if ir.mode_count <= 0:
        diagnostics.append(Diagnostic(message="modes must be positive"))

    for index, element in enumerate(ir.elements):
        def report(message: str) -> None:
            diagnostics.append(Diagnostic(element=index, message=message))

        modes = element.modes
        if isinstance(element, Postselect) and not modes:
            report("postselect needs at least one constraint")
        for mode in modes:
            if not 0 <= mode < ir.mode_count:
                report(f"mode {mode} out of range")
        if len(set(modes)) != len(modes):
            report("duplicate mode index")

        if isinstance(element, Beamsplitter):
            if not (math.isfinite(element.theta) and math.isfinite(element.phi)):
                report("angles must be finite")
        elif isinstance(element, PhaseShifter):
            if not math.isfinite(element.phi):
                report("angles must be finite")
        elif isinstance(element, Inject):
            if element.count < 0:
                report("particle count must be non-negative")
        elif isinstance(element, Postselect):
            if any(count < 0 for count in element.constraints.values()):
                report("postselect count must be non-negative")
    return diagnostics


def compile_circuit(text: str, name: str = "circuit") -> CircuitIR:
    """Parse and validate; validation diagnostics also carry the source line."""
    ir, element_lines = _parse_with_lines(text, name)
    diagnostics = validate(ir)
    if diagnostics:
        for diagnostic in diagnostics:
            if diagnostic.element is not None:
                diagnostic.line = element_lines[diagnostic.element]
        raise CircuitValidationError(diagnostics)
    return ir


def load_circuit(path: Union[str, Path]) -> CircuitIR:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Circuit not found: {path}")
    text = path.read_text(encoding="utf-8")
    ir = compile_circuit(text, name=path.stem)
    logger.info(f"Loaded circuit '{ir.name}': {ir.mode_count} modes, {len(ir.elements)} elements")
    return ir


# 3. CANONICAL FORMAT
def format_angle(value: float) -> str:
    """Shortest exact pi-rational when one reproduces `value` bit-exactly, else repr()."""
    if value == 0.0:
        return "-0" if math.copysign(1.0, value) < 0 else "0"
    magnitude = abs(value)
    sign = "-" if value < 0 else ""
    for den in range(1, _MAX_PI_DENOMINATOR + 1):
        num = round(magnitude * den / math.pi)
        if num == 0 or num > _MAX_PI_NUMERATOR:
            continue
        # Same expression as parse_angle so the round trip is exact
        if float(num) * math.pi / den == magnitude:
            coef = "" if num == 1 else str(num)
            tail = "" if den == 1 else f"/{den}"
            return f"{sign}{coef}pi{tail}"
    return repr(value)


def _format_element(element: Element) -> str:
    if isinstance(element, Beamsplitter):
        return f"bs {element.i} {element.j} {format_angle(element.theta)} {format_angle(element.phi)}"
    if isinstance(element, PhaseShifter):
        return f"ps {element.i} {format_angle(element.phi)}"
    if isinstance(element, Inject):
        return f"inject {element.i} {element.count}"
    constraints = ",".join(f"{mode}={count}" for mode, count in sorted(element.constraints.items()))
    return f"postselect {constraints}"


def format_circuit(ir: CircuitIR) -> str:
    """Canonical text; parse(format_circuit(ir), ir.name) == ir."""
    lines = [f"modes {ir.mode_count}"]
    lines.extend(_format_element(element) for element in ir.elements)
    return "\n".join(lines)


def write_circuit(ir: CircuitIR, path: Union[str, Path]) -> None:
    Path(path).write_text(format_circuit(ir) + "\n", encoding="utf-8", newline="\n")


# 4. LOWERING
@dataclass(frozen=True)
class VacuumStep:
    mode_count: int


@dataclass(frozen=True)
class InjectStep:
    mode: int
    count: int
    element_id: int


@dataclass(frozen=True)
class UnitaryStep:
    modes: Tuple[int, ...]
    unitary: ModeUnitary
    element: Union[Beamsplitter, PhaseShifter]
    element_id: int


@dataclass(frozen=True)
class PostselectStep:
    constraints: Dict[int, int]
    element_id: int


PlanStep = Union[VacuumStep, InjectStep, UnitaryStep, PostselectStep]


@dataclass(frozen=True)
class ExecutionPlan:
    mode_count: int
    steps: Tuple[PlanStep, ...]

    @property
    def operations(self) -> Tuple[PlanStep, ...]:
        """Steps after the leading vacuum preparation, one per IR element."""
        return self.steps[1:]


def lower(ir: CircuitIR) -> ExecutionPlan:
    """Translate validated IR into state operations shared by both back-ends."""
    steps: List[PlanStep] = [VacuumStep(ir.mode_count)]
    for index, element in enumerate(ir.elements):
        if isinstance(element, Inject):
            steps.append(InjectStep(element.i, element.count, index))
        elif isinstance(element, Beamsplitter):
            unitary = beamsplitter_unitary(BeamsplitterSpec(theta=element.theta, phi=element.phi))
            steps.append(UnitaryStep(element.modes, unitary, element, index))
        elif isinstance(element, PhaseShifter):
            steps.append(UnitaryStep(element.modes, phase_shifter_unitary(element.phi), element, index))
        else:
            steps.append(PostselectStep(dict(element.constraints), index))
    return ExecutionPlan(ir.mode_count, tuple(steps))
