from typing import List, TYPE_CHECKING

if TYPE_CHECKING:
    from app.core.schemas import Diagnostic


class BosonSimError(Exception):
    """Base class for all simulator errors."""


class ShapeError(BosonSimError, ValueError):
    """Matrix or vector has the wrong shape."""


class NonUnitaryError(BosonSimError, ValueError):
    """Mode transform violates ||U^dagger U - I||_max < tol."""


class ModeRangeError(BosonSimError, ValueError):
    """Mode index outside the state's mode count."""


class CapacityError(BosonSimError, ValueError):
    """Particle or mode count exceeds the configured cap."""


class LayoutMismatchError(BosonSimError, ValueError):
    """State does not live on the binned layout's fine modes."""


class FitError(BosonSimError, ValueError):
    """Scaling fit cannot be computed from the given rows."""


class CircuitError(BosonSimError, ValueError):
    """Circuit text or IR is malformed; carries line/element anchored diagnostics."""

    def __init__(self, diagnostics: List["Diagnostic"]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class CircuitParseError(CircuitError):
    pass


class CircuitValidationError(CircuitError):
    pass
