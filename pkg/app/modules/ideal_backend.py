from typing import Optional

from app.core.fock import OccupationState, apply_unitary, inject, postselect, vacuum
from app.core.schemas import CircuitIR
from app.modules.circuit_lang import (
    ExecutionPlan,
    InjectStep,
    PostselectStep,
    UnitaryStep,
    lower,
)
from app.utils.logger import get_logger

logger = get_logger(__name__)


def run_plan(
    plan: ExecutionPlan,
    initial: Optional[OccupationState] = None,
    normalize: bool = True,
) -> OccupationState:
    """
    Execute a lowered plan with exact photonic evolution (no time bins, no scattering).

    Args:
        plan: Output of circuit_lang.lower
        initial: Start state instead of the vacuum; must span plan.mode_count modes
        normalize: Renormalize after each post-selection. With False the squared norm of
            the result is the overall success probability

    Returns:
        Final state; the empty marker when a post-selection matched nothing
    """
    if initial is not None and initial.mode_count != plan.mode_count:
        raise ValueError(f"initial state has {initial.mode_count} modes, plan has {plan.mode_count}")
    state = initial if initial is not None else vacuum(plan.mode_count)

    for step in plan.operations:
        if isinstance(step, InjectStep):
            state = inject(state, step.mode, step.count)
        elif isinstance(step, UnitaryStep):
            state = apply_unitary(state, step.unitary, step.modes)
        elif isinstance(step, PostselectStep):
            probability, state = postselect(state, step.constraints, normalize=normalize)
            if probability == 0.0:
                logger.warning(f"Post-selection at element {step.element_id} matched nothing")
            else:
                logger.debug(f"Post-selection at element {step.element_id}: p={probability:.6g}")
    return state


def run_circuit(
    ir: CircuitIR,
    initial: Optional[OccupationState] = None,
    normalize: bool = True,
) -> OccupationState:
    return run_plan(lower(ir), initial=initial, normalize=normalize)
