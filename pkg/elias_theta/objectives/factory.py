"""
Theta Objective Factory

Centralizes construction of objective strategies so the optimizer and the CLI
never branch on ObjectiveKind themselves.

To add a new objective:
1. Create a class in methods.py inheriting from BaseObjective
2. Add the kind to ObjectiveKind in models/certificate.py
3. Register it in OBJECTIVES below
"""

import numpy as np

from elias_theta.exceptions import PreconditionError
from elias_theta.models import ObjectiveKind
from elias_theta.objectives.base import BaseObjective
from elias_theta.objectives.methods import MinimaxObjective, WeightedObjective

OBJECTIVES: dict[ObjectiveKind, type[BaseObjective]] = {
    ObjectiveKind.MINIMAX: MinimaxObjective,
    ObjectiveKind.WEIGHTED: WeightedObjective,
}


class ObjectiveFactory:
    """
    Factory for theta objective strategies.

    Example:
        objective = ObjectiveFactory.create(ObjectiveKind.WEIGHTED, weights=[0.7, 0.3])
        f, value = objective.best_handle(vectors)
    """

    @staticmethod
    def create(kind: ObjectiveKind, weights: np.ndarray | None = None) -> BaseObjective:
        """
        Create an objective instance.

        Args:
            kind: Objective kind
            weights: Composition Q, required for WEIGHTED and rejected for MINIMAX

        Raises:
            PreconditionError: If the kind is unknown or the weights do not match it
        """
        if kind not in OBJECTIVES:
            raise PreconditionError(
                f"Unsupported objective: {kind}. "
                f"Supported objectives are: {', '.join(k.value for k in OBJECTIVES)}",
                field="objective_kind",
            )
        if kind is ObjectiveKind.WEIGHTED:
            if weights is None:
                raise PreconditionError("The weighted objective needs a composition", field="weights")
            return WeightedObjective(weights)
        if weights is not None:
            raise PreconditionError("The minimax objective takes no weights", field="weights")
        return OBJECTIVES[kind]()

    @staticmethod
    def get_supported_kinds() -> list[str]:
        return [kind.value for kind in OBJECTIVES]


def get_objective(kind: ObjectiveKind, weights: np.ndarray | None = None) -> BaseObjective:
    """Shortcut for ObjectiveFactory.create()."""
    return ObjectiveFactory.create(kind, weights)
