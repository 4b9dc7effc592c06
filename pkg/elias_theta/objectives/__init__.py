"""
Theta Objectives Package

Strategy pattern for the two theta objectives (minimax and weighted). Each
objective knows its exact value, a smooth surrogate for gradient optimization,
and how to choose the handle for fixed vectors.
"""

from elias_theta.objectives.base import BaseObjective
from elias_theta.objectives.factory import ObjectiveFactory, get_objective
from elias_theta.objectives.methods import MinimaxObjective, WeightedObjective

__all__ = [
    "BaseObjective",
    "MinimaxObjective",
    "ObjectiveFactory",
    "WeightedObjective",
    "get_objective",
]
