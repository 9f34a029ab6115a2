"""Reactive navigation with motion policies over elevation-map vector fields."""

from .se2 import Pose2, Tangent2

__all__ = ["Pose2", "Tangent2"]
