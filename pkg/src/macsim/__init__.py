"""Discrete-event simulator and analytic toolkit for 802.11 MAC contention."""

from .analytic import ContentionRound, collision_probability, probability_curve
from .sim import SimConfig, Simulation, simulate

__all__ = [
    "ContentionRound", "collision_probability", "probability_curve",
    "SimConfig", "Simulation", "simulate",
]
