"""Exact simulation of adiabatic antiferromagnetic state preparation in Rydberg atom chains."""

from .basis import ANGULAR, DomainError, LatticeSpec, StateVector
from .pulse import PulseSchedule, paper_default_schedule

__all__ = ["ANGULAR", "DomainError", "LatticeSpec", "PulseSchedule", "StateVector", "paper_default_schedule"]
__version__ = "0.1.0"
