"""Drive schedules Omega(t), Delta(t).

Every schedule exposes ``total_duration``, ``sample(t) -> (rabi, detuning)``
and ``derivative(t) -> (drabi/dt, ddetuning/dt)``; propagation and spectrum
code only rely on that protocol.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi, sin
from typing import Protocol

import numpy as np

from .basis import DomainError

RAMP_SHAPES = ("sine-squared", "linear")

# slack for time arguments that land a rounding error outside [0, T]
_T_SLACK = 1e-12


class Schedule(Protocol):
    total_duration: float

    def sample(self, t: float) -> tuple[float, float]: ...

    def derivative(self, t: float) -> tuple[float, float]: ...


def _check_time(t: float, T: float) -> float:
    if t < -_T_SLACK * max(T, 1.0) or t > T * (1 + _T_SLACK) + _T_SLACK:
        raise DomainError(f"time {t} outside [0, {T}]")
    return min(max(t, 0.0), T)


@dataclass(frozen=True)
class PulseSchedule:
    """Ramp Omega up at fixed Delta_min, chirp linearly, ramp Omega down at Delta_max."""

    total_duration: float
    rabi_max: float
    detuning_min: float
    detuning_max: float
    ramp_fraction: float = 0.1
    ramp_shape: str = "sine-squared"

    def __post_init__(self):
        if not self.total_duration > 0:
            raise DomainError(f"total_duration must be > 0, got {self.total_duration}")
        if not self.rabi_max > 0:
            raise DomainError(f"rabi_max must be > 0, got {self.rabi_max}")
        if not self.detuning_min < self.detuning_max:
            raise DomainError("detuning_min must be < detuning_max")
        if not 0 < self.ramp_fraction < 0.5:
            raise DomainError(f"ramp_fraction must lie in (0, 0.5), got {self.ramp_fraction}")
        if self.ramp_shape not in RAMP_SHAPES:
            raise DomainError(f"ramp_shape must be one of {RAMP_SHAPES}, got {self.ramp_shape!r}")

    @property
    def ramp_duration(self) -> float:
        return self.ramp_fraction * self.total_duration

    @property
    def plateau(self) -> tuple[float, float]:
        """Interval with Omega = Omega_max and a linear chirp."""
        return self.ramp_duration, self.total_duration - self.ramp_duration

    @property
    def chirp_rate(self) -> float:
        t0, t1 = self.plateau
        return (self.detuning_max - self.detuning_min) / (t1 - t0)

    def with_duration(self, total_duration: float) -> "PulseSchedule":
        return PulseSchedule(total_duration, self.rabi_max, self.detuning_min, self.detuning_max,
                             self.ramp_fraction, self.ramp_shape)

    def _ramp(self, s: float) -> tuple[float, float]:
        # s: time since the start of a rising ramp
        tr = self.ramp_duration
        if self.ramp_shape == "linear":
            return self.rabi_max * s / tr, self.rabi_max / tr
        x = pi * s / (2 * tr)
        return self.rabi_max * sin(x) ** 2, self.rabi_max * pi / (2 * tr) * sin(2 * x)

    def sample(self, t: float) -> tuple[float, float]:
        T = self.total_duration
        t = _check_time(t, T)
        t0, t1 = self.plateau
        if t < t0:
            rabi = self._ramp(t)[0]
        elif t > t1:
            rabi = self._ramp(T - t)[0]
        else:
            rabi = self.rabi_max
        if t <= t0:
            detuning = self.detuning_min
        elif t >= t1:
            detuning = self.detuning_max
        else:
            detuning = self.detuning_min + self.chirp_rate * (t - t0)
        return rabi, detuning

    def derivative(self, t: float) -> tuple[float, float]:
        """Time derivatives; the plateau values are used at its closed ends."""
        T = self.total_duration
        t = _check_time(t, T)
        t0, t1 = self.plateau
        if t < t0:
            return self._ramp(t)[1], 0.0
        if t > t1:
            return -self._ramp(T - t)[1], 0.0
        return 0.0, self.chirp_rate

    def to_config(self) -> dict:
        return {
            "duration_us": self.total_duration,
            "rabi_max_mhz": self.rabi_max,
            "detuning_min_mhz": self.detuning_min,
            "detuning_max_mhz": self.detuning_max,
            "ramp_fraction": self.ramp_fraction,
            "ramp_shape": self.ramp_shape,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "PulseSchedule":
        return cls(
            total_duration=float(cfg["duration_us"]),
            rabi_max=float(cfg["rabi_max_mhz"]),
            detuning_min=float(cfg["detuning_min_mhz"]),
            detuning_max=float(cfg["detuning_max_mhz"]),
            ramp_fraction=float(cfg.get("ramp_fraction", 0.1)),
            ramp_shape=str(cfg.get("ramp_shape", "sine-squared")),
        )


def paper_default_schedule(total_duration: float = 2.0) -> PulseSchedule:
    """Omega_max = 2, Delta from -10 to +10 (2pi MHz), T = 2 us, 10% sine-squared ramps."""
    return PulseSchedule(total_duration, 2.0, -10.0, 10.0, 0.1, "sine-squared")


@dataclass(frozen=True)
class LinearSweep:
    """Constant Omega with Delta(t) = b (t - T/2)."""

    rabi: float
    slope: float
    total_duration: float

    def __post_init__(self):
        if not self.total_duration > 0:
            raise DomainError("total_duration must be > 0")
        if self.rabi < 0:
            raise DomainError("rabi must be >= 0")

    @classmethod
    def spanning(cls, rabi: float, span: float, total_duration: float) -> "LinearSweep":
        """Sweep covering a detuning range ``span`` (from -span/2 to +span/2)."""
        return cls(rabi, span / total_duration, total_duration)

    @property
    def span(self) -> float:
        return abs(self.slope) * self.total_duration

    def sample(self, t: float) -> tuple[float, float]:
        t = _check_time(t, self.total_duration)
        return self.rabi, self.slope * (t - 0.5 * self.total_duration)

    def derivative(self, t: float) -> tuple[float, float]:
        _check_time(t, self.total_duration)
        return 0.0, self.slope


@dataclass(frozen=True)
class ConstantDrive:
    """Time-independent Omega and Delta over ``total_duration``."""

    rabi: float
    detuning: float
    total_duration: float

    def sample(self, t: float) -> tuple[float, float]:
        _check_time(t, self.total_duration)
        return self.rabi, self.detuning

    def derivative(self, t: float) -> tuple[float, float]:
        _check_time(t, self.total_duration)
        return 0.0, 0.0


def sample_many(schedule, times) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``sample`` over an array of times."""
    pairs = np.array([schedule.sample(float(t)) for t in np.asarray(times).ravel()])
    return pairs[:, 0], pairs[:, 1]


def schedule_to_dict(schedule) -> dict:
    """JSON-friendly description tagged with the schedule type."""
    if isinstance(schedule, PulseSchedule):
        return {"type": "pulse", **schedule.to_config()}
    return {"type": type(schedule).__name__, **asdict(schedule)}

