"""Time-dependent Schrodinger equation under a drive schedule.

i d|psi>/dt = 2 pi H(t) |psi>, with H in 2pi MHz and t in us.  The factor
``ANGULAR`` enters the dynamics here and nowhere else in the propagation path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .basis import ANGULAR, Configuration, DomainError, LatticeSpec, StateVector, as_amplitudes
from .hamiltonian import apply_drive, diagonal_cache

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 400
NORM_TOL = 1e-8


class IntegrationError(RuntimeError):
    """The ODE solver failed; ``time`` is where it stopped."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t = {time:.6g} us)")
        self.time = time


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (samples, 2^N), complex
    schedule: object
    spec: LatticeSpec

    def __len__(self):
        return self.times.size

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def state(self, i: int) -> StateVector:
        return StateVector(self.states[i], float(self.times[i]), atol=NORM_TOL)

    @property
    def final(self) -> StateVector:
        return self.state(-1)

    def populations(self) -> np.ndarray:
        """|<c|psi(t)>|^2 for every configuration, shape (samples, 2^N)."""
        return np.abs(self.states) ** 2

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


def _rhs_factory(spec: LatticeSpec, schedule):
    cache = diagonal_cache(spec)
    inter = cache.interaction_energy
    counts = cache.excitation_count
    n_sites = spec.n_sites

    def rhs(t, y):
        rabi, detuning = schedule.sample(t)
        out = (inter - detuning * counts) * y
        if rabi:
            out -= rabi * apply_drive(y, n_sites)
        return -1j * ANGULAR * out

    return rhs


def evolve(
    spec: LatticeSpec,
    schedule,
    psi0,
    sample_count: int = DEFAULT_SAMPLES,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    backward: bool = False,
) -> Trajectory:
    """Integrate from ``psi0`` over [0, T] and keep ``sample_count`` snapshots.

    With ``backward=True`` ``psi0`` is taken as the state at t = T and the
    equation is integrated down to t = 0; the trajectory is still returned in
    ascending time order.
    """
    if sample_count < 2:
        raise DomainError("sample_count must be >= 2")
    y0 = as_amplitudes(psi0, spec.dim).copy()
    norm0 = np.linalg.norm(y0)
    if abs(norm0 - 1.0) > 1e-9:
        raise DomainError(f"initial state not normalized (norm = {norm0!r})")
    T = float(schedule.total_duration)
    times = np.linspace(0.0, T, sample_count)
    span = (T, 0.0) if backward else (0.0, T)
    t_eval = times[::-1] if backward else times

    sol = solve_ivp(
        _rhs_factory(spec, schedule), span, y0, method="DOP853",
        t_eval=t_eval, rtol=rtol, atol=atol,
    )
    if sol.status != 0:
        stop = float(sol.t[-1]) if sol.t.size else span[0]
        raise IntegrationError(f"integration failed: {sol.message}", stop)
    states = sol.y.T
    if backward:
        states = states[::-1]
    states = np.ascontiguousarray(states)
    traj = Trajectory(times, states, schedule, spec)
    drift = traj.norm_drift()
    log.debug("evolve N=%d T=%g: %d rhs calls, norm drift %.2e", spec.n_sites, T, sol.nfev, drift)
    if drift > NORM_TOL:
        raise IntegrationError(f"norm drift {drift:.2e} exceeds {NORM_TOL:g}", T)
    return traj


def checkpoint_populations(traj: Trajectory, configs: Sequence[Configuration]) -> np.ndarray:
    """Population time series of the given configurations, shape (samples, len(configs))."""
    idx = np.asarray(list(configs), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= traj.states.shape[1]):
        raise DomainError("configuration outside the basis")
    return np.abs(traj.states[:, idx]) ** 2
