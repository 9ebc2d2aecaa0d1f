"""Observables and estimators built on top of trajectories and spectra."""

from __future__ import annotations

from dataclasses import dataclass
from math import exp
from typing import Mapping, Optional, Sequence

import numpy as np

from .basis import (
    ANGULAR,
    Configuration,
    DomainError,
    LatticeSpec,
    af_target,
    as_amplitudes,
    basis_state,
    excitation_counts,
    symmetric_single_excitation,
)
from .classical import min_energy_config
from .hamiltonian import HamiltonianParams
from .propagate import DEFAULT_SAMPLES, Trajectory, evolve
from .spectrum import SLOPE_WINDOW, gap_trace, instantaneous_eigenpairs

#: Omega used in place of an exact zero in phase scans, relative to the largest grid value.
CLASSICAL_RABI_FRACTION = 1e-6
FIT_MIN_SITES = 5


def excitation_class_populations(traj: Trajectory) -> np.ndarray:
    """P_n(t) summed over configurations with n excitations, shape (samples, N + 1)."""
    N = traj.spec.n_sites
    onehot = np.eye(N + 1)[excitation_counts(N)]
    return traj.populations() @ onehot


def path_populations(traj: Trajectory, path_configs: Sequence[Configuration]) -> np.ndarray:
    """Summed population of the listed configurations at every sample."""
    configs = [int(c) for c in path_configs]
    if len(set(configs)) != len(configs):
        raise DomainError("path configurations must be distinct")
    if any(not 0 <= c < traj.spec.dim for c in configs):
        raise DomainError("configuration outside the basis")
    return traj.populations()[:, configs].sum(axis=1)


def rydberg_density(traj: Trajectory) -> np.ndarray:
    """<sigma_rr^j>(t) for sites j = 1..N, shape (samples, N)."""
    N = traj.spec.n_sites
    bits = (np.arange(traj.spec.dim)[:, None] >> np.arange(N)[None, :]) & 1
    return traj.populations() @ bits


def lowest_energy_path(spec: LatticeSpec) -> list[Configuration]:
    """Empty chain, every single excitation, then the minimal configuration for
    n = 2..(N+1)/2."""
    N = spec.n_sites
    path = [0] + [1 << j for j in range(N)]
    path += [min_energy_config(spec, n) for n in range(2, (N + 1) // 2 + 1)]
    return path


def odd_site_path(spec: LatticeSpec) -> list[Configuration]:
    """Every configuration with excitations on odd sites only, up to the target."""
    odd_mask = af_target(spec)
    return [c for c in range(spec.dim) if c & ~odd_mask == 0]


def lz_fidelity(min_gap: float, slope: float) -> float:
    """1 - exp(-2pi (dE/2)^2 / |dE01/dt|) with dE in 2pi MHz and the slope in 2pi MHz/us.

    Both quantities are cyclic, so converting the squared gap and the slope to
    angular units leaves exactly one factor 2pi in the exponent.
    """
    if not slope > 0:
        raise DomainError(f"slope must be > 0, got {slope}")
    if min_gap < 0:
        raise DomainError(f"min_gap must be >= 0, got {min_gap}")
    return 1.0 - exp(-2.0 * np.pi * ANGULAR * (0.5 * min_gap) ** 2 / slope)


@dataclass(frozen=True)
class FidelityReport:
    n_sites: int
    duration: float
    exact_fidelity: float
    lz_fidelity: float
    min_gap: float
    slope: float
    t_min: float
    n_target: int

    def __post_init__(self):
        for name in ("exact_fidelity", "lz_fidelity"):
            value = getattr(self, name)
            if not -1e-9 <= value <= 1 + 1e-9:
                raise DomainError(f"{name} = {value} outside [0, 1]")


def fidelity_report(
    spec: LatticeSpec,
    schedule,
    *,
    sample_count: int = DEFAULT_SAMPLES,
    gap_samples: int = 200,
    slope_window: float = SLOPE_WINDOW,
) -> FidelityReport:
    """Exact |<target|psi(T)>|^2 from |0> next to the Landau-Zener estimate."""
    target = af_target(spec)
    traj = evolve(spec, schedule, basis_state(spec, 0), sample_count)
    exact = float(abs(traj.states[-1, target]) ** 2)
    gap = gap_trace(spec, schedule, gap_samples, slope_window=slope_window)
    return FidelityReport(spec.n_sites, float(schedule.total_duration), exact,
                          lz_fidelity(gap.min_gap, gap.slope), gap.min_gap, gap.slope,
                          gap.t_min, (spec.n_sites + 1) // 2)


def default_probes(spec: LatticeSpec) -> dict[str, np.ndarray]:
    """|0>, the symmetric single excitation, |n^min> for n = 2..N and |N>."""
    N = spec.n_sites
    probes = {"empty": np.asarray(basis_state(spec, 0))}
    probes["single_sym"] = np.asarray(symmetric_single_excitation(spec))
    for n in range(2, N):
        probes[f"min_{n}"] = np.asarray(basis_state(spec, min_energy_config(spec, n)))
    if N >= 2:
        probes["full"] = np.asarray(basis_state(spec, spec.dim - 1))
    return probes


def phase_scan(
    spec: LatticeSpec,
    rabi_grid: Sequence[float],
    detuning_grid: Sequence[float],
    probes: Optional[Mapping[str, np.ndarray]] = None,
) -> tuple[list[str], np.ndarray]:
    """|<probe|a_0(Omega, Delta)>|^2 on a grid, shape (len(rabi), len(detuning), probes).

    A zero Rabi frequency is replaced by 1e-6 times the largest grid value so
    the ground state stays unique.
    """
    rabi_grid = np.asarray(rabi_grid, dtype=float)
    detuning_grid = np.asarray(detuning_grid, dtype=float)
    if rabi_grid.size == 0 or detuning_grid.size == 0:
        raise DomainError("phase_scan grids must be nonempty")
    if np.any(rabi_grid < 0):
        raise DomainError("Rabi frequencies must be >= 0")
    probes = default_probes(spec) if probes is None else probes
    names = list(probes)
    P = np.array([as_amplitudes(probes[k], spec.dim) for k in names])
    floor = CLASSICAL_RABI_FRACTION * max(rabi_grid.max(), 1e-300)
    out = np.empty((rabi_grid.size, detuning_grid.size, len(names)))
    for i, rabi in enumerate(rabi_grid):
        rabi = rabi if rabi > 0 else floor
        for j, detuning in enumerate(detuning_grid):
            _, v = instantaneous_eigenpairs(spec, HamiltonianParams(rabi, detuning, spec), 1)
            out[i, j] = np.abs(P.conj() @ v[:, 0]) ** 2
    return names, out


@dataclass(frozen=True)
class ScalingFit:
    prefactor: float
    exponent: float
    n_values: tuple[int, ...]
    residual: float

    def predict(self, n_sites) -> np.ndarray:
        """Fitted dE / (2 Omega_max)."""
        return self.prefactor / np.asarray(n_sites, dtype=float) ** self.exponent


def fit_gap_scaling(
    gap_points: Sequence[tuple[int, float]],
    rabi_max: float,
    *,
    min_sites: int = FIT_MIN_SITES,
) -> ScalingFit:
    """Least-squares fit of log(dE / 2 Omega_max) = log A - nu log N.

    Points with N < ``min_sites`` are dropped; ``residual`` is the RMS of the
    log residuals.
    """
    pts = sorted((int(n), float(g)) for n, g in gap_points)
    if any(g <= 0 for _, g in pts):
        raise DomainError("gaps must be positive")
    if not rabi_max > 0:
        raise DomainError("rabi_max must be > 0")
    pts = [(n, g) for n, g in pts if n >= min_sites]
    if len(pts) < 3:
        raise DomainError("the scaling fit needs at least 3 points inside the fit window")
    n = np.array([p[0] for p in pts], dtype=float)
    y = np.log(np.array([p[1] for p in pts]) / (2.0 * rabi_max))
    slope, intercept = np.polyfit(np.log(n), y, 1)
    resid = y - (intercept + slope * np.log(n))
    return ScalingFit(float(np.exp(intercept)), float(-slope), tuple(int(x) for x in n),
                      float(np.sqrt(np.mean(resid**2))))

