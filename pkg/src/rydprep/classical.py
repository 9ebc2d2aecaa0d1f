"""Classical Ising limit (Omega -> 0) of the Rydberg chain.

All decisions (minimal configurations, crossings, ground states) use exact
diagonal energies of integer-site configurations.  The closed-form ladder in
``min_energy_formula`` assumes equidistant excitations and is only a
reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .basis import (
    Configuration,
    DomainError,
    LatticeSpec,
    config_from_sites,
    enumerate_subspace,
    excitation_counts,
    interaction_energy,
    popcount,
)

#: configurations are enumerated exhaustively up to this size
BRUTE_FORCE_MAX_SITES = 20
#: energies closer than this (relative) count as tied; mirror images differ only by rounding
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ClassicalLevel:
    n: int
    config: Configuration
    energy: float  # at the detuning the level was evaluated for
    is_minimal: bool

    def at(self, spec: LatticeSpec, detuning: float) -> "ClassicalLevel":
        return ClassicalLevel(self.n, self.config, classical_energy(spec, self.config, detuning), self.is_minimal)


def classical_energy(spec: LatticeSpec, config: Configuration, detuning: float) -> float:
    return -detuning * popcount(config) + interaction_energy(spec, config)


def interaction_energies(spec: LatticeSpec) -> np.ndarray:
    """Interaction energy of every basis configuration (length 2^N)."""
    N = spec.n_sites
    idx = np.arange(1 << N)
    occ = [(idx >> j) & 1 for j in range(N)]
    energy = np.zeros(idx.size)
    for i in range(N):
        for j in range(i + 1, N):
            u = spec.interaction_at(j - i)
            if u:
                energy += u * (occ[i] & occ[j])
    return energy


def _lowest(configs, energies, scale: float = 0.0) -> Configuration:
    """Smallest bitmask among the configurations tied for the lowest energy.

    ``scale`` adds the magnitude of terms that cancelled in the energies.
    """
    energies = np.asarray(energies, dtype=float)
    best = energies.min()
    tol = TIE_RTOL * (abs(best) + scale)
    return min(int(c) for c, e in zip(configs, energies) if e <= best + tol)


def _evenly_spaced_candidates(N: int, n: int):
    """Configurations with both ends excited and gaps in {floor, ceil}."""
    total = N - 1
    gaps = n - 1
    lo, extra = divmod(total, gaps)
    for long_positions in combinations(range(gaps), extra):
        sites = [1]
        long_set = set(long_positions)
        for g in range(gaps):
            sites.append(sites[-1] + lo + (1 if g in long_set else 0))
        yield config_from_sites(sites, N)


def min_energy_config(spec: LatticeSpec, n: int) -> Configuration:
    """Lowest-interaction configuration with ``n`` excitations.

    For a strictly decreasing convex tail the optimum pins both chain ends and
    spaces the excitations with gaps differing by at most one site, so only
    those gap orderings are searched.  Ties go to the smallest bitmask.
    """
    N = spec.n_sites
    if not 0 <= n <= N:
        raise DomainError(f"excitation number {n} outside 0..{N}")
    if n == 0:
        return 0
    if n == 1:
        return 1
    if spec.interaction_cutoff is not None:
        # a truncated tail has plateaus of zero interaction; fall back to search
        candidates = enumerate_subspace(spec, n)
    else:
        candidates = sorted(set(_evenly_spaced_candidates(N, n)))
    return _lowest(candidates, [interaction_energy(spec, c) for c in candidates])


def brute_force_min_config(spec: LatticeSpec, n: int) -> Configuration:
    """Argmin over every configuration of the subspace (oracle)."""
    configs = enumerate_subspace(spec, n)
    return _lowest(configs, interaction_energies(spec)[configs])


def min_energy_formula(spec: LatticeSpec, n: int, detuning: float) -> tuple[float, float]:
    """Equidistant-excitation ladder E_n^min: (exact sum, nearest-excited-neighbour form)."""
    N = spec.n_sites
    if n < 1:
        raise DomainError("the ladder formula needs n >= 1")
    if N < 2:
        raise DomainError("the ladder formula needs N >= 2")
    if n == 1:
        return -detuning, -detuning
    l6 = spec.length**6
    series = sum(k / (n - k) ** 6 for k in range(1, n))
    exact = -n * detuning + spec.c6 / l6 * (n - 1) ** 6 * series
    nearest = -n * detuning + spec.nn_interaction * (n - 1) ** 7 / (N - 1) ** 6
    return exact, nearest


def crossing_detuning(spec: LatticeSpec, n: int, rtol: float = 1e-10) -> float:
    """Detuning where the minimal n- and (n+1)-excitation levels cross.

    The energy difference is linear in the detuning; it is bracketed on
    [0, 4 C6/a^6] and bisected to ``rtol``.
    """
    N = spec.n_sites
    if not 0 <= n < N:
        raise DomainError(f"need 0 <= n < {N}")
    lower = min_energy_config(spec, n)
    upper = min_energy_config(spec, n + 1)

    def diff(delta):
        return classical_energy(spec, upper, delta) - classical_energy(spec, lower, delta)

    a, b = 0.0, 4.0 * spec.nn_interaction
    fa = diff(a)
    if fa <= 0.0:
        return a
    if diff(b) > 0.0:
        raise DomainError(f"crossing {n}->{n + 1} lies above the bracket [0, {b}]")
    while b - a > rtol * max(abs(b), 1e-300):
        mid = 0.5 * (a + b)
        if diff(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def ground_config_at(spec: LatticeSpec, detuning: float) -> Configuration:
    """Configuration of lowest classical energy over the whole basis."""
    if spec.n_sites > BRUTE_FORCE_MAX_SITES:
        raise DomainError(f"brute-force ground state limited to N <= {BRUTE_FORCE_MAX_SITES}")
    energy = interaction_energies(spec) - detuning * excitation_counts(spec.n_sites)
    return _lowest(range(energy.size), energy, abs(detuning) * spec.n_sites)


def ladder(spec: LatticeSpec, n_max: int | None = None) -> list[tuple[ClassicalLevel, float | None]]:
    """Minimal levels n = 0..n_max at zero detuning with the crossing to n + 1.

    ``n_max`` defaults to (N + 1) // 2.  The last level's crossing is None.
    """
    N = spec.n_sites
    if n_max is None:
        n_max = (N + 1) // 2
    rows = []
    for n in range(n_max + 1):
        config = min_energy_config(spec, n)
        level = ClassicalLevel(n, config, classical_energy(spec, config, 0.0), True)
        cross = crossing_detuning(spec, n) if n < n_max else None
        rows.append((level, cross))
    return rows


def subspace_levels(spec: LatticeSpec, n: int, detuning: float) -> list[ClassicalLevel]:
    """Every level of the n-excitation subspace, minimal one flagged."""
    best = min_energy_config(spec, n)
    return [
        ClassicalLevel(n, c, classical_energy(spec, c, detuning), c == best)
        for c in enumerate_subspace(spec, n)
    ]

