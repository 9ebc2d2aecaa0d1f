"""Matrix-free many-body Hamiltonian of the driven Rydberg chain.

    H = -Delta sum_j n_j + sum_{i<j} U_ij n_i n_j - Omega sum_j (sigma_rg^j + sigma_gr^j)

The diagonal is precomputed once per lattice; the drive term is applied by
flipping one bit at a time, which for bit ``j`` is a reversal of the middle
axis of ``psi.reshape(-1, 2, 2**j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import DomainError, LatticeSpec, excitation_counts, mirror_permutation
from .classical import interaction_energies


@dataclass(frozen=True)
class HamiltonianParams:
    rabi: float
    detuning: float
    spec: LatticeSpec

    def __post_init__(self):
        if self.rabi < 0:
            raise DomainError(f"rabi must be >= 0, got {self.rabi}")


@dataclass(frozen=True, eq=False)
class DiagonalCache:
    interaction_energy: np.ndarray
    excitation_count: np.ndarray
    n_sites: int

    @property
    def dim(self) -> int:
        return self.interaction_energy.size

    def diagonal(self, detuning: float) -> np.ndarray:
        return self.interaction_energy - detuning * self.excitation_count


@lru_cache(maxsize=32)
def diagonal_cache(spec: LatticeSpec) -> DiagonalCache:
    energy = interaction_energies(spec)
    counts = excitation_counts(spec.n_sites).astype(float)
    energy.setflags(write=False)
    counts.setflags(write=False)
    return DiagonalCache(energy, counts, spec.n_sites)


def apply_drive(psi: np.ndarray, n_sites: int) -> np.ndarray:
    """sum_j sigma_x^j psi, one bit flip per site."""
    out = np.zeros_like(psi)
    for j in range(n_sites):
        out += psi.reshape(-1, 2, 1 << j)[:, ::-1, :].reshape(psi.shape)
    return out


def apply_hamiltonian(params: HamiltonianParams, cache: DiagonalCache, psi) -> np.ndarray:
    """H psi without building H; O(N 2^N) work."""
    if params.spec.n_sites != cache.n_sites:
        raise DomainError("cache built for a different lattice")
    psi = np.asarray(psi)
    if psi.ndim != 1 or psi.size != cache.dim:
        raise DomainError(f"dimension mismatch: expected {cache.dim}, got {psi.shape}")
    out = cache.diagonal(params.detuning) * psi
    if params.rabi:
        out -= params.rabi * apply_drive(psi, cache.n_sites)
    return out


def apply_hamiltonian_derivative(cache: DiagonalCache, drabi: float, ddetuning: float, psi) -> np.ndarray:
    """(dH/dt) psi given the schedule derivatives dOmega/dt, dDelta/dt."""
    psi = np.asarray(psi)
    if psi.ndim != 1 or psi.size != cache.dim:
        raise DomainError(f"dimension mismatch: expected {cache.dim}, got {psi.shape}")
    out = -ddetuning * cache.excitation_count * psi
    if drabi:
        out -= drabi * apply_drive(psi, cache.n_sites)
    return out


def dense_hamiltonian(params: HamiltonianParams, cache: DiagonalCache | None = None) -> np.ndarray:
    """Real symmetric 2^N x 2^N matrix, built column by column from bit flips."""
    spec = params.spec
    cache = cache or diagonal_cache(spec)
    dim = cache.dim
    H = np.diag(cache.diagonal(params.detuning))
    idx = np.arange(dim)
    for j in range(spec.n_sites):
        H[idx, idx ^ (1 << j)] -= params.rabi
    return H


def ising_map_shift(spec: LatticeSpec, detuning: float) -> float:
    """Constant offset between the Rydberg and spin-1/2 Ising forms.

    With n_j = (1 + sigma_z^j)/2 the Rydberg Hamiltonian equals the Ising
    Hamiltonian with fields h_j and couplings V_ij plus this constant.
    """
    cache = diagonal_cache(spec)
    N = spec.n_sites
    pair_sum = cache.interaction_energy[(1 << N) - 1]  # all pairs excited
    return -0.5 * detuning * N + 0.25 * pair_sum


def ising_fields(spec: LatticeSpec, detuning: float) -> tuple[np.ndarray, np.ndarray]:
    """Longitudinal fields h_j and couplings V_ij of the mapped Ising model."""
    N = spec.n_sites
    U = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            if i != j:
                U[i, j] = spec.interaction_at(abs(i - j))
    h = detuning - 0.5 * U.sum(axis=1)
    return h, 0.25 * np.triu(U, 1)


def mirror_commutator_norm(params: HamiltonianParams, psi) -> float:
    """|| (H R - R H) psi || for the site-reflection permutation R."""
    cache = diagonal_cache(params.spec)
    perm = mirror_permutation(params.spec.n_sites)
    psi = np.asarray(psi)
    return float(np.linalg.norm(
        apply_hamiltonian(params, cache, psi[perm]) - apply_hamiltonian(params, cache, psi)[perm]
    ))
