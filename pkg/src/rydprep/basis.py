"""Configuration basis, chain geometry and state vectors.

Site ``j`` (1-based, left to right) is stored in bit ``j - 1`` of an integer
bitmask; a set bit means the atom is in the Rydberg state ``r``.  Energies and
frequencies are plain numbers in units of 2*pi*MHz (i.e. the value quoted as
``frequency / 2pi``), times are in microseconds, and hbar = 1.  Only
``ANGULAR`` converts these numbers into phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, sqrt
from typing import Iterable, Optional

import numpy as np

ANGULAR = 2.0 * np.pi  # phase per (MHz * us)

#: Nearest-neighbour interaction used throughout the reference runs (2pi MHz).
DEFAULT_NN_INTERACTION = 53.0
DEFAULT_LATTICE_CONSTANT = 5.0  # um

Configuration = int


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class LatticeSpec:
    """Equidistant open chain of ``n_sites`` atoms.

    ``c6`` is in (2pi MHz) um^6.  ``interaction_cutoff`` limits the pair
    interaction to ``|i - j| <= cutoff``; ``None`` keeps the full x^-6 tail.
    """

    n_sites: int
    lattice_constant: float = DEFAULT_LATTICE_CONSTANT
    c6: float = DEFAULT_NN_INTERACTION * DEFAULT_LATTICE_CONSTANT**6
    interaction_cutoff: Optional[int] = None

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise DomainError(f"n_sites must be a positive integer, got {self.n_sites}")
        if not self.lattice_constant > 0:
            raise DomainError(f"lattice_constant must be > 0, got {self.lattice_constant}")
        if not self.c6 > 0:
            raise DomainError(f"c6 must be > 0, got {self.c6}")
        if self.interaction_cutoff is not None and self.interaction_cutoff < 1:
            raise DomainError("interaction_cutoff must be >= 1 or None")

    @classmethod
    def standard(cls, n_sites: int, **kwargs) -> "LatticeSpec":
        """Chain with a = 5 um and C6/a^6 = 2pi x 53 MHz."""
        return cls(n_sites=n_sites, **kwargs)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    @property
    def length(self) -> float:
        """Distance between the end atoms, a (N - 1)."""
        return self.lattice_constant * (self.n_sites - 1)

    @property
    def nn_interaction(self) -> float:
        return self.c6 / self.lattice_constant**6

    def interaction_at(self, distance: int) -> float:
        """U for two atoms ``distance`` lattice sites apart."""
        if self.interaction_cutoff is not None and distance > self.interaction_cutoff:
            return 0.0
        return self.c6 / (self.lattice_constant * distance) ** 6


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over the 2^N configurations at time ``time``."""

    amplitudes: np.ndarray
    time: float = 0.0
    atol: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        n = amps.size
        if amps.ndim != 1 or n & (n - 1):
            raise DomainError(f"state length must be a power of two, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.atol:
            raise DomainError(f"state is not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    def __len__(self):
        return self.amplitudes.size

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def popcount(config: Configuration) -> int:
    return bin(config).count("1")


def excitation_counts(n_sites: int) -> np.ndarray:
    """Popcount of every basis index, as an int array of length 2^N."""
    idx = np.arange(1 << n_sites)
    counts = np.zeros(idx.size, dtype=np.int64)
    for j in range(n_sites):
        counts += (idx >> j) & 1
    return counts


def config_from_sites(sites: Iterable[int], n_sites: int) -> Configuration:
    """Bitmask for the 1-based excited ``sites``."""
    config = 0
    for s in sites:
        if not 1 <= s <= n_sites:
            raise DomainError(f"site {s} outside 1..{n_sites}")
        config |= 1 << (s - 1)
    return config


def sites_of(config: Configuration) -> list[int]:
    """1-based excited sites of ``config`` in ascending order."""
    return [j + 1 for j in range(config.bit_length()) if config >> j & 1]


def to_bitstring(config: Configuration, n_sites: int) -> str:
    """``'rgg...'`` form with site 1 leftmost."""
    return "".join("r" if config >> j & 1 else "g" for j in range(n_sites))


def from_bitstring(text: str) -> Configuration:
    config = 0
    for j, ch in enumerate(text):
        if ch == "r":
            config |= 1 << j
        elif ch != "g":
            raise DomainError(f"invalid character {ch!r} in configuration {text!r}")
    return config


def mirror(config: Configuration, n_sites: int) -> Configuration:
    """Reflect the chain, site j -> N + 1 - j."""
    out = 0
    for j in range(n_sites):
        if config >> j & 1:
            out |= 1 << (n_sites - 1 - j)
    return out


def mirror_permutation(n_sites: int) -> np.ndarray:
    """Index array ``p`` with ``psi[p]`` the reflected state."""
    return np.array([mirror(c, n_sites) for c in range(1 << n_sites)], dtype=np.int64)


def enumerate_subspace(spec: LatticeSpec, n: int) -> list[Configuration]:
    """All configurations with ``n`` excitations in ascending bitmask order."""
    N = spec.n_sites
    if not 0 <= n <= N:
        raise DomainError(f"excitation number {n} outside 0..{N}")
    configs = [sum(1 << j for j in c) for c in combinations(range(N), n)]
    configs.sort()
    assert len(configs) == comb(N, n)
    return configs


def pair_interaction(spec: LatticeSpec, i: int, j: int) -> float:
    """U_ij = C6 / (a |i - j|)^6 for 1-based sites ``i < j``."""
    if not 1 <= i < j <= spec.n_sites:
        raise DomainError(f"need 1 <= i < j <= {spec.n_sites}, got ({i}, {j})")
    return spec.interaction_at(j - i)


def interaction_energy(spec: LatticeSpec, config: Configuration) -> float:
    """Sum of U_ij over excited pairs of a single configuration."""
    sites = sites_of(config)
    return sum(spec.interaction_at(b - a) for a, b in combinations(sites, 2))


def basis_state(spec: LatticeSpec, config: Configuration, time: float = 0.0) -> StateVector:
    if not 0 <= config < spec.dim:
        raise DomainError(f"configuration {config} outside the 2^{spec.n_sites} basis")
    amps = np.zeros(spec.dim, dtype=complex)
    amps[config] = 1.0
    return StateVector(amps, time)


def symmetric_single_excitation(spec: LatticeSpec) -> StateVector:
    """(1/sqrt N) sum_j |1_j>."""
    amps = np.zeros(spec.dim, dtype=complex)
    amps[[1 << j for j in range(spec.n_sites)]] = 1.0 / sqrt(spec.n_sites)
    return StateVector(amps)


def af_target(spec: LatticeSpec) -> Configuration:
    """Alternating ``rgrg...r`` configuration; defined for odd N only."""
    N = spec.n_sites
    if N % 2 == 0:
        raise DomainError("the antiferromagnetic target needs an odd number of sites")
    return config_from_sites(range(1, N + 1, 2), N)


def as_amplitudes(psi, dim: Optional[int] = None) -> np.ndarray:
    """Complex ndarray view of a StateVector or array-like."""
    amps = np.asarray(psi, dtype=complex)
    if amps.ndim != 1:
        raise DomainError(f"expected a vector, got shape {amps.shape}")
    if dim is not None and amps.size != dim:
        raise DomainError(f"dimension mismatch: expected {dim}, got {amps.size}")
    return amps


