"""Instantaneous eigenbasis of H(t): energies, tracked eigenvectors, gap
statistics, non-adiabatic couplings and the first-order dressed ground state.

Non-adiabatic quantities carry one ``ANGULAR`` factor: with energies E in
2pi MHz the coupling <a_m|d/dt|a_n> = <a_m|dH/dt|a_n> / (E_n - E_m) is already
in 1/us, while the dressing amplitude <a_0|dH/dt|a_k> / (E_0 - E_k)^2 must be
divided by 2pi to become dimensionless.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .basis import ANGULAR, DomainError, LatticeSpec, StateVector, as_amplitudes
from .hamiltonian import (
    HamiltonianParams,
    apply_hamiltonian,
    apply_hamiltonian_derivative,
    dense_hamiltonian,
    diagonal_cache,
)
from .lanczos import EigensolverError, LanczosInfo, lanczos_lowest

log = logging.getLogger(__name__)

DENSE_MAX_DIM = 1024
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-9
DEFAULT_K = 6
SLOPE_WINDOW = 0.15


class DegeneracyError(ArithmeticError):
    """Two levels entering a perturbative formula are degenerate."""


class ScheduleWindowError(DomainError):
    """Slope-extraction points fall outside the constant-Omega plateau."""


def _fix_sign(vectors: np.ndarray) -> np.ndarray:
    # deterministic gauge: largest-magnitude component of each column positive
    cols = np.arange(vectors.shape[1])
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, cols])
    signs[signs == 0] = 1.0
    return vectors * signs


def instantaneous_eigenpairs(
    spec: LatticeSpec,
    params: HamiltonianParams,
    k: int,
    *,
    dense_max_dim: int = DENSE_MAX_DIM,
    vectors: bool = True,
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Lowest ``k`` eigenvalues (ascending) and real eigenvectors as columns.

    Dense diagonalization up to ``dense_max_dim``, Lanczos above.  Every pair
    satisfies ||H v - E v|| < 1e-9 ||H||.
    """
    dim = spec.dim
    if not 1 <= k <= dim:
        raise DomainError(f"k must lie in 1..{dim}, got {k}")
    cache = diagonal_cache(spec)
    if dim <= dense_max_dim:
        H = dense_hamiltonian(params, cache)
        if not vectors:
            w = eigh(H, eigvals_only=True, subset_by_index=(0, k - 1), driver="evr")
            return w, None
        w, v = eigh(H, subset_by_index=(0, k - 1), driver="evr")
        norm = max(abs(w[0]), float(np.abs(np.diag(H)).max()))
    else:
        w, v, info = lanczos_lowest(lambda x: apply_hamiltonian(params, cache, x), dim, k)
        norm = info.norm_estimate
    resid = np.array([
        np.linalg.norm(apply_hamiltonian(params, cache, v[:, i]) - w[i] * v[:, i]) for i in range(k)
    ])
    if np.any(resid > RESIDUAL_TOL * norm):
        raise EigensolverError(
            f"eigenpair residual {resid.max():.3e} above {RESIDUAL_TOL:g} |H| = {RESIDUAL_TOL * norm:.3e}",
            LanczosInfo(residuals=resid, norm_estimate=norm),
        )
    return w, (_fix_sign(v) if vectors else None)


def _params_at(spec: LatticeSpec, schedule, t: float) -> HamiltonianParams:
    rabi, detuning = schedule.sample(t)
    return HamiltonianParams(rabi, detuning, spec)


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    times: np.ndarray
    energies: np.ndarray  # (samples, k)
    vectors: Optional[np.ndarray]  # (samples, 2^N, k), real, gauge-tracked
    k: int
    flags: list = field(default_factory=list)  # (sample index, level, overlap) tracking warnings

    @property
    def gap01(self) -> np.ndarray:
        return np.abs(self.energies[:, 1] - self.energies[:, 0])


def _track(prev: np.ndarray, cur: np.ndarray, index: int, flags: list) -> np.ndarray:
    """Sign-align ``cur`` to ``prev`` column by column and record label problems."""
    overlap = prev.T @ cur
    k = cur.shape[1]
    for level in range(k):
        ov = overlap[level, level]
        if ov < 0:
            cur[:, level] *= -1.0
            overlap[:, level] *= -1.0
        neighbours = [n for n in (level - 1, level, level + 1) if 0 <= n < k]
        best = max(neighbours, key=lambda n: abs(overlap[n, level]))
        if abs(ov) <= 0.5 or best != level:
            flags.append((index, level, float(abs(ov))))
    return cur


def spectrum_trace(
    spec: LatticeSpec,
    schedule,
    times: Sequence[float] | int,
    k: int = DEFAULT_K,
    *,
    with_vectors: bool = True,
    dense_max_dim: int = DENSE_MAX_DIM,
) -> SpectrumTrace:
    """Lowest-``k`` spectrum on a time grid (or ``times`` equally spaced samples).

    Levels keep their energy order; eigenvectors are gauge-transported so that
    <a_k(t_prev)|a_k(t)> > 0.  Samples where that overlap drops to 0.5 or a
    neighbouring level overlaps better are listed in ``flags``; nothing is
    relabelled.
    """
    if isinstance(times, (int, np.integer)):
        times = np.linspace(0.0, schedule.total_duration, int(times))
    times = np.asarray(times, dtype=float)
    energies = np.empty((times.size, k))
    vecs = np.empty((times.size, spec.dim, k)) if with_vectors else None
    flags: list = []
    for i, t in enumerate(times):
        w, v = instantaneous_eigenpairs(spec, _params_at(spec, schedule, t), k,
                                        dense_max_dim=dense_max_dim, vectors=with_vectors)
        energies[i] = w
        if with_vectors:
            vecs[i] = v if i == 0 else _track(vecs[i - 1], v, i, flags)
    if flags:
        log.warning("eigenvector tracking flagged %d (sample, level) pairs", len(flags))
    return SpectrumTrace(times, energies, vecs, k, flags)


@dataclass(frozen=True)
class GapReport:
    min_gap: float
    t_min: float
    slope: float
    times: np.ndarray
    gap_series: np.ndarray
    slope_times: tuple[float, float]
    slope_values: tuple[float, float]


def _gap_at(spec, schedule, t, dense_max_dim):
    w, _ = instantaneous_eigenpairs(spec, _params_at(spec, schedule, t), 2,
                                    dense_max_dim=dense_max_dim, vectors=False)
    return float(w[1] - w[0])


def _plateau(schedule) -> tuple[float, float]:
    return getattr(schedule, "plateau", (0.0, schedule.total_duration))


def gap_trace(
    spec: LatticeSpec,
    schedule,
    sample_count: int = 200,
    *,
    slope_window: float = SLOPE_WINDOW,
    fd_step: Optional[float] = None,
    dense_max_dim: int = DENSE_MAX_DIM,
) -> GapReport:
    """Gap E01(t), its minimum and the mean |dE01/dt| at t_min +- window*T.

    The grid minimum is refined by parabolic interpolation (Brent) inside its
    neighbouring grid cells.  The derivatives are centered finite differences
    and must lie on the constant-Omega plateau.
    """
    if spec.dim < 2:
        raise DomainError("a gap needs at least two levels")
    if sample_count < 50:
        raise DomainError("gap_trace needs sample_count >= 50")
    T = float(schedule.total_duration)
    times = np.linspace(0.0, T, sample_count)
    gaps = np.array([_gap_at(spec, schedule, t, dense_max_dim) for t in times])
    i = int(np.argmin(gaps))
    lo, hi = times[max(i - 1, 0)], times[min(i + 1, sample_count - 1)]
    res = minimize_scalar(lambda t: _gap_at(spec, schedule, t, dense_max_dim),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * T})
    if res.fun < gaps[i]:
        t_min, min_gap = float(res.x), float(res.fun)
    else:
        t_min, min_gap = float(times[i]), float(gaps[i])

    h = fd_step if fd_step is not None else 1e-4 * T
    p0, p1 = _plateau(schedule)
    t_minus, t_plus = t_min - slope_window * T, t_min + slope_window * T
    if t_minus - h < p0 or t_plus + h > p1:
        raise ScheduleWindowError(
            f"slope points {t_minus:.4g}, {t_plus:.4g} us are outside the constant-Omega plateau "
            f"[{p0:.4g}, {p1:.4g}] us; shorten the ramps or shift the chirp so the gap minimum is centred"
        )
    derivs = tuple(
        abs(_gap_at(spec, schedule, tp + h, dense_max_dim) - _gap_at(spec, schedule, tp - h, dense_max_dim)) / (2 * h)
        for tp in (t_minus, t_plus)
    )
    slope = 0.5 * (derivs[0] + derivs[1])
    if not slope > 0:
        raise DomainError("gap slope vanished; the gap does not vary around its minimum")
    return GapReport(min_gap, t_min, slope, times, gaps, (t_minus, t_plus), derivs)


def adiabatic_populations(traj, trace: SpectrumTrace) -> np.ndarray:
    """|<a_k(t)|psi(t)>|^2, shape (samples, k)."""
    if trace.vectors is None:
        raise DomainError("spectrum trace was built without eigenvectors")
    if traj.times.shape != trace.times.shape or not np.allclose(traj.times, trace.times, rtol=0, atol=1e-12):
        raise DomainError("trajectory and spectrum trace use different time grids")
    amps = np.einsum("sdk,sd->sk", trace.vectors, traj.states)
    return np.abs(amps) ** 2


def dressing_amplitudes(energies: np.ndarray, vectors: np.ndarray, dh_ref: np.ndarray, ref: int = 0) -> np.ndarray:
    """First-order dressing amplitudes c_k of the reference level.

    ``dh_ref`` is (dH/dt)|a_ref>.  c_k = -i <a_ref|dH/dt|a_k> / (2pi (E_ref - E_k)^2)
    for k != ref and c_ref = 1.
    """
    gaps = energies[ref] - energies
    coupling = vectors.T @ np.conj(dh_ref)  # <a_ref|dH|a_k> for real a_k, Hermitian dH
    amps = np.ones(energies.size, dtype=complex)
    for kk in range(energies.size):
        if kk == ref:
            continue
        if abs(gaps[kk]) < DEGENERACY_TOL:
            raise DegeneracyError(f"levels {ref} and {kk} are degenerate (gap {gaps[kk]:.2e})")
        amps[kk] = -1j * np.conj(coupling[kk]) / (ANGULAR * gaps[kk] ** 2)
    return amps


def dressed_from(energies: np.ndarray, vectors: np.ndarray, dh_ref: np.ndarray, ref: int = 0) -> np.ndarray:
    """Normalized dressed state built from the retained levels."""
    amps = dressing_amplitudes(energies, vectors, dh_ref, ref)
    state = vectors @ amps
    return state / np.linalg.norm(state)


def dressed_ground_state(
    spec: LatticeSpec,
    schedule,
    t: float,
    k_max: int = DEFAULT_K,
    *,
    dense_max_dim: int = DENSE_MAX_DIM,
) -> StateVector:
    """|a_0> - i sum_{k=1..k_max} <a_0|dH/dt|a_k> / (E_0 - E_k)^2 |a_k>, normalized."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    k = min(k_max + 1, spec.dim)
    w, v = instantaneous_eigenpairs(spec, _params_at(spec, schedule, t), k, dense_max_dim=dense_max_dim)
    drabi, ddet = schedule.derivative(t)
    dh0 = apply_hamiltonian_derivative(diagonal_cache(spec), drabi, ddet, v[:, 0])
    return StateVector(dressed_from(w, v, dh0), float(t))


def dressed_populations(traj, trace: SpectrumTrace, k_max: Optional[int] = None) -> np.ndarray:
    """|<a_0'(t)|psi(t)>|^2 using the trace's eigenpairs (k_max defaults to k - 1)."""
    if trace.vectors is None:
        raise DomainError("spectrum trace was built without eigenvectors")
    if not np.allclose(traj.times, trace.times, rtol=0, atol=1e-12):
        raise DomainError("trajectory and spectrum trace use different time grids")
    k_max = trace.k - 1 if k_max is None else k_max
    if not 1 <= k_max < trace.k:
        raise DomainError(f"k_max must lie in 1..{trace.k - 1}")
    cache = diagonal_cache(traj.spec)
    out = np.empty(traj.times.size)
    for i, t in enumerate(traj.times):
        drabi, ddet = traj.schedule.derivative(t)
        v = trace.vectors[i, :, : k_max + 1]
        dh0 = apply_hamiltonian_derivative(cache, drabi, ddet, v[:, 0])
        dressed = dressed_from(trace.energies[i, : k_max + 1], v, dh0)
        out[i] = abs(np.vdot(dressed, traj.states[i])) ** 2
    return out


def nonadiabatic_coupling(
    spec: LatticeSpec,
    params: HamiltonianParams,
    dparams_dt: tuple[float, float],
    m: int,
    n: int,
    *,
    eigenpairs: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> float:
    """<a_m|dH/dt|a_n> / (E_n - E_m) = <a_m|d a_n/dt> in 1/us.

    ``dparams_dt`` is (dOmega/dt, dDelta/dt).  Pass ``eigenpairs`` to fix the
    eigenvector gauge; otherwise the solver's sign convention is used.
    """
    if m == n:
        raise DomainError("coupling needs two distinct levels")
    if eigenpairs is None:
        eigenpairs = instantaneous_eigenpairs(spec, params, max(m, n) + 1)
    w, v = eigenpairs
    gap = w[n] - w[m]
    if abs(gap) < DEGENERACY_TOL:
        raise DegeneracyError(f"levels {m} and {n} are degenerate (gap {gap:.2e})")
    dh_n = apply_hamiltonian_derivative(diagonal_cache(spec), dparams_dt[0], dparams_dt[1], v[:, n])
    return float(np.real(np.vdot(v[:, m], dh_n)) / gap)


def _tracked_full_basis(spec, schedule, times):
    """Full eigendecomposition on ``times`` with level identity followed through
    exact crossings (assignment on |overlap|) and signs transported."""
    energies = np.empty((times.size, spec.dim))
    vectors = np.empty((times.size, spec.dim, spec.dim))
    order = np.empty((times.size, spec.dim), dtype=np.int64)  # tracked label -> sorted index
    for i, t in enumerate(times):
        w, v = eigh(dense_hamiltonian(_params_at(spec, schedule, t)))
        if i == 0:
            perm = np.arange(spec.dim)
            v = _fix_sign(v)
        else:
            overlap = np.abs(vectors[i - 1].T @ v)
            _, perm = linear_sum_assignment(-overlap)
            v = v[:, perm]
            signs = np.sign(np.einsum("dk,dk->k", vectors[i - 1], v))
            signs[signs == 0] = 1.0
            v = v * signs
        energies[i] = w[perm]
        vectors[i] = v
        order[i] = perm
    return energies, vectors, order


def propagate_adiabatic_frame(spec: LatticeSpec, schedule, psi0, n_steps: int = 4000):
    """Integrate the amplitudes a_m of psi = sum a_m |a_m(t)> directly.

    i da/dt = (2pi E - i C) a with C_mn = <a_m|d a_n/dt>, all 2^N levels kept
    (dense, small N only).  Exponential midpoint steps on a uniform grid.
    Returns (times, populations) with populations in energy order, shape
    (n_steps + 1, 2^N).
    """
    if spec.dim > 256:
        raise DomainError("full adiabatic-frame propagation is limited to N <= 8")
    T = float(schedule.total_duration)
    h = T / n_steps
    fine = np.linspace(0.0, T, 2 * n_steps + 1)  # grid points and midpoints
    energies, vectors, order = _tracked_full_basis(spec, schedule, fine)
    cache = diagonal_cache(spec)
    a = vectors[0].T @ as_amplitudes(psi0, spec.dim)
    pops = np.empty((n_steps + 1, spec.dim))

    def in_energy_order(i_fine, amps):
        out = np.empty(spec.dim)
        out[order[i_fine]] = np.abs(amps) ** 2
        return out

    pops[0] = in_energy_order(0, a)
    for step in range(n_steps):
        mid = 2 * step + 1
        t = fine[mid]
        E, V = energies[mid], vectors[mid]
        drabi, ddet = schedule.derivative(t)
        dHV = np.column_stack([apply_hamiltonian_derivative(cache, drabi, ddet, V[:, n]) for n in range(spec.dim)])
        gaps = E[None, :] - E[:, None]  # E_n - E_m
        M = V.T @ dHV
        with np.errstate(divide="ignore", invalid="ignore"):
            C = np.where(np.abs(gaps) > DEGENERACY_TOL, M / gaps, 0.0)
        np.fill_diagonal(C, 0.0)
        gen = ANGULAR * np.diag(E) - 1j * C  # Hermitian since C is real antisymmetric
        lam, U = np.linalg.eigh(gen)
        a = U @ (np.exp(-1j * h * lam) * (U.conj().T @ a))
        pops[step + 1] = in_energy_order(2 * step + 2, a)
    return fine[::2], pops
