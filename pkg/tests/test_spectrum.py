from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydprep.basis import DomainError, LatticeSpec, basis_state
from rydprep.classical import classical_energy, ground_config_at
from rydprep.hamiltonian import HamiltonianParams, dense_hamiltonian
from rydprep.propagate import evolve
from rydprep.pulse import ConstantDrive, LinearSweep, paper_default_schedule
from rydprep.spectrum import (
    DegeneracyError,
    ScheduleWindowError,
    adiabatic_populations,
    dressed_ground_state,
    gap_trace,
    instantaneous_eigenpairs,
    nonadiabatic_coupling,
    propagate_adiabatic_frame,
    spectrum_trace,
)

SPEC1 = LatticeSpec(1)


@given(rabi=st.floats(0.01, 10), detuning=st.floats(-50, 50))
@settings(max_examples=50, deadline=None)
def test_single_site_levels(rabi, detuning):
    w, v = instantaneous_eigenpairs(SPEC1, HamiltonianParams(rabi, detuning, SPEC1), 2)
    R = sqrt(0.25 * detuning**2 + rabi**2)
    assert w == pytest.approx([-0.5 * detuning - R, -0.5 * detuning + R], abs=1e-10)
    assert np.allclose(v.T @ v, np.eye(2), atol=1e-12)


def test_classical_ground_energy():
    spec = LatticeSpec.standard(7)
    for detuning in (-5.0, 10.0, 60.0, 150.0):
        w, _ = instantaneous_eigenpairs(spec, HamiltonianParams(0.0, detuning, spec), 1, vectors=False)
        config = ground_config_at(spec, detuning)
        assert w[0] == pytest.approx(classical_energy(spec, config, detuning), abs=1e-9)


def test_dense_reference_and_residuals(spec7):
    params = HamiltonianParams(1.3, 4.0, spec7)
    w, v = instantaneous_eigenpairs(spec7, params, 5)
    H = dense_hamiltonian(params)
    assert w == pytest.approx(np.linalg.eigvalsh(H)[:5], abs=1e-9)
    assert np.linalg.norm(H @ v - v * w) < 1e-9 * np.abs(w).max()


def test_lanczos_branch_agrees(spec7):
    params = HamiltonianParams(2.0, 3.0, spec7)
    wd, vd = instantaneous_eigenpairs(spec7, params, 3)
    wl, vl = instantaneous_eigenpairs(spec7, params, 3, dense_max_dim=0)
    assert wl == pytest.approx(wd, abs=1e-8)
    assert np.allclose(np.abs(vl.T @ vd), np.eye(3), atol=1e-6)


def test_sign_gauge_largest_component_positive(spec7):
    _, v = instantaneous_eigenpairs(spec7, HamiltonianParams(2.0, 0.0, spec7), 4)
    pivots = v[np.argmax(np.abs(v), axis=0), np.arange(4)]
    assert np.all(pivots > 0)


def test_bad_k(spec7):
    with pytest.raises(DomainError):
        instantaneous_eigenpairs(spec7, HamiltonianParams(1.0, 0.0, spec7), 0)


def test_two_level_gap_minimum():
    sweep = LinearSweep(1.5, 10.0, 2.0)
    rep = gap_trace(SPEC1, sweep, 101, slope_window=0.3)
    assert rep.min_gap == pytest.approx(3.0, abs=1e-9)
    assert rep.t_min == pytest.approx(1.0, abs=1e-6)
    # far from the minimum dE/dt = b * (Delta/2) / R
    delta = 10.0 * 0.6
    expected = 10.0 * 0.5 * delta / sqrt(0.25 * delta**2 + 1.5**2)
    assert rep.slope == pytest.approx(expected, rel=1e-6)


def test_reference_gap(gap7):
    assert 1.5 < gap7.min_gap < 2.2
    assert 0.5 < gap7.t_min / 2.0 < 0.7
    assert gap7.slope > 0
    # the crossing sits at positive detuning
    assert paper_default_schedule().sample(gap7.t_min)[1] > 0


def test_nine_site_gap_near_power_law():
    spec = LatticeSpec.standard(9)
    rep = gap_trace(spec, paper_default_schedule(), 60)
    ratio = rep.min_gap / (2 * 2.0)
    assert ratio == pytest.approx(2.2182 / 9**0.8014, rel=0.15)


def test_slope_window_outside_plateau(spec7, schedule7):
    with pytest.raises(ScheduleWindowError):
        gap_trace(spec7, schedule7, 60, slope_window=0.45)


def test_gap_needs_two_levels_and_samples(spec7, schedule7):
    with pytest.raises(DomainError):
        gap_trace(LatticeSpec(0), ConstantDrive(1.0, 0.0, 1.0), 60)
    with pytest.raises(DomainError):
        gap_trace(spec7, schedule7, 20)


def test_trace_vectors_continuous(trace7):
    v = trace7.vectors
    overlaps = np.einsum("sdk,sdk->sk", v[:-1], v[1:])
    # signs are transported, so neighbouring columns never flip
    assert overlaps[2:, 0].min() > 0.9


def test_adiabatic_population_bounds(run7, trace7):
    P = adiabatic_populations(run7, trace7)
    assert P.min() >= -1e-12
    assert P.sum(axis=1).max() <= 1 + 1e-9


def test_full_sum_rule():
    spec = LatticeSpec.standard(5)
    sched = paper_default_schedule(1.0)
    traj = evolve(spec, sched, basis_state(spec, 0), 30)
    trace = spectrum_trace(spec, sched, traj.times, spec.dim)
    assert np.allclose(adiabatic_populations(traj, trace).sum(axis=1), 1.0, atol=1e-9)


def test_grid_mismatch(run7, spec7, schedule7):
    other = spectrum_trace(spec7, schedule7, 50, 2)
    with pytest.raises(DomainError):
        adiabatic_populations(run7, other)


def test_dressed_equals_bare_without_drive_change():
    spec = LatticeSpec.standard(3)
    drive = ConstantDrive(1.0, 2.0, 1.0)
    dressed = dressed_ground_state(spec, drive, 0.5, 3)
    _, v = instantaneous_eigenpairs(spec, HamiltonianParams(1.0, 2.0, spec), 1)
    assert abs(np.vdot(v[:, 0], dressed.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_dressing_degeneracy_raises():
    spec = LatticeSpec.standard(3)
    # Omega = 0 and Delta = 0 leave |100> and |010> degenerate with |000>
    sweep = LinearSweep(0.0, 1.0, 2.0)
    with pytest.raises(DegeneracyError):
        dressed_ground_state(spec, sweep, 1.0, 2)


def test_two_level_coupling_at_resonance():
    rabi, b = 1.5, 8.0
    c = nonadiabatic_coupling(SPEC1, HamiltonianParams(rabi, 0.0, SPEC1), (0.0, b), 0, 1)
    assert abs(c) == pytest.approx(b / (4 * rabi), rel=1e-12)


def test_coupling_matches_eigenvector_derivative(spec7, schedule7):
    t, h = 1.1, 1e-6
    params = lambda s: HamiltonianParams(*schedule7.sample(s), spec7)
    w, v = instantaneous_eigenpairs(spec7, params(t), 3)
    _, vp = instantaneous_eigenpairs(spec7, params(t + h), 3)
    _, vm = instantaneous_eigenpairs(spec7, params(t - h), 3)
    vp = vp * np.sign(np.sum(vp * v, axis=0))
    vm = vm * np.sign(np.sum(vm * v, axis=0))
    dv = (vp - vm) / (2 * h)
    for m, n in ((0, 1), (1, 0), (0, 2)):
        c = nonadiabatic_coupling(spec7, params(t), schedule7.derivative(t), m, n, eigenpairs=(w, v))
        assert c == pytest.approx(v[:, m] @ dv[:, n], abs=1e-4 * max(1.0, abs(c)))


def test_coupling_antisymmetric(spec7, schedule7):
    p = HamiltonianParams(*schedule7.sample(0.9), spec7)
    pairs = instantaneous_eigenpairs(spec7, p, 2)
    d = schedule7.derivative(0.9)
    assert nonadiabatic_coupling(spec7, p, d, 0, 1, eigenpairs=pairs) == pytest.approx(
        -nonadiabatic_coupling(spec7, p, d, 1, 0, eigenpairs=pairs), rel=1e-12)
    with pytest.raises(DomainError):
        nonadiabatic_coupling(spec7, p, d, 1, 1, eigenpairs=pairs)


def _cluster_sums(energies, pops, tol=1e-8):
    # populations of exactly degenerate levels are only defined as a sum
    out, start = [], 0
    for i in range(1, energies.size + 1):
        if i == energies.size or energies[i] - energies[i - 1] > tol:
            out.append(pops[..., start:i].sum(axis=-1))
            start = i
    return np.array(out)


def test_adiabatic_frame_matches_lab_frame():
    spec = LatticeSpec.standard(5)
    sched = paper_default_schedule(1.0)
    times, frame = propagate_adiabatic_frame(spec, sched, basis_state(spec, 0), 2000)
    traj = evolve(spec, sched, basis_state(spec, 0), times.size)
    trace = spectrum_trace(spec, sched, times, spec.dim)
    lab = adiabatic_populations(traj, trace)
    # near t = T Omega -> 0 and higher levels become nearly degenerate, so
    # their energy-order labels are only meaningful on the plateau
    t0, t1 = sched.plateau
    plateau = (times >= t0) & (times <= t1)
    assert np.abs(frame[plateau] - lab[plateau]).max() < 1e-3
    assert np.abs(frame[:, :2] - lab[:, :2]).max() < 1e-4
    for i in (0, -1):
        assert np.abs(_cluster_sums(trace.energies[i], frame[i]) - _cluster_sums(trace.energies[i], lab[i])).max() < 1e-3
    assert np.allclose(frame.sum(axis=1), 1.0, atol=1e-10)


def test_adiabatic_frame_size_limit():
    with pytest.raises(DomainError):
        propagate_adiabatic_frame(LatticeSpec.standard(9), paper_default_schedule(), np.eye(512)[0])
