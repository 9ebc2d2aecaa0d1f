from math import exp, pi

import numpy as np
import pytest

from rydprep import propagate
from rydprep.analysis import rydberg_density
from rydprep.basis import DomainError, LatticeSpec, af_target, basis_state, config_from_sites
from rydprep.propagate import IntegrationError, checkpoint_populations, evolve
from rydprep.pulse import ConstantDrive, LinearSweep, paper_default_schedule

SPEC1 = LatticeSpec(1)


def test_dark_dynamics():
    traj = evolve(SPEC1, ConstantDrive(0.0, -3.0, 1.0), basis_state(SPEC1, 0), 5)
    assert abs(traj.states[-1, 0]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_resonant_rabi_period():
    # Omega/2pi = 2 MHz on resonance: excited population sin^2(2 pi Omega t), period 0.25 us
    traj = evolve(SPEC1, ConstantDrive(2.0, 0.0, 0.5), basis_state(SPEC1, 0), 101)
    pe = np.abs(traj.states[:, 1]) ** 2
    assert np.allclose(pe, np.sin(2 * pi * 2.0 * traj.times) ** 2, atol=1e-9)
    assert pe[traj.times.searchsorted(0.25)] == pytest.approx(0.0, abs=1e-9)
    assert pe[traj.times.searchsorted(0.125)] == pytest.approx(1.0, abs=1e-9)


def test_reference_chain_fidelity(run7, spec7):
    assert abs(run7.states[-1, af_target(spec7)]) ** 2 >= 0.95


@pytest.mark.parametrize("T", [8.0, 16.0])
def test_linear_sweep_matches_lz_asymptotics(T):
    # starting in |g> at finite detuning adds interference of relative size
    # ~ (4 Omega / span) sqrt((1 - P) / P); a 400 Omega span keeps it below 1 %
    rabi, span = 1.0, 400.0
    sweep = LinearSweep.spanning(rabi, span, T)
    traj = evolve(SPEC1, sweep, basis_state(SPEC1, 0), 3)
    excited = abs(traj.states[-1, 1]) ** 2
    oracle = 1 - exp(-2 * pi * rabi**2 * 2 * pi / sweep.slope)
    assert excited == pytest.approx(oracle, rel=0.02)


def test_trajectory_grid_and_norm(run7):
    t = run7.times
    assert t[0] == 0.0 and t[-1] == 2.0 and np.all(np.diff(t) > 0) and len(run7) == 400
    assert run7.norm_drift() < 1e-8
    assert run7.final.time == 2.0


def test_tolerance_convergence(spec7, schedule7, run7):
    target = af_target(spec7)
    tight = evolve(spec7, schedule7, basis_state(spec7, 0), 2, rtol=5e-11, atol=5e-14)
    assert abs(abs(tight.states[-1, target]) ** 2 - abs(run7.states[-1, target]) ** 2) < 1e-6


def test_mirror_symmetric_densities(run7):
    rho = rydberg_density(run7)
    assert np.max(np.abs(rho - rho[:, ::-1])) < 1e-6


def test_backward_evolution_returns_initial_state(spec7, schedule7, run7):
    back = evolve(spec7, schedule7, run7.states[-1], 2, backward=True)
    assert 1 - abs(back.states[0, 0]) ** 2 < 1e-6
    assert back.times[0] == 0.0 and back.times[-1] == 2.0


def test_checkpoint_populations(run7, spec7):
    dark = evolve(spec7, ConstantDrive(0.0, -1.0, 1.0), basis_state(spec7, 0), 11)
    assert np.allclose(checkpoint_populations(dark, [0]), 1.0)
    allpops = checkpoint_populations(run7, range(spec7.dim))
    assert np.allclose(allpops.sum(axis=1), 1.0, atol=1e-8)
    residue = checkpoint_populations(run7, [config_from_sites([1, 4, 7], 7)])[:, 0]
    assert np.all((0 <= residue) & (residue <= 1))
    with pytest.raises(DomainError):
        checkpoint_populations(run7, [128])


def test_input_validation(spec7, schedule7):
    with pytest.raises(DomainError):
        evolve(spec7, schedule7, basis_state(spec7, 0), 1)
    with pytest.raises(DomainError):
        evolve(spec7, schedule7, np.ones(128) / 10, 5)
    with pytest.raises(DomainError):
        evolve(spec7, schedule7, np.ones(64) / 8, 5)


def test_solver_failure_reports_time(monkeypatch):
    class Failed:
        status, message, t = -1, "Required step size is less than spacing between numbers.", np.array([0.0, 0.37])

    monkeypatch.setattr(propagate, "solve_ivp", lambda *a, **k: Failed())
    with pytest.raises(IntegrationError) as err:
        evolve(SPEC1, paper_default_schedule(), basis_state(SPEC1, 0), 5)
    assert err.value.time == pytest.approx(0.37)
