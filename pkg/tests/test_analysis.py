from math import exp, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydprep.analysis import (
    excitation_class_populations,
    fidelity_report,
    fit_gap_scaling,
    lowest_energy_path,
    lz_fidelity,
    odd_site_path,
    path_populations,
    phase_scan,
    rydberg_density,
)
from rydprep.basis import DomainError, LatticeSpec, af_target, config_from_sites, to_bitstring
from rydprep.pulse import paper_default_schedule


def test_class_populations_complete(run7):
    P = excitation_class_populations(run7)
    assert P.shape == (400, 8)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_density_sum_rule(run7):
    P = excitation_class_populations(run7)
    rho = rydberg_density(run7)
    assert np.allclose(rho.sum(axis=1), P @ np.arange(8), atol=1e-9)


def test_excitation_classes_peak_in_order(run7):
    P = excitation_class_populations(run7)
    peaks = [run7.times[P[:, n].argmax()] for n in range(1, 5)]
    assert np.all(np.diff(peaks) > 0)
    assert P[-1, 4] > 0.95


def test_single_excitations_favour_odd_sites(run7):
    P = excitation_class_populations(run7)
    rho = rydberg_density(run7)[P[:, 1].argmax()]
    assert rho[0::2].mean() > rho[1::2].mean()


def test_paths(spec7, run7):
    low = [to_bitstring(c, 7) for c in lowest_energy_path(spec7)]
    assert low[0] == "ggggggg" and low[-3:] == ["rgggggr", "rggrggr", "rgrgrgr"]
    assert len(low) == 11
    odd = odd_site_path(spec7)
    assert len(odd) == 16 and af_target(spec7) in odd and config_from_sites([1, 5, 7], 7) in odd
    assert np.allclose(path_populations(run7, range(spec7.dim)), 1.0, atol=1e-9)


def test_path_validation(run7):
    with pytest.raises(DomainError):
        path_populations(run7, [1, 1])
    with pytest.raises(DomainError):
        path_populations(run7, [128])


def test_lz_limits():
    assert lz_fidelity(0.0, 3.0) == 0.0
    assert lz_fidelity(50.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        lz_fidelity(1.0, 0.0)
    with pytest.raises(DomainError):
        lz_fidelity(-1.0, 1.0)


@given(gap=st.floats(0.0, 5.0), slope=st.floats(0.01, 100.0))
@settings(max_examples=100)
def test_lz_oracle(gap, slope):
    # angular units: exp(-pi^2 dE^2 / slope) in cyclic inputs
    assert lz_fidelity(gap, slope) == pytest.approx(1 - exp(-pi**2 * gap**2 / slope), abs=1e-14)


@given(gap=st.floats(0.01, 3.0), slope=st.floats(0.1, 50.0), factor=st.floats(1.01, 3.0))
@settings(max_examples=100)
def test_lz_monotone(gap, slope, factor):
    assert lz_fidelity(gap * factor, slope) >= lz_fidelity(gap, slope)
    assert lz_fidelity(gap, slope * factor) <= lz_fidelity(gap, slope)


def test_phase_scan_classical_limit(spec7):
    names, scan = phase_scan(spec7, [0.0], [-5.0, 1.0, 10.0])
    assert scan.shape == (1, 3, len(names))
    assert scan[0, 0, names.index("empty")] == pytest.approx(1.0, abs=1e-9)
    assert scan[0, 1, names.index("min_3")] == pytest.approx(1.0, abs=1e-9)
    assert scan[0, 2, names.index("min_4")] == pytest.approx(1.0, abs=1e-9)


def test_phase_scan_probes_bounded(spec7):
    names, scan = phase_scan(spec7, [0.5, 2.0], [-2.0, 3.0])
    assert scan.min() >= 0 and scan.sum(axis=-1).max() <= 1 + 1e-9
    with pytest.raises(DomainError):
        phase_scan(spec7, [-1.0], [0.0])


def test_fit_recovers_power_law():
    rabi = 2.0
    pts = [(n, 2 * rabi * 2.2182 / n**0.8014) for n in (1, 3, 5, 7, 9, 11)]
    fit = fit_gap_scaling(pts, rabi)
    assert fit.n_values == (5, 7, 9, 11)
    assert fit.exponent == pytest.approx(0.8014, abs=1e-6)
    assert fit.prefactor == pytest.approx(2.2182, rel=1e-6)
    assert fit.residual < 1e-10
    assert fit.predict(9) == pytest.approx(2.2182 / 9**0.8014)


@given(scale=st.floats(0.1, 10.0))
@settings(max_examples=25)
def test_fit_scale_invariant(scale):
    pts = [(5, 1.2), (7, 0.95), (9, 0.81), (11, 0.7)]
    base = fit_gap_scaling(pts, 2.0)
    scaled = fit_gap_scaling([(n, g * scale) for n, g in pts], 2.0 * scale)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-9)
    assert scaled.prefactor == pytest.approx(base.prefactor, rel=1e-9)


def test_fit_validation():
    with pytest.raises(DomainError):
        fit_gap_scaling([(5, 1.0), (7, 0.0), (9, 0.5)], 1.0)
    with pytest.raises(DomainError):
        fit_gap_scaling([(1, 1.0), (3, 0.8), (5, 0.5)], 1.0)


def test_fidelity_report_small_chain():
    rep = fidelity_report(LatticeSpec.standard(3), paper_default_schedule(), sample_count=50, gap_samples=60)
    assert rep.n_target == 2
    assert 0.9 < rep.exact_fidelity <= 1.0
    assert rep.lz_fidelity == pytest.approx(lz_fidelity(rep.min_gap, rep.slope))
