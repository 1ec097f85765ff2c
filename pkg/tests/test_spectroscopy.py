import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qemsim.errors import ConvergenceError, GridPointError, PhysicsInputError
from qemsim.params import DeviceParams
from qemsim.spectroscopy import (
    LinewidthModel,
    SpectroscopyMap,
    SweepGrid,
    coupling_from_peak,
    default_grid,
    dressed_cavity_frequency,
    fit_linewidth,
    noise_linewidth,
    peak_transmission,
    population_trace,
    resonance_flux,
    single_tone_point,
    sweep,
    sx_noise,
    synthetic_linewidth,
    thermal_populations,
    transmission_suppression,
)

TWO_PI = 2 * math.pi
SMALL = DeviceParams(dims=(3, 3, 3))


def test_resonance_flux_sets_omega01_to_nr():
    from qemsim.transmon import omega01

    f = resonance_flux(SMALL)
    assert omega01(SMALL.transmon, f) == pytest.approx(SMALL.omega_nr, rel=1e-6)


def test_dressed_cavity_is_pushed_up_by_lower_transmon():
    f = resonance_flux(SMALL)
    w = dressed_cavity_frequency(SMALL, f)
    assert SMALL.omega_cpw < w < SMALL.omega_cpw + TWO_PI * 30e6


def test_single_point_without_transmon_coupling_is_lorentzian():
    # deep truncation keeps the driven mode linear; a cold cavity bath keeps
    # the field damping at kappa (thermal upward jumps narrow the line)
    d = DeviceParams(dims=(2, 10, 2)).with_(g01=TWO_PI * 1.0, T_cpw=0.0)
    kappa = d.kappa_cpw
    for delta in (-2.0, 0.0, 0.5):
        r = single_tone_point(d, 0.3, d.omega_cpw + delta * kappa, 0.0, 0.0)
        expected = d.drive_amplitude() / math.hypot(delta * kappa, kappa / 2)
        assert abs(r.amplitude) == pytest.approx(expected, rel=1e-4)


def test_single_point_errors_are_wrapped():
    with pytest.raises(GridPointError):
        single_tone_point(SMALL, 0.3, SMALL.omega_cpw, 1.0, -1.0)


def test_grid_validation():
    with pytest.raises(PhysicsInputError):
        SweepGrid(np.array([0.1, 0.1]), np.array([1.0]), 5.0, 0.03, SMALL)
    with pytest.raises(PhysicsInputError):
        SweepGrid(np.array([]), np.array([1.0]), 5.0, 0.03, SMALL)


def test_one_by_one_sweep():
    g = SweepGrid(np.array([0.3]), np.array([SMALL.omega_cpw]), 4.5, 0.03, SMALL)
    m = sweep(g, workers=1)
    assert m.amplitude.shape == (1, 1)
    assert m.populations.shape == (1, 1, 3)
    assert not m.failures


def test_sweep_is_order_and_worker_independent():
    g = default_grid(SMALL, 6.5, 0.18, n_flux=4, n_probe=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        serial = sweep(g, workers=1)
        parallel = sweep(g, workers=2)
    assert np.array_equal(serial.amplitude, parallel.amplitude)
    assert np.array_equal(serial.populations, parallel.populations)
    # a single cell does not depend on its neighbours
    g1 = SweepGrid(g.flux_axis[2:3], g.probe_axis[3:4], 6.5, 0.18, SMALL)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        one = sweep(g1, workers=1)
    assert one.amplitude[0, 0] == pytest.approx(serial.amplitude[2, 3], rel=1e-10)


def _lorentz_map(peaks, centers, kappa=1.0):
    probe = np.linspace(-5, 5, 41)
    flux = np.linspace(-0.03, 0.03, len(peaks))
    g = SweepGrid(flux, probe, 4.5, 0.03, SMALL.with_(kappa_cpw=kappa,
                                                       kappa_cpw_by_voltage={}))
    amp = np.array([p * (kappa / 2) / np.hypot(probe - c, kappa / 2) for p, c in zip(peaks, centers)])
    amp = amp * g.E_d / (kappa / 2)
    z = np.zeros_like(amp)
    return SpectroscopyMap(g, amp, z, np.zeros(amp.shape + (3,)), z)


def test_peak_transmission_refines_off_grid_maximum():
    peaks = np.array([1.0, 0.8, 0.5])
    m = _lorentz_map(peaks, [0.1, -0.07, 0.33])
    assert np.allclose(peak_transmission(m), peaks, rtol=1e-10)


def test_transmission_suppression_reference():
    peaks = np.array([1.0, 1.0, 0.4, 1.0, 1.0])
    m = _lorentz_map(peaks, np.zeros(5))
    sup, ref = transmission_suppression(m, 0.0, 0.01)
    assert ref == pytest.approx(1.0)
    assert sup[2] == pytest.approx(0.6)
    with pytest.raises(PhysicsInputError):
        transmission_suppression(m, 0.0, 1.0)


def test_thermal_populations():
    levels = TWO_PI * np.array([0.0, 3.47e9, 6.7e9])
    assert np.array_equal(thermal_populations(levels, 0.0), [1, 0, 0])
    p = thermal_populations(levels, 0.1)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(p) < 0)


def test_population_trace_ground_state_dominates_at_low_temperature():
    f = resonance_flux(SMALL)
    tr = population_trace(SMALL, [f - 0.02, f], TWO_PI * 1.35e6, 0.03)
    assert np.all(tr.p0 > 0.98)
    assert np.allclose(tr.populations.sum(axis=1), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e5, 1e7), st.floats(1e7, 3e8), st.floats(0.0, 3.0), st.floats(0.5, 1.5))
def test_noise_spectrum_asymmetry(lam, kappa, n_th, x):
    m = LinewidthModel(lam, TWO_PI * 3.47e9, kappa, n_th)
    w = x * m.omega_nr
    plus, minus = sx_noise(m, w, +1), sx_noise(m, w, -1)
    assert plus > 0 and minus >= 0
    # each sideband is a Lorentzian of area weight n_th + 1 (absorption) or n_th (emission)
    assert plus * ((m.omega_nr - w) ** 2 + kappa**2 / 4) == pytest.approx(kappa * (n_th + 1))
    assert minus * ((m.omega_nr + w) ** 2 + kappa**2 / 4) == pytest.approx(kappa * n_th, rel=1e-12)
    assert sx_noise(m, m.omega_nr, +1) == pytest.approx(4 * (n_th + 1) / kappa)


def test_noise_linewidth_peak():
    lam, kappa = TWO_PI * 1.5e6, TWO_PI * 24e6
    m = LinewidthModel(lam, TWO_PI * 3.47e9, kappa, 0.0, gamma0=1e6)
    assert noise_linewidth(m, m.omega_nr) == pytest.approx(4 * lam**2 / kappa + 1e6)
    assert 4 * lam**2 / kappa / TWO_PI == pytest.approx(375e3)


def test_fit_recovers_clean_lorentzian():
    m = LinewidthModel(TWO_PI * 1.5e6, TWO_PI * 3.47e9, TWO_PI * 24e6, 0.0, 2 / 1.4e-6)
    w = TWO_PI * np.linspace(3.35e9, 3.59e9, 121)
    fit = fit_linewidth(w, noise_linewidth(m, w))
    assert fit.model.omega_nr == pytest.approx(m.omega_nr, rel=1e-7)
    assert fit.model.kappa_nr == pytest.approx(m.kappa_nr, rel=1e-5)
    assert fit.model.lam == pytest.approx(m.lam, rel=1e-5)
    assert fit.model.gamma0 == pytest.approx(m.gamma0, rel=1e-4)


def test_fit_reports_best_on_nonconvergence():
    m = LinewidthModel(TWO_PI * 1.5e6, TWO_PI * 3.47e9, TWO_PI * 24e6, 0.0, 1e6)
    w = TWO_PI * np.linspace(3.35e9, 3.59e9, 61)
    g = synthetic_linewidth(m, w, 0.05, np.random.default_rng(0))
    with pytest.raises(ConvergenceError) as info:
        fit_linewidth(w, g, max_iter=5, restarts=0)
    assert info.value.best is not None


def test_fit_input_validation():
    with pytest.raises(PhysicsInputError):
        fit_linewidth(np.arange(5.0), np.arange(5.0))


def test_coupling_from_peak():
    lam = coupling_from_peak(TWO_PI * 375e3, 0.0, TWO_PI * 24e6)
    assert lam / TWO_PI == pytest.approx(1.5e6)
    with pytest.raises(PhysicsInputError):
        coupling_from_peak(1.0, 2.0, 1.0)
