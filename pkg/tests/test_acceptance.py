"""End-to-end acceptance checks, each reported as one PASS/FAIL line in the terminal summary."""

import math
import time
import timeit
import warnings

import numpy as np
import pytest
from hypothesis import Phase, given, settings, strategies as st

from qemsim import device as dev
from qemsim.hamiltonian import (
    SystemParams,
    bare_hamiltonian,
    coupling_hamiltonians,
    coupling_table,
    drive_hamiltonian,
    frame_parts,
    rotating_frame,
)
from qemsim.lindblad import (
    Collapse,
    DrivenSteadyStateSolver,
    bose_occupation,
    boltzmann_ratio,
    check_trace_preserving,
    liouvillian,
    steady_state,
)
from qemsim.opalg import HilbertLayout, annihilation, commutator_norm, embed, spost, spre, vectorize
from qemsim.params import DeviceParams, build_model
from qemsim.spectroscopy import (
    LinewidthModel,
    coupling_from_peak,
    default_grid,
    fit_linewidth,
    population_trace,
    resonance_flux,
    sweep,
    synthetic_linewidth,
    transmission_suppression,
)
from qemsim.transmon import TransmonParams, TransmonSpectrum, spectrum_at_flux

TWO_PI = 2 * math.pi
W_CPW = TWO_PI * 4.94e9


def _best_time(fn, repeat=5):
    """Best wall time of ``fn`` over ``repeat`` calls; one-shot timing at the
    sub-millisecond scale is dominated by first-call and scheduler jitter."""
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def test_thermal_chain(criterion):
    def chain():
        n_in = dev.attenuated_population(dev.INPUT_CHAIN, W_CPW)
        n_out = dev.output_population(4.0, 35.0, 0.03, W_CPW)
        return n_in, n_out, dev.cavity_mode_temperature(n_in, n_out, W_CPW)[1]

    with criterion(1, "thermal chain n_in, n_out, T_cpw", 1e-3) as rec:
        n_in, n_out, T_cpw = chain()
        rec.runtime = _best_time(chain)
        rec.detail = f"n_in={n_in:.5f} n_out={n_out:.5f} T_cpw={T_cpw * 1e3:.2f} mK"
        assert n_in == pytest.approx(0.0050, rel=0.05)
        assert n_out == pytest.approx(0.0055, rel=0.05)
        assert T_cpw == pytest.approx(0.045, abs=0.003)


def test_qubit_temperature_bound(criterion):
    with criterion(2, "transmon temperature bound", 1e-3) as rec:
        T = dev.qubit_temperature_bound(110.0, 1.85, TWO_PI * 3.4e9)
        rec.runtime = _best_time(lambda: dev.qubit_temperature_bound(110.0, 1.85, TWO_PI * 3.4e9))
        rec.detail = f"T_Q < {T * 1e3:.2f} mK"
        assert T == pytest.approx(0.055, abs=0.002)


def test_coupling_extraction(criterion):
    with criterion(3, "coupling from linewidth peak", 1e-3) as rec:
        lam = coupling_from_peak(TWO_PI * 280e3, 0.0, TWO_PI * 24e6) / TWO_PI
        rec.runtime = _best_time(lambda: coupling_from_peak(TWO_PI * 280e3, 0.0, TWO_PI * 24e6))
        per_volt = lam / 5.0
        rec.detail = f"lambda/h={lam / 1e6:.4f} MHz, {per_volt / 1e3:.2f} kHz/V at 5 V"
        assert lam == pytest.approx(1.30e6, rel=0.05)
        assert 260e3 <= per_volt <= 270e3


def test_beam_mechanics(criterion):
    with criterion(4, "beam flexural frequencies", 1e-3) as rec:
        spec = dev.BeamSpec()
        f1, f3 = dev.beam_frequency(spec, 1), dev.beam_frequency(spec, 3)
        rec.runtime = _best_time(lambda: (dev.beam_frequency(spec, 1), dev.beam_frequency(spec, 3)))
        rec.detail = f"f1={f1 / 1e6:.1f} MHz f3={f3 / 1e9:.3f} GHz"
        assert f1 == pytest.approx(590e6, rel=0.02)
        assert f3 == pytest.approx(3.2e9, rel=0.02)


def test_coupling_estimate_chain(criterion):
    with criterion(5, "parallel-plate coupling estimate", 1e-3) as rec:
        lam = abs(dev.coupling_approx(0.227e9, 1.4e-9, 1.0, 1.0, 25e-15)) / TWO_PI
        rec.runtime = _best_time(lambda: dev.coupling_approx(0.227e9, 1.4e-9, 1.0, 1.0, 25e-15))
        rec.detail = f"{lam / 1e3:.1f} kHz/V"
        assert lam == pytest.approx(195e3, rel=0.03)


def _ladder_check(E_C, n_g):
    p = TransmonParams(E_C=E_C, E_J0=67.8 * E_C, n_g=n_g)
    s = spectrum_at_flux(p, 0.0, 4)
    plasma = math.sqrt(8 * p.E_J0 * p.E_C)
    excess = [abs(s.levels[m] / TWO_PI - plasma * m) / (E_C * m * (m + 1) / 2) for m in range(1, 4)]
    return s, excess


def test_transmon_spectrum(criterion):
    worst = {"excess": 0.0, "alpha": 0.0, "time": 0.0}

    # the explain phase traces execution, which would inflate the per-call timing
    @settings(max_examples=25, deadline=None, derandomize=True,
              phases=[p for p in Phase if p is not Phase.explain])
    @given(st.floats(0.1e9, 1.0e9), st.floats(0.0, 0.5))
    def prop(E_C, n_g):
        start = time.perf_counter()
        s, excess = _ladder_check(E_C, n_g)
        worst["time"] = max(worst["time"], time.perf_counter() - start)
        alpha = s.anharmonicity / TWO_PI / -E_C
        worst["excess"] = max(worst["excess"], *excess)
        worst["alpha"] = max(worst["alpha"], abs(alpha - 1))
        assert abs(alpha - 1) <= 0.3
        assert max(excess) <= 1.0

    with criterion(6, "transmon ladder and anharmonicity", 0.1) as rec:
        try:
            prop()
        finally:
            # the budget applies to one diagonalization, not to the property search
            rec.runtime = worst["time"]
            rec.detail = (f"deviation from sqrt(8 E_J E_C) m up to {worst['excess']:.3f} x E_C m(m+1)/2; "
                          f"anharmonicity off by {worst['alpha']:.1%}")


def _empty_cavity(layout, omega_c, kappa, E_d, n_th=0.0):
    s = TransmonSpectrum(0.0, np.array([0.0, TWO_PI * 3e9]), np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0)
    params = SystemParams(omega_c, TWO_PI * 3.47e9, np.zeros((2, 2)), np.zeros((2, 2)), E_d=E_d)
    h_static, number, h_drive = frame_parts(bare_hamiltonian(s, params, layout), [],
                                            drive_hamiltonian(params, layout))
    a = embed(annihilation(layout.dims[1]), 1, layout)
    cs = [Collapse(kappa * (n_th + 1), a, "a"), Collapse(kappa * n_th, a.dag, "a_dag")]
    # uncoupled spectators relax to their ground state so the steady state is unique
    cs += [Collapse(kappa, embed(annihilation(layout.dims[i]), i, layout), f"spectator{i}") for i in (0, 2)]
    return h_static, number, h_drive, cs


def test_solver_oracles(criterion):
    with criterion(7, "solver oracles: driven cavity, thermal cavity, vacuum Rabi", 10.0) as rec:
        # (a) coherent response of an empty cavity
        layout = HilbertLayout((2, 8, 2))
        omega_c, kappa, E_d = W_CPW, TWO_PI * 1e6, TWO_PI * 0.05e6
        solver = DrivenSteadyStateSolver(*_empty_cavity(layout, omega_c, kappa, E_d))
        worst_a = 0.0
        for delta in np.linspace(-5, 5, 20) * kappa:
            amp = abs(solver.solve(omega_c - delta).cavity_amplitude)
            worst_a = max(worst_a, abs(amp / (E_d / math.hypot(delta, kappa / 2)) - 1))
        # (b) thermal occupation of an undriven cavity
        layout = HilbertLayout((2, 24, 2))
        n_th = bose_occupation(W_CPW, 0.1)
        h, _, _, cs = _empty_cavity(layout, omega_c, kappa, 0.0, n_th)
        p = steady_state(liouvillian(h, cs)).populations("cavity")
        err_b = abs(float(p @ np.arange(24)) / n_th - 1)
        # (c) single-excitation splitting of a two-level transmon resonant with the NR
        lam01 = TWO_PI * 1.95e6
        s = TransmonSpectrum(0.0, np.array([0.0, TWO_PI * 3.47e9]), np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0)
        params = SystemParams(W_CPW, TWO_PI * 3.47e9, np.zeros((2, 2)), coupling_table(s, lam01))
        layout = HilbertLayout((2, 2, 3))
        hf = rotating_frame(bare_hamiltonian(s, params, layout),
                            coupling_hamiltonians(s, params, layout), None, 0.0).matrix
        w = np.linalg.eigvalsh(hf)
        doublet = np.sort(w[np.argsort(np.abs(w - TWO_PI * 3.47e9))[:2]])
        err_c = abs((doublet[1] - doublet[0]) / (2 * lam01) - 1)
        rec.detail = f"driven {worst_a:.1e}, thermal {err_b:.1e}, splitting {err_c:.1e}"
        assert worst_a <= 1e-6
        assert err_b <= 1e-8
        assert err_c <= 1e-9


MAP_CASES = [(4.5, 0.03), (5.5, 0.10), (6.5, 0.18)]  # lambda/2pi = 300 kHz/V x V


@pytest.mark.slow
def test_transmission_maps(criterion):
    d = DeviceParams()
    f0 = resonance_flux(d)
    with criterion(8, "three 80x60 transmission maps: gap at 180 mK only", 600.0) as rec:
        maps = {}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for V, T in MAP_CASES:
                maps[T] = sweep(default_grid(d, V, T))
        cold, hot = maps[0.03], maps[0.18]
        flux = cold.grid.flux_axis
        inside = np.abs(flux - f0) <= 0.02
        sup_cold, _ = transmission_suppression(cold, f0)
        sup_hot, _ = transmission_suppression(hot, f0)
        # smooth dispersive pull: the cold peak moves monotonically with flux
        centers = cold.grid.probe_axis[np.argmax(cold.amplitude, axis=1)]
        steps = np.diff(centers)
        hot_max = float(np.nanmax(sup_hot[inside]))
        hot_outside = float(np.nanmax(np.abs(sup_hot[~inside])))
        rec.detail = (f"30 mK max suppression {np.nanmax(np.abs(sup_cold[inside])):.1%}, "
                      f"180 mK {hot_max:.1%} at {flux[inside][np.nanargmax(sup_hot[inside])] - f0:+.4f}, "
                      f"outside window {hot_outside:.1%}")
        assert not any(m.failures for m in maps.values())
        assert np.nanmax(np.abs(sup_cold[inside])) <= 0.05
        assert np.all(steps <= 0) or np.all(steps >= 0)
        assert hot_max > 0.30
        assert hot_outside < hot_max / 3


def test_population_traces(criterion):
    d = DeviceParams()
    f0 = resonance_flux(d)
    flux = f0 + np.array([-0.03, -0.015, -0.005, 0.0, 0.005, 0.015, 0.03])
    with criterion(9, "transmon populations rise toward the NR thermal ceiling", 120.0) as rec:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            base = population_trace(d, [f0], d.coupling_at(4.5), 0.03).p1[0]
            traces = {T: population_trace(d, flux, d.coupling_at(V), T) for V, T in MAP_CASES[1:]}
        w01 = np.array([spectrum_at_flux(d.transmon, f, 3).transition(0, 1) for f in flux])
        i0 = int(np.argmin(np.abs(flux - f0)))
        parts = [f"30 mK p1={base:.4f}"]
        for T, tr in traces.items():
            # the NR heats only the 0-1 transition, so the ceiling is the
            # Boltzmann ratio p1/p0 at T_NR, not the full thermal p1
            ceiling = np.array([boltzmann_ratio(w, T) for w in w01])
            ratio = tr.p1 / tr.p0
            parts.append(f"{T * 1e3:.0f} mK p1={tr.p1[i0]:.4f} p1/p0={ratio[i0]:.4f} (ceiling {ceiling[i0]:.4f})")
            assert tr.p1[i0] > base
            assert tr.p1[i0] > tr.p1[0] and tr.p1[i0] > tr.p1[-1]
            assert np.all(ratio <= ceiling * (1 + 1e-6))
        p_res = [base] + [traces[T].p1[3] for _, T in MAP_CASES[1:]]
        rec.detail = "; ".join(parts)
        assert np.all(np.diff(p_res) > 0)


def test_linewidth_fit_closure(criterion):
    truth = LinewidthModel(TWO_PI * 1.5e6, TWO_PI * 3.47e9, TWO_PI * 24e6, 0.0, 2.0 / 1.4e-6)
    w = TWO_PI * np.linspace(3.35e9, 3.59e9, 121)
    with criterion(10, "linewidth fit closure over 100 seeded trials", 30.0) as rec:
        good = 0
        for seed in range(100):
            g = synthetic_linewidth(truth, w, 0.05, np.random.default_rng(seed))
            fit = fit_linewidth(w, g)
            ok_w = abs(fit.model.omega_nr / truth.omega_nr - 1) <= 0.005
            ok_k = abs(fit.model.kappa_nr / truth.kappa_nr - 1) <= 0.10
            good += ok_w and ok_k
        rec.detail = f"{good}/100 trials within tolerance"
        assert good >= 95


def test_structural_invariants(criterion):
    rng = np.random.default_rng(20240607)
    base = DeviceParams()
    f0 = resonance_flux(base)
    counts = dict.fromkeys(("trace", "hermitian", "positive", "balance", "rwa", "vec"), 0)
    with criterion(11, "structural invariants over 200 random draws", 300.0) as rec:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for _ in range(200):
                T_NR, T_Q, T_cpw = rng.uniform(0.0, 0.2, 3)
                d = base.with_(T_Q=T_Q, T_cpw=T_cpw)
                flux = f0 + rng.uniform(-0.05, 0.05)
                m = build_model(d, flux, TWO_PI * rng.uniform(0, 2.5e6), T_NR)
                probe = TWO_PI * rng.uniform(4.93e9, 4.97e9)
                h = m.h_static - probe * m.number + m.h_drive
                assert h.is_hermitian()
                counts["hermitian"] += 1
                L = liouvillian(h, m.collapses)
                assert check_trace_preserving(L) <= 1e-10
                counts["trace"] += 1
                scale = np.linalg.norm(m.h_static.matrix) * np.linalg.norm(m.number.matrix)
                assert commutator_norm(m.h_static, m.number) <= 1e-12 * scale
                counts["rwa"] += 1
                r = m.rates
                pairs = [(r.kappa_cpw_up, r.kappa_cpw_down, d.omega_cpw, T_cpw),
                         (r.kappa_nr_up, r.kappa_nr_down, d.omega_nr, T_NR),
                         (r.gamma01_up, r.gamma01_down, m.spectrum.transition(0, 1), T_Q),
                         (r.gamma12_up, r.gamma12_down, m.spectrum.transition(1, 2), T_Q)]
                for up, down, w, T in pairs:
                    assert up == pytest.approx(down * boltzmann_ratio(w, T), rel=1e-12, abs=0.0)
                counts["balance"] += 1
                state = DrivenSteadyStateSolver(m.h_static, m.number, m.h_drive, m.collapses).solve(probe)
                rho = state.rho.matrix
                assert abs(np.trace(rho) - 1) <= 1e-10
                assert np.abs(rho - rho.conj().T).max() <= 1e-10
                assert np.linalg.eigvalsh(rho).min() >= -1e-8
                assert state.relative_residual <= 1e-8
                counts["positive"] += 1
                A, B, X = (rng.normal(size=(60, 60)) + 1j * rng.normal(size=(60, 60)) for _ in range(3))
                lhs = vectorize(A @ X @ B)
                assert np.allclose((spre(A) @ spost(B)) @ vectorize(X), lhs, atol=1e-9)
                counts["vec"] += 1
        rec.detail = ", ".join(f"{k} {v}" for k, v in counts.items())
