"""Command-line entry point: ``qemsim <subcommand> --config run.json --out results/``.

Configuration files are JSON with plain frequencies in Hz, temperatures in K,
voltages in V, capacitances in F and lengths in m. Every output file starts
with ``#`` metadata lines (package version, config hash, creation time) and the
hash covers the resolved configuration only, so identical inputs produce
identical bodies.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import warnings
from dataclasses import replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError

from . import __version__
from . import device as dev
from .params import DeviceParams
from .spectroscopy import (
    FluxPointSolver,
    SweepGrid,
    coupling_from_peak,
    default_grid,
    fit_linewidth,
    peak_transmission,
    resonance_flux,
    sweep,
    transmission_suppression,
)
from .tolerances import DEFAULT, Tolerances
from .transmon import TransmonParams, spectrum_at_flux

TWO_PI = 2.0 * math.pi
SUBCOMMANDS = ("estimate", "transmon-spectrum", "steady", "sweep", "linewidth", "admittance")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TransmonConfig(_Strict):
    E_C: PositiveFloat = Field(0.227e9, description="charging energy E_C/h, Hz")
    E_J0: PositiveFloat = Field(15.4e9, description="maximal Josephson energy E_J0/h, Hz")
    n_charge_states: int = Field(51, ge=11, description="odd charge-basis size")


class DeviceConfig(_Strict):
    f_cpw: PositiveFloat = Field(4.94e9, description="bare cavity frequency, Hz")
    f_nr: PositiveFloat = Field(3.47e9, description="mechanical mode frequency, Hz")
    g01: PositiveFloat = Field(120e6, description="transmon-cavity coupling g01/2pi, Hz")
    g12: Optional[PositiveFloat] = Field(None, description="optional override of g12/2pi, Hz")
    lambda_per_volt: float = Field(300e3, ge=0, description="NR coupling per volt lam/2pi, Hz/V")
    T1: PositiveFloat = Field(15e-6, description="transmon relaxation time, s")
    T2star: PositiveFloat = Field(1.4e-6, description="transmon dephasing time, s")
    kappa_cpw: PositiveFloat = Field(0.28e6, description="default cavity linewidth kappa/2pi, Hz")
    kappa_cpw_by_voltage: dict[str, PositiveFloat] = Field(
        default_factory=lambda: {"4.5": 0.28e6, "5.5": 0.37e6, "6.5": 1.08e6},
        description="cavity linewidth kappa/2pi (Hz) keyed by V_NR (V)")
    kappa_nr: PositiveFloat = Field(24e6, description="mechanical linewidth kappa/2pi, Hz")
    T_Q: float = Field(0.030, ge=0, description="transmon bath temperature, K")
    T_cpw: float = Field(0.045, ge=0, description="cavity bath temperature, K")
    dims: tuple[PositiveInt, PositiveInt, PositiveInt] = (3, 4, 5)
    photon_number: float = Field(0.1, ge=0, description="probe photon number on bare resonance")

    def build(self, transmon: TransmonConfig) -> DeviceParams:
        return DeviceParams(
            transmon=TransmonParams(transmon.E_C, transmon.E_J0, transmon.n_charge_states),
            omega_cpw=TWO_PI * self.f_cpw,
            omega_nr=TWO_PI * self.f_nr,
            g01=TWO_PI * self.g01,
            g12=None if self.g12 is None else TWO_PI * self.g12,
            lambda_per_volt=TWO_PI * self.lambda_per_volt,
            T1=self.T1,
            T2star=self.T2star,
            kappa_cpw=TWO_PI * self.kappa_cpw,
            kappa_cpw_by_voltage={float(k): TWO_PI * v for k, v in self.kappa_cpw_by_voltage.items()},
            kappa_nr=TWO_PI * self.kappa_nr,
            T_Q=self.T_Q,
            T_cpw=self.T_cpw,
            dims=self.dims,
            photon_number=self.photon_number,
        )


class SpectrumConfig(_Strict):
    flux_min: float = -0.5
    flux_max: float = 0.5
    n_flux: PositiveInt = 101
    n_levels: int = Field(3, ge=2)


class SteadyConfig(_Strict):
    V_NR: float = Field(6.5, description="NR bias, V")
    T_NR: float = Field(0.18, ge=0, description="NR bath temperature, K")
    flux: Optional[float] = Field(None, description="flux in Phi0; default is the NR resonance")
    probe: Optional[PositiveFloat] = Field(None, description="probe frequency, Hz; default f_cpw")


class SweepConfig(_Strict):
    V_NR: float = 6.5
    T_NR: float = Field(0.18, ge=0)
    n_flux: PositiveInt = 80
    n_probe: PositiveInt = 60
    flux_halfwidth: PositiveFloat = 0.03
    flux_center: Optional[float] = None
    probe_min: Optional[PositiveFloat] = Field(None, description="Hz; default spans the dressed cavity")
    probe_max: Optional[PositiveFloat] = Field(None, description="Hz")
    window: PositiveFloat = Field(0.02, description="suppression window around the center, Phi0")


class LinewidthConfig(_Strict):
    data: Optional[str] = Field(None, description="CSV with frequency_hz, linewidth_hz; default bundled")
    V_NR: PositiveFloat = 5.0
    restarts: int = Field(1, ge=0)


class AdmittanceConfig(_Strict):
    f_min: PositiveFloat = 1e9
    f_max: PositiveFloat = 7e9
    n: int = Field(601, ge=2)
    C_B: PositiveFloat = 90e-15
    C_c: PositiveFloat = 10e-15
    C_k: PositiveFloat = 10e-15
    r_port: PositiveFloat = 50.0
    line_z0: PositiveFloat = 50.0
    line_v_phase: PositiveFloat = 1.19e8
    line_length: PositiveFloat = 11.866e-3
    filter_L: Optional[PositiveFloat] = Field(50.0 / (TWO_PI * 2e9), description="H; null removes the filter")
    filter_C: PositiveFloat = 2.0 / (50.0 * TWO_PI * 2e9)
    filter_r: PositiveFloat = 50.0
    include_nr: bool = True
    lam: PositiveFloat = Field(1.5e6, description="NR coupling lam/2pi for the RLC calibration, Hz")
    T_phi: Optional[PositiveFloat] = Field(None, description="pure dephasing time for the linewidth, s")

    def network(self, device: DeviceParams) -> dev.CircuitNetwork:
        t_filter = None if self.filter_L is None else dev.TFilter(self.filter_L, self.filter_C, self.filter_r)
        nr = None
        if self.include_nr:
            nr = dev.calibrated_nr_branch(device.omega_nr, device.kappa_nr, TWO_PI * self.lam, self.C_B)
        return dev.CircuitNetwork(self.C_B, self.C_c, self.C_k, self.r_port,
                                  dev.TransmissionLine(self.line_z0, self.line_v_phase, self.line_length),
                                  t_filter, nr)


class StageConfig(_Strict):
    temperature: PositiveFloat
    attenuation_db: float = Field(ge=0)


class EstimateConfig(_Strict):
    beam_w: PositiveFloat = 45e-9
    beam_t: PositiveFloat = 100e-9
    beam_l: PositiveFloat = 700e-9
    Y_eff: PositiveFloat = 116e9
    rho_eff: PositiveFloat = 2966.0
    mode: int = 3
    dC_dx: PositiveFloat = Field(1.4e-9, description="F/m")
    V_NR: float = 1.0
    x_zp: Optional[PositiveFloat] = Field(25e-15, description="m; null uses the computed value")
    A01: PositiveFloat = Field(110.0, description="0-1 peak height, deg")
    sigma: PositiveFloat = Field(1.85, description="phase noise, deg")
    f01: PositiveFloat = 3.4e9
    input_chain: list[StageConfig] = Field(
        default_factory=lambda: [StageConfig(temperature=s.temperature, attenuation_db=s.attenuation_db)
                                 for s in dev.INPUT_CHAIN])
    T_amp: PositiveFloat = 4.0
    isolation_db: float = Field(35.0, ge=0)
    T_base: PositiveFloat = 0.03
    gamma_peak: PositiveFloat = Field(280e3, description="peak linewidth increase, Hz")
    gamma_background: float = Field(0.0, ge=0, description="Hz")
    bias_for_peak: PositiveFloat = Field(5.0, description="V")


class ToleranceConfig(_Strict):
    hermiticity: Optional[PositiveFloat] = None
    trace_preservation: Optional[PositiveFloat] = None
    steady_residual: Optional[PositiveFloat] = None
    positivity: Optional[PositiveFloat] = None
    truncation_population: Optional[PositiveFloat] = None
    gmres_rtol: Optional[PositiveFloat] = None

    def build(self) -> Tolerances:
        return replace(DEFAULT, **{k: v for k, v in self.model_dump().items() if v is not None})


class RunConfig(_Strict):
    transmon: TransmonConfig = Field(default_factory=TransmonConfig)
    device: DeviceConfig = Field(default_factory=DeviceConfig)
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    steady: SteadyConfig = Field(default_factory=SteadyConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    linewidth: LinewidthConfig = Field(default_factory=LinewidthConfig)
    admittance: AdmittanceConfig = Field(default_factory=AdmittanceConfig)
    estimate: EstimateConfig = Field(default_factory=EstimateConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    seed: int = Field(0, ge=0, lt=2**64)
    threads: Optional[PositiveInt] = None

    def device_params(self) -> DeviceParams:
        return self.device.build(self.transmon)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self).encode()).hexdigest()


class ConfigError(ValueError):
    pass


def canonical_json(config: RunConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def parse_config(path: str | os.PathLike | None, overrides: dict | None = None) -> RunConfig:
    """Load and validate a JSON config; ``None`` gives all defaults."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update(overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errs = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        raise ConfigError(errs) from exc


# -- output ----------------------------------------------------------------------


class Artifacts:
    """Collects output files and writes them together once computation is done."""

    def __init__(self, out: Path, config: RunConfig, subcommand: str):
        self.out = out
        self.meta = {
            "package": "qemsim",
            "version": __version__,
            "subcommand": subcommand,
            "config_sha256": config.digest(),
            "seed": config.seed,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        self.files: dict[str, str] = {}

    def _header(self) -> str:
        return "".join(f"# {k}: {v}\n" for k, v in self.meta.items())

    def csv(self, name: str, columns, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        self.files[name] = self._header() + buf.getvalue()

    def json(self, name: str, payload: dict):
        self.files[name] = json.dumps({"metadata": self.meta, **payload}, indent=2, default=_jsonable) + "\n"

    def write(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def body(text: str) -> str:
    """Output file contents without the ``#`` metadata lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# -- subcommands -------------------------------------------------------------------


def run_estimate(cfg: RunConfig, art: Artifacts) -> dict:
    e = cfg.estimate
    spec = dev.BeamSpec(e.beam_w, e.beam_t, e.beam_l, e.Y_eff, e.rho_eff, mode=e.mode)
    f_mode = dev.beam_frequency(spec)
    m = dev.effective_mass(spec)
    x_zp_computed = dev.zero_point(m, TWO_PI * f_mode)
    x_zp = x_zp_computed if e.x_zp is None else e.x_zp
    lam = abs(dev.coupling_strength(cfg.transmon.E_C, e.dC_dx, e.V_NR, x_zp)) / TWO_PI
    f_cpw = TWO_PI * cfg.device.f_cpw
    stages = [dev.ThermalStage(s.temperature, s.attenuation_db) for s in e.input_chain]
    n_in = dev.attenuated_population(stages, f_cpw)
    n_out = dev.output_population(e.T_amp, e.isolation_db, e.T_base, f_cpw)
    n_cpw, T_cpw = dev.cavity_mode_temperature(n_in, n_out, f_cpw)
    lam_peak = coupling_from_peak(TWO_PI * e.gamma_peak, TWO_PI * e.gamma_background,
                                  TWO_PI * cfg.device.kappa_nr) / TWO_PI
    report = {
        "mode_frequency_hz": f_mode,
        "effective_mass_kg": m,
        "x_zp_computed_m": x_zp_computed,
        "x_zp_used_m": x_zp,
        "coupling_lambda_over_h_hz": lam,
        "coupling_per_volt_hz_per_v": lam / abs(e.V_NR) if e.V_NR else float("nan"),
        "T_Q_bound_k": dev.qubit_temperature_bound(e.A01, e.sigma, TWO_PI * e.f01),
        "n_in": n_in,
        "n_out": n_out,
        "n_cpw": n_cpw,
        "T_cpw_k": T_cpw,
        "lambda_from_peak_hz": lam_peak,
        "lambda_from_peak_per_volt_hz_per_v": lam_peak / e.bias_for_peak,
    }
    art.json("estimate.json", {"inputs": e.model_dump(mode="json"), "results": report})
    width = max(map(len, report))
    print("\n".join(f"{k:<{width}}  {v:.6g}" for k, v in report.items()))
    return report


def run_spectrum(cfg: RunConfig, art: Artifacts):
    s = cfg.spectrum
    params = cfg.device_params().transmon
    fluxes = np.linspace(s.flux_min, s.flux_max, s.n_flux)
    cols = ["flux_phi0"] + [f"f0{m}_hz" for m in range(1, s.n_levels)]
    rows = []
    for f in fluxes:
        levels = spectrum_at_flux(params, float(f), s.n_levels).levels
        rows.append([float(f)] + [float(x) / TWO_PI for x in levels[1:]])
    art.csv("transmon_spectrum.csv", cols, rows)


def run_steady(cfg: RunConfig, art: Artifacts):
    d = cfg.device_params()
    s = cfg.steady
    flux = resonance_flux(d) if s.flux is None else s.flux
    probe = d.omega_cpw if s.probe is None else TWO_PI * s.probe
    solver = FluxPointSolver(d, flux, d.coupling_at(s.V_NR), s.T_NR,
                             kappa_cpw=d.kappa_cpw_at(s.V_NR), tol=cfg.tolerances.build())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        state = solver.state(probe)
    a = complex(state.cavity_amplitude)
    art.json("steady.json", {
        "flux_phi0": flux,
        "probe_hz": probe / TWO_PI,
        "cavity_amplitude": {"re": a.real, "im": a.imag, "abs": abs(a)},
        "populations": {name: state.populations(name) for name in d.layout.labels},
        "residual": state.residual,
        "relative_residual": state.relative_residual,
        "min_eigenvalue": state.min_eigenvalue,
        "method": state.method,
        "iterations": state.iterations,
        "truncation": state.truncation_report(),
        "warnings": [str(w.message) for w in caught],
    })


def run_sweep(cfg: RunConfig, art: Artifacts):
    d = cfg.device_params()
    s = cfg.sweep
    if s.probe_min is None and s.probe_max is None and s.flux_center is None:
        grid = default_grid(d, s.V_NR, s.T_NR, n_flux=s.n_flux, n_probe=s.n_probe,
                            flux_halfwidth=s.flux_halfwidth)
    else:
        center = resonance_flux(d) if s.flux_center is None else s.flux_center
        ref = default_grid(d, s.V_NR, s.T_NR, n_flux=2, n_probe=2, flux_halfwidth=s.flux_halfwidth)
        lo = ref.probe_axis[0] if s.probe_min is None else TWO_PI * s.probe_min
        hi = ref.probe_axis[-1] if s.probe_max is None else TWO_PI * s.probe_max
        fluxes = (np.array([center]) if s.n_flux == 1
                  else np.linspace(center - s.flux_halfwidth, center + s.flux_halfwidth, s.n_flux))
        probes = np.array([lo]) if s.n_probe == 1 else np.linspace(lo, hi, s.n_probe)
        grid = SweepGrid(fluxes, probes, s.V_NR, s.T_NR, d)
    workers = cfg.threads or os.cpu_count() or 1
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        smap = sweep(grid, workers=workers)
    rows = []
    norm = smap.normalized_amplitude
    for i, f in enumerate(grid.flux_axis):
        for j, w in enumerate(grid.probe_axis):
            rows.append([float(f), float(w) / TWO_PI, float(smap.amplitude[i, j]),
                         float(norm[i, j]), float(smap.phase[i, j]),
                         *map(float, smap.populations[i, j]), float(smap.residuals[i, j])])
    levels = [f"p{m}_prob" for m in range(smap.populations.shape[-1])]
    art.csv("sweep.csv", ["flux_phi0", "probe_hz", "abs_a_sqrt_photons", "transmission_norm_ratio",
                          "phase_rad", *levels, "relative_residual_ratio"], rows)
    summary = {"shape": list(grid.shape), "lambda_over_2pi_hz": grid.lam / TWO_PI,
               "T_NR_k": grid.T_NR, "kappa_cpw_over_2pi_hz": grid.kappa_cpw / TWO_PI,
               "failures": [list(f) for f in smap.failures],
               "warnings": [str(w.message) for w in caught]}
    if grid.flux_axis.size >= 3 and grid.probe_axis.size >= 3:
        center = resonance_flux(d) if s.flux_center is None else s.flux_center
        sup, ref = transmission_suppression(smap, center, s.window)
        summary.update({"peak_transmission": peak_transmission(smap), "suppression": sup,
                        "reference_peak": ref, "max_suppression": float(np.nanmax(sup))})
    art.json("sweep.json", summary)


def _bundled_linewidth():
    text = resources.files("qemsim").joinpath("data/linewidth_synthetic.csv").read_text()
    return text


def run_linewidth(cfg: RunConfig, art: Artifacts):
    lw = cfg.linewidth
    text = Path(lw.data).read_text() if lw.data else _bundled_linewidth()
    reader = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    data = [(float(r["frequency_hz"]), float(r["linewidth_hz"])) for r in reader]
    if not data:
        raise ConfigError("linewidth data is empty")
    f, g = np.array(data).T
    fit = fit_linewidth(TWO_PI * f, TWO_PI * g, restarts=lw.restarts)
    m = fit.model
    curve = m.gamma0 + m.lam**2 * m.kappa_nr / ((m.omega_nr - TWO_PI * f) ** 2 + (m.kappa_nr / 2) ** 2)
    art.csv("linewidth.csv", ["frequency_hz", "linewidth_hz", "fit_linewidth_hz"],
            [[a, b, c / TWO_PI] for a, b, c in zip(f, g, curve)])
    art.json("linewidth_fit.json", {
        "source": lw.data or "bundled synthetic dataset",
        "lambda_over_h_hz": m.lam / TWO_PI,
        "lambda_per_volt_hz_per_v": m.lam / TWO_PI / lw.V_NR,
        "f_nr_hz": m.omega_nr / TWO_PI,
        "kappa_nr_over_2pi_hz": m.kappa_nr / TWO_PI,
        "gamma0_over_2pi_hz": m.gamma0 / TWO_PI,
        "residual_norm_hz": fit.residual_norm / TWO_PI,
        "iterations": fit.iterations,
    })
    print(f"lambda/h = {m.lam / TWO_PI / 1e6:.4f} MHz, f_NR = {m.omega_nr / TWO_PI / 1e9:.5f} GHz, "
          f"kappa_NR/2pi = {m.kappa_nr / TWO_PI / 1e6:.3f} MHz")


def run_admittance(cfg: RunConfig, art: Artifacts):
    a = cfg.admittance
    d = cfg.device_params()
    net = a.network(d)
    w = TWO_PI * np.linspace(a.f_min, a.f_max, a.n)
    y = dev.admittance(net, w, include_shunt=False)
    re_y = np.real(y)
    ok = np.isfinite(y) & (re_y > 0)
    t1 = np.where(ok, a.C_B / np.where(ok, re_y, 1.0), np.nan)
    gamma = dev.linewidth_from_t1(t1, math.inf if a.T_phi is None else a.T_phi)
    art.csv("admittance.csv", ["frequency_hz", "re_y_siemens", "im_y_siemens", "t1_s", "linewidth_hz"],
            [[wi / TWO_PI, yi.real, yi.imag, ti, gi] for wi, yi, ti, gi in zip(w, y, t1, gamma)])


RUNNERS = {
    "estimate": run_estimate,
    "transmon-spectrum": run_spectrum,
    "steady": run_steady,
    "sweep": run_sweep,
    "linewidth": run_linewidth,
    "admittance": run_admittance,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qemsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qemsim {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    p.add_argument("--out", default="qemsim-out", help="output directory")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--threads", type=int, help="worker processes for sweeps (overrides the config)")
    return p


def run(subcommand: str, config: RunConfig, out: str | os.PathLike) -> int:
    """Run one subcommand; returns the process exit status."""
    out = Path(out)
    art = Artifacts(out, config, subcommand)
    try:
        if subcommand not in RUNNERS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        RUNNERS[subcommand](config, art)
    except Exception as exc:  # reported as a machine-readable error
        _report_error(out, subcommand, exc)
        return 1
    art.files["config.resolved.json"] = json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
    art.write()
    (out / "error.json").unlink(missing_ok=True)
    return 0


def _report_error(out: Path | None, subcommand: str, exc: Exception):
    payload = {"error": type(exc).__name__, "message": str(exc), "subcommand": subcommand}
    text = json.dumps(payload)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as exc:
        _report_error(Path(args.out), args.subcommand, exc)
        return 2
    return run(args.subcommand, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
