"""Single-tone cavity spectroscopy, transmon population traces and the NR quantum-noise linewidth model."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, GridPointError, PhysicsInputError, TruncationWarning
from .lindblad import DrivenSteadyStateSolver, bose_occupation
from .params import DeviceParams, build_model
from .tolerances import DEFAULT, Tolerances
from .transmon import flux_for_frequency

__all__ = [
    "SweepGrid",
    "SpectroscopyMap",
    "PointResult",
    "PopulationTrace",
    "LinewidthModel",
    "LinewidthFit",
    "FluxPointSolver",
    "single_tone_point",
    "sweep",
    "default_grid",
    "dressed_cavity_frequency",
    "resonance_flux",
    "peak_transmission",
    "transmission_suppression",
    "population_trace",
    "thermal_populations",
    "sx_noise",
    "noise_linewidth",
    "fit_linewidth",
    "coupling_from_peak",
    "synthetic_linewidth",
]

TWO_PI = 2.0 * math.pi


# -- steady-state spectroscopy ------------------------------------------------


@dataclass(frozen=True)
class PointResult:
    amplitude: complex
    populations: np.ndarray
    residual: float
    method: str = ""


class FluxPointSolver:
    """Solves the driven steady state at one flux for any number of probe frequencies.

    Every probe frequency is solved independently from the same per-flux
    factorizations, so a result does not depend on which other frequencies
    were solved before it.
    """

    def __init__(self, device: DeviceParams, flux: float, lam: float, T_NR: float, *,
                 kappa_cpw=None, E_d=None, tol: Tolerances = DEFAULT):
        self.model = build_model(device, flux, lam, T_NR, kappa_cpw=kappa_cpw, E_d=E_d)
        m = self.model
        self.flux = float(flux)
        self._solver = DrivenSteadyStateSolver(m.h_static, m.number, m.h_drive, m.collapses, tol)

    def solve(self, omega_d: float) -> PointResult:
        state = self._solver.solve(float(omega_d))
        return PointResult(
            complex(state.cavity_amplitude),
            np.array(state.populations("transmon")),
            state.relative_residual,
            state.method,
        )

    def state(self, omega_d: float):
        return self._solver.solve(float(omega_d))


def single_tone_point(device: DeviceParams, flux: float, omega_d: float, lam: float, T_NR: float,
                      *, kappa_cpw=None, E_d=None) -> PointResult:
    """Cavity amplitude <a> and transmon populations at one (flux, probe) cell."""
    try:
        return FluxPointSolver(device, flux, lam, T_NR, kappa_cpw=kappa_cpw, E_d=E_d).solve(omega_d)
    except Exception as exc:
        raise GridPointError(flux, omega_d, exc) from exc


def _strictly_monotone(x) -> bool:
    d = np.diff(x)
    return bool(np.all(d > 0) or np.all(d < 0))


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Flux (units of Phi0) by probe frequency (rad/s) grid at one coupling voltage."""

    flux_axis: np.ndarray
    probe_axis: np.ndarray
    V_NR: float
    T_NR: float
    device: DeviceParams = field(default_factory=DeviceParams)
    lambda_per_volt: float | None = None

    def __post_init__(self):
        for name in ("flux_axis", "probe_axis"):
            a = np.array(getattr(self, name), dtype=float).ravel()
            if a.size == 0:
                raise PhysicsInputError(f"{name} is empty")
            if a.size > 1 and not _strictly_monotone(a):
                raise PhysicsInputError(f"{name} must be strictly monotone")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.T_NR < 0:
            raise PhysicsInputError("T_NR must be >= 0")
        if self.lambda_per_volt is None:
            object.__setattr__(self, "lambda_per_volt", self.device.lambda_per_volt)
        if self.lambda_per_volt < 0:
            raise PhysicsInputError("lambda_per_volt must be >= 0")

    @property
    def lam(self) -> float:
        return self.lambda_per_volt * abs(self.V_NR)

    @property
    def kappa_cpw(self) -> float:
        return self.device.kappa_cpw_at(self.V_NR)

    @property
    def E_d(self) -> float:
        return self.device.drive_amplitude(self.kappa_cpw)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.flux_axis.size, self.probe_axis.size)


@dataclass(frozen=True, eq=False)
class SpectroscopyMap:
    """Results on a :class:`SweepGrid`; arrays are indexed [flux, probe]."""

    grid: SweepGrid
    amplitude: np.ndarray
    phase: np.ndarray
    populations: np.ndarray
    residuals: np.ndarray
    failures: tuple = ()

    @property
    def normalized_amplitude(self) -> np.ndarray:
        """|<a>| (kappa/2) / E_d, unity on the bare-cavity resonance at weak drive."""
        E_d = self.grid.E_d
        if E_d == 0:
            return np.zeros_like(self.amplitude)
        return self.amplitude * (self.grid.kappa_cpw / 2.0) / E_d


def _solve_column(args):
    device, flux, lam, T_NR, kappa, E_d, probes = args
    n = len(probes)
    amp = np.full(n, np.nan, dtype=complex)
    pops = np.full((n, device.dims[0]), np.nan)
    res = np.full(n, np.nan)
    failures = []
    try:
        solver = FluxPointSolver(device, flux, lam, T_NR, kappa_cpw=kappa, E_d=E_d)
    except Exception as exc:  # whole column fails
        return amp, pops, res, [(None, f"{type(exc).__name__}: {exc}")], 0
    truncated = 0
    for j, w in enumerate(probes):
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", TruncationWarning)
                r = solver.solve(w)
        except Exception as exc:
            failures.append((j, f"{type(exc).__name__}: {exc}"))
            continue
        truncated += any(issubclass(c.category, TruncationWarning) for c in caught)
        amp[j], pops[j], res[j] = r.amplitude, r.populations, r.residual
    return amp, pops, res, failures, truncated


def sweep(grid: SweepGrid, workers: int | None = None) -> SpectroscopyMap:
    """Evaluate every (flux, probe) cell of ``grid``.

    Flux columns are distributed over ``workers`` processes (default: all
    cores). Cell values do not depend on the worker count or on the order of
    either axis. Failed cells are NaN and listed in ``failures``.
    """
    workers = (os.cpu_count() or 1) if workers is None else max(1, int(workers))
    lam, kappa, E_d = grid.lam, grid.kappa_cpw, grid.E_d
    tasks = [(grid.device, float(f), lam, grid.T_NR, kappa, E_d, grid.probe_axis)
             for f in grid.flux_axis]
    if workers == 1 or len(tasks) == 1:
        columns = [_solve_column(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(_solve_column, tasks))
    amp = np.stack([c[0] for c in columns])
    pops = np.stack([c[1] for c in columns])
    res = np.stack([c[2] for c in columns])
    truncated = sum(c[4] for c in columns)
    if truncated:
        warnings.warn(
            f"{truncated} of {amp.size} cells have more than "
            f"{DEFAULT.truncation_population:g} population in a top level",
            TruncationWarning,
            stacklevel=2,
        )
    failures = []
    for i, c in enumerate(columns):
        for j, msg in c[3]:
            failures.append((float(grid.flux_axis[i]),
                             None if j is None else float(grid.probe_axis[j]), msg))
    return SpectroscopyMap(grid, np.abs(amp), np.angle(amp), pops, res, tuple(failures))


def resonance_flux(device: DeviceParams) -> float:
    """Flux in [0, 0.5] where omega_01 equals omega_NR."""
    return flux_for_frequency(device.transmon, device.omega_nr)


def dressed_cavity_frequency(device: DeviceParams, flux: float) -> float:
    """Cavity-like eigenfrequency of the single-excitation block (no NR coupling)."""
    m = build_model(device, flux, 0.0, 0.0, E_d=0.0)
    h = m.h_static.matrix
    n = np.rint(np.real(np.diag(m.number.matrix))).astype(int)
    idx = np.flatnonzero(n == 1)
    w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
    labels = m.layout.basis_labels()[idx]
    cav = [0] * len(device.dims)
    cav[m.layout.index("cavity")] = 1
    c = int(np.flatnonzero((labels == cav).all(axis=1))[0])
    return float(w[np.argmax(np.abs(v[c]) ** 2)])


def default_grid(device: DeviceParams, V_NR: float, T_NR: float, *, n_flux: int = 80,
                 n_probe: int = 60, flux_halfwidth: float = 0.03) -> SweepGrid:
    """Grid centred on the transmon-NR resonance flux covering the pulled cavity line."""
    f0 = resonance_flux(device)
    flux = np.linspace(f0 - flux_halfwidth, f0 + flux_halfwidth, n_flux)
    ends = [dressed_cavity_frequency(device, f) for f in (flux[0], flux[-1])]
    margin = 3.0 * device.kappa_cpw_at(V_NR)
    probe = np.linspace(min(ends) - margin, max(ends) + margin, n_probe)
    return SweepGrid(flux, probe, V_NR, T_NR, device)


def peak_transmission(smap: SpectroscopyMap) -> np.ndarray:
    """Peak normalized transmission per flux.

    The maximum is refined by a parabola through 1/|a|^2 at the three
    samples around it, which is exact for a Lorentzian line.
    """
    amp = smap.normalized_amplitude
    out = np.full(amp.shape[0], np.nan)
    x = smap.grid.probe_axis
    for i, row in enumerate(amp):
        if not np.all(np.isfinite(row)):
            continue
        j = int(np.argmax(row))
        if 0 < j < len(row) - 1 and np.all(row[j - 1:j + 2] > 0):
            y = 1.0 / row[j - 1:j + 2] ** 2
            c = np.polyfit(x[j - 1:j + 2] - x[j], y, 2)
            if c[0] > 0:
                vertex = c[2] - c[1] ** 2 / (4.0 * c[0])
                if vertex > 0:
                    out[i] = max(row[j], 1.0 / math.sqrt(vertex))
                    continue
        out[i] = row[j]
    return out


def transmission_suppression(smap: SpectroscopyMap, center: float, window: float = 0.02):
    """Fractional drop of peak transmission relative to fluxes outside ``center +- window``.

    Returns (suppression per flux, reference peak).
    """
    peaks = peak_transmission(smap)
    flux = smap.grid.flux_axis
    outside = np.abs(flux - center) > window
    if not np.any(outside & np.isfinite(peaks)):
        raise PhysicsInputError("no flux samples outside the window to use as reference")
    ref = float(np.nanmedian(peaks[outside]))
    return 1.0 - peaks / ref, ref


# -- populations ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PopulationTrace:
    flux: np.ndarray
    populations: np.ndarray  # [flux, level]
    lam: float
    T_NR: float

    @property
    def p0(self):
        return self.populations[:, 0]

    @property
    def p1(self):
        return self.populations[:, 1]


def population_trace(device: DeviceParams, flux_axis, lam: float, T_NR: float, *,
                     omega_d: float | None = None, E_d: float | None = None,
                     kappa_cpw: float | None = None) -> PopulationTrace:
    """Transmon level populations against flux at a fixed weak probe.

    The probe sits at the bare cavity frequency unless ``omega_d`` is given.
    """
    omega_d = device.omega_cpw if omega_d is None else omega_d
    flux_axis = np.asarray(flux_axis, dtype=float)
    pops = np.empty((flux_axis.size, device.dims[0]))
    for i, f in enumerate(flux_axis):
        pops[i] = single_tone_point(device, f, omega_d, lam, T_NR,
                                    kappa_cpw=kappa_cpw, E_d=E_d).populations
    return PopulationTrace(flux_axis, pops, float(lam), float(T_NR))


def thermal_populations(levels, T: float) -> np.ndarray:
    """Boltzmann populations of levels (rad/s, ground at 0) at temperature ``T``."""
    from scipy.constants import hbar, k as k_B

    levels = np.asarray(levels, dtype=float)
    if T <= 0:
        p = np.zeros(levels.size)
        p[0] = 1.0
        return p
    with np.errstate(over="ignore"):  # a subnormal T sends excited levels to exp(-inf)
        w = np.exp(-(hbar / k_B) * (levels - levels[0]) / T)
    return w / w.sum()


# -- quantum-noise linewidth ----------------------------------------------------


@dataclass(frozen=True)
class LinewidthModel:
    """NR-induced transmon linewidth parameters (rad/s)."""

    lam: float
    omega_nr: float
    kappa_nr: float
    n_th: float = 0.0
    gamma0: float = 0.0

    def __post_init__(self):
        if not self.kappa_nr > 0:
            raise PhysicsInputError("kappa_nr must be positive")
        if self.n_th < 0 or self.gamma0 < 0:
            raise PhysicsInputError("n_th and gamma0 must be >= 0")

    @classmethod
    def at_temperature(cls, lam, omega_nr, kappa_nr, T_NR, gamma0=0.0):
        return cls(lam, omega_nr, kappa_nr, bose_occupation(omega_nr, T_NR), gamma0)

    @property
    def quality_factor(self) -> float:
        return self.omega_nr / self.kappa_nr


def sx_noise(model: LinewidthModel, omega, sign: int = +1):
    """Displacement noise S_x(sign * omega) in units of x_zp^2 s.

    ``sign=+1`` (absorption by the NR) carries n_th + 1; ``sign=-1`` carries n_th.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise PhysicsInputError("omega must be positive")
    half = model.kappa_nr / 2.0
    if sign > 0:
        return model.kappa_nr * (model.n_th + 1.0) / ((model.omega_nr - omega) ** 2 + half**2)
    if sign < 0:
        return model.kappa_nr * model.n_th / ((model.omega_nr + omega) ** 2 + half**2)
    raise ValueError("sign must be +1 or -1")


def noise_linewidth(model: LinewidthModel, omega):
    """gamma(omega) = lam^2 (S_x(omega) + S_x(-omega)) / x_zp^2 + gamma0."""
    lam2 = model.lam**2
    return lam2 * (sx_noise(model, omega, +1) + sx_noise(model, omega, -1)) + model.gamma0


@dataclass(frozen=True)
class LinewidthFit:
    model: LinewidthModel
    residual_norm: float
    iterations: int
    success: bool

    @property
    def peak_height(self) -> float:
        """gamma(omega_NR) - gamma0 of the single-Lorentzian form."""
        return 4.0 * self.model.lam**2 / self.model.kappa_nr


def _lorentz(omega, omega0, kappa, amp, gamma0):
    return amp * kappa / ((omega0 - omega) ** 2 + (kappa / 2.0) ** 2) + gamma0


def _seeds(omega, gamma):
    j = int(np.argmax(gamma))
    lo = float(np.min(gamma))
    half = lo + 0.5 * (gamma[j] - lo)
    above = omega[gamma >= half]
    width = float(above.max() - above.min()) if above.size > 1 else float(np.ptp(omega)) / 4.0
    if width <= 0:
        width = float(np.ptp(omega)) / 4.0
    return float(omega[j]), width, float(gamma[j] - lo), lo


def fit_linewidth(omega, gamma, *, max_iter: int = 20000, restarts: int = 1) -> LinewidthFit:
    """Fit gamma = lam^2 kappa / ((omega0 - omega)^2 + (kappa/2)^2) + gamma0.

    Least squares by Nelder-Mead in scaled coordinates, seeded from the data
    (peak position, half-maximum width, minimum).

    Raises
    ------
    ConvergenceError
        If the simplex does not converge; ``best`` holds the best fit found.
    """
    omega = np.asarray(omega, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if omega.shape != gamma.shape or omega.ndim != 1:
        raise PhysicsInputError("omega and gamma must be 1-d arrays of equal length")
    if omega.size < 8:
        raise PhysicsInputError(f"need at least 8 samples, got {omega.size}")
    w0, k0, h0, g0 = _seeds(omega, gamma)
    if np.ptp(omega) < 2.0 * k0:
        raise PhysicsInputError("samples must span at least two linewidths")
    scale = max(h0, 1e-300)

    def unpack(p):
        omega0 = w0 + p[0] * k0
        kappa = k0 * math.exp(p[1])
        height = h0 * math.exp(p[2])
        return omega0, kappa, height * kappa / 4.0, p[3] * scale

    def cost(p):
        if abs(p[1]) > 50 or abs(p[2]) > 50:
            return np.inf
        omega0, kappa, amp, g = unpack(p)
        r = (_lorentz(omega, omega0, kappa, amp, g) - gamma) / scale
        return float(r @ r)

    x = np.array([0.0, 0.0, 0.0, g0 / scale])
    best, total, success = None, 0, False
    for _ in range(1 + restarts):
        res = minimize(cost, x, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": max_iter,
                                "maxfev": 2 * max_iter, "adaptive": True})
        total += int(res.nit)
        if best is None or res.fun <= best.fun:
            best = res
        x = best.x
        success = bool(res.success)
    omega0, kappa, amp, g = unpack(best.x)
    model = LinewidthModel(math.sqrt(max(amp, 0.0)), omega0, abs(kappa), 0.0, max(g, 0.0))
    fit = LinewidthFit(model, math.sqrt(best.fun) * scale, total, success)
    if not success:
        raise ConvergenceError("linewidth fit did not converge", iterations=total, best=fit)
    return fit


def coupling_from_peak(gamma_peak: float, gamma0: float, kappa_nr: float) -> float:
    """lam = sqrt((gamma_peak - gamma0) kappa_NR / 4), all in rad/s."""
    if not gamma_peak > gamma0:
        raise PhysicsInputError(
            f"peak linewidth {gamma_peak!r} must exceed the background {gamma0!r}"
        )
    if not kappa_nr > 0:
        raise PhysicsInputError("kappa_nr must be positive")
    return math.sqrt((gamma_peak - gamma0) * kappa_nr / 4.0)


def synthetic_linewidth(model: LinewidthModel, omega, noise: float, rng: np.random.Generator):
    """noise_linewidth(model, omega) times (1 + noise * N(0, 1)) per sample."""
    if noise < 0:
        raise PhysicsInputError("noise must be >= 0")
    clean = noise_linewidth(model, omega)
    return clean * (1.0 + noise * rng.standard_normal(np.shape(clean)))
