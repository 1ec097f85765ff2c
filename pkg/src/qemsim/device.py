"""Device-physics estimators: beam mechanics, couplings, thermal photon budgets and circuit damping.

Frequencies returned by the beam formulas are plain frequencies in Hz; every
other rate or angular frequency is in rad/s. Energies such as E_C are given as
E/h in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import e as e_charge, hbar, k as k_B

from .errors import PhysicsInputError
from .lindblad import bose_occupation

__all__ = [
    "BeamSpec",
    "beam_frequency",
    "effective_mass",
    "zero_point",
    "coupling_strength",
    "coupling_approx",
    "zero_point_voltage",
    "cavity_g",
    "composite_beam_properties",
    "qubit_temperature_bound",
    "ThermalStage",
    "INPUT_CHAIN",
    "attenuated_population",
    "output_population",
    "cavity_mode_temperature",
    "TransmissionLine",
    "TFilter",
    "SeriesRLC",
    "CircuitNetwork",
    "series",
    "shunt",
    "line",
    "cascade",
    "input_impedance",
    "admittance",
    "radiative_t1",
    "linewidth_from_t1",
    "calibrated_nr_branch",
]

TWO_PI = 2.0 * math.pi


# -- beam mechanics ---------------------------------------------------------------


@dataclass(frozen=True)
class BeamSpec:
    """Doubly clamped beam; lengths in m, Y in Pa, rho in kg/m^3."""

    w: float = 45e-9
    t: float = 100e-9
    l: float = 700e-9
    Y_eff: float = 116e9
    rho_eff: float = 2966.0
    mode_constants: dict = field(default_factory=lambda: {1: 1.028, 3: 5.555})
    mass_ratios: dict = field(default_factory=lambda: {1: 0.3959, 3: 0.4358})
    mode: int = 3

    def __post_init__(self):
        for name in ("w", "t", "l", "Y_eff", "rho_eff"):
            if not getattr(self, name) > 0:
                raise PhysicsInputError(f"{name} must be positive")
        for table in (self.mode_constants, self.mass_ratios):
            if any(not v > 0 for v in table.values()):
                raise PhysicsInputError("mode constants and mass ratios must be positive")


def beam_frequency(spec: BeamSpec, n: int | None = None) -> float:
    """Flexural frequency f_n = k_n (w / l^2) sqrt(Y / rho), in Hz."""
    n = spec.mode if n is None else n
    if n not in spec.mode_constants:
        raise PhysicsInputError(f"no mode constant for mode {n}")
    return spec.mode_constants[n] * spec.w / spec.l**2 * math.sqrt(spec.Y_eff / spec.rho_eff)


def effective_mass(spec: BeamSpec, n: int | None = None) -> float:
    """m_n = alpha_n rho w t l, in kg."""
    n = spec.mode if n is None else n
    if n not in spec.mass_ratios:
        raise PhysicsInputError(f"no effective mass ratio for mode {n}")
    return spec.mass_ratios[n] * spec.rho_eff * spec.w * spec.t * spec.l


def zero_point(m: float, omega: float) -> float:
    """RMS zero-point displacement sqrt(hbar / (2 m omega)), in m."""
    if not (m > 0 and omega > 0):
        raise PhysicsInputError("mass and frequency must be positive")
    return math.sqrt(hbar / (2.0 * m * omega))


def coupling_strength(E_C: float, dC_dx: float, V_NR: float, x_zp: float) -> float:
    """lam = -4 (E_C/hbar) (dC/dx) (V/e) x_zp in rad/s, with E_C given as E_C/h in Hz.

    The sign is kept; use ``abs`` for the magnitude.
    """
    return -4.0 * TWO_PI * E_C * dC_dx * (V_NR / e_charge) * x_zp


def coupling_approx(E_C: float, C_NR: float, d: float, V_NR: float, x_zp: float) -> float:
    """Coupling with the parallel-plate estimate dC/dx ~ C_NR / d."""
    if not d > 0:
        raise PhysicsInputError("gap d must be positive")
    return coupling_strength(E_C, C_NR / d, V_NR, x_zp)


def zero_point_voltage(omega_cpw: float, C_cpw: float) -> float:
    """RMS vacuum voltage sqrt(hbar omega / (2 C)) of a cavity mode, in V."""
    if not (omega_cpw > 0 and C_cpw > 0):
        raise PhysicsInputError("frequency and capacitance must be positive")
    return math.sqrt(hbar * omega_cpw / (2.0 * C_cpw))


def cavity_g(beta: float, V_zp: float) -> float:
    """Transmon-cavity coupling g = 2 beta e V_zp / hbar, in rad/s."""
    if not 0 <= beta < 1:
        raise PhysicsInputError(f"beta must be in [0, 1), got {beta}")
    return 2.0 * beta * e_charge * V_zp / hbar


def composite_beam_properties(core_w: float, core_t: float, shell: float,
                              core=(2700.0, 70e9), shell_material=(3950.0, 380e9)):
    """Area-weighted (rho, Y) of a rectangular core with a uniform surface shell.

    A rough exploratory estimate, not a substitute for measured or
    simulated effective properties. Returns (rho, Y, outer_w, outer_t).
    """
    if min(core_w, core_t) <= 0 or shell < 0:
        raise PhysicsInputError("dimensions must be positive")
    outer_w, outer_t = core_w + 2 * shell, core_t + 2 * shell
    a_core = core_w * core_t
    a_shell = outer_w * outer_t - a_core
    total = a_core + a_shell
    rho = (core[0] * a_core + shell_material[0] * a_shell) / total
    Y = (core[1] * a_core + shell_material[1] * a_shell) / total
    return rho, Y, outer_w, outer_t


# -- temperatures and thermal photons -----------------------------------------------


def qubit_temperature_bound(A01: float, sigma: float, omega01: float) -> float:
    """Upper bound on the transmon temperature when the 1-2 peak is below 3 sigma, in K."""
    if not (sigma > 0 and A01 > 3.0 * sigma):
        raise PhysicsInputError("need A01 > 3 sigma > 0 to bound the temperature")
    return hbar * omega01 / (k_B * math.log(A01 / (3.0 * sigma)))


@dataclass(frozen=True)
class ThermalStage:
    """A noise source at ``temperature`` seen through ``attenuation_db`` of loss."""

    temperature: float
    attenuation_db: float = 0.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise PhysicsInputError("stage temperature must be positive")
        if self.attenuation_db < 0:
            raise PhysicsInputError("attenuation must be >= 0 dB")


# input line: room temperature and the attenuators on each plate, with the
# cumulative attenuation between each source and the device
INPUT_CHAIN = (
    ThermalStage(300.0, 66.0),
    ThermalStage(1.0, 36.0),
    ThermalStage(0.7, 30.0),
    ThermalStage(0.1, 20.0),
    ThermalStage(0.03, 0.0),
)


def attenuated_population(stages, omega: float) -> float:
    """Incident photon number sum_i n(T_i) / 10^(A_i/10)."""
    stages = list(stages)
    if not stages:
        raise PhysicsInputError("need at least one stage")
    return float(sum(bose_occupation(omega, s.temperature) / 10 ** (s.attenuation_db / 10)
                     for s in stages))


def output_population(T_amp: float, D_db: float, T_base: float, omega: float) -> float:
    """n(T_amp) / 10^(D/10) + n(T_base) for an amplifier behind isolators."""
    if D_db < 0:
        raise PhysicsInputError("isolation must be >= 0 dB")
    if math.isinf(D_db):
        return bose_occupation(omega, T_base)
    return bose_occupation(omega, T_amp) / 10 ** (D_db / 10) + bose_occupation(omega, T_base)


def cavity_mode_temperature(n_in: float, n_out: float, omega: float):
    """Mode occupation (n_in + n_out)/2 for symmetric ports and its temperature (K)."""
    if n_in < 0 or n_out < 0:
        raise PhysicsInputError("populations must be >= 0")
    n = 0.5 * (n_in + n_out)
    if n == 0:
        return 0.0, 0.0
    return n, hbar * omega / (k_B * math.log1p(1.0 / n))


# -- circuit damping ---------------------------------------------------------------
# Two-port ABCD matrices. Arrays carry a leading frequency axis: shape (..., 2, 2).


def series(z):
    z = np.asarray(z, dtype=complex)
    one, zero = np.ones_like(z), np.zeros_like(z)
    return np.stack([np.stack([one, z], -1), np.stack([zero, one], -1)], -2)


def shunt(y):
    y = np.asarray(y, dtype=complex)
    one, zero = np.ones_like(y), np.zeros_like(y)
    return np.stack([np.stack([one, zero], -1), np.stack([y, one], -1)], -2)


def line(z0: float, beta_l):
    """Lossless transmission line of electrical length beta_l (rad)."""
    bl = np.asarray(beta_l, dtype=float)
    c, s = np.cos(bl).astype(complex), np.sin(bl).astype(complex)
    return np.stack([np.stack([c, 1j * z0 * s], -1), np.stack([1j * s / z0, c], -1)], -2)


def cascade(*mats):
    out = mats[0]
    for m in mats[1:]:
        out = out @ m
    return out


def input_impedance(abcd, z_load):
    """Impedance looking into port 1 with port 2 terminated in ``z_load``.

    ``z_load = inf`` means an open circuit.
    """
    A, B, C, D = abcd[..., 0, 0], abcd[..., 0, 1], abcd[..., 1, 0], abcd[..., 1, 1]
    z_load = np.asarray(z_load, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.all(np.isinf(z_load)):
            return A / C
        return (A * z_load + B) / (C * z_load + D)


@dataclass(frozen=True)
class TransmissionLine:
    z0: float = 50.0
    v_phase: float = 1.19e8
    length: float = 11.866e-3

    def electrical_length(self, omega):
        return np.asarray(omega, dtype=float) * self.length / self.v_phase

    def half_wave_frequency(self) -> float:
        """Unloaded fundamental v / (2 l), in Hz."""
        return self.v_phase / (2.0 * self.length)


@dataclass(frozen=True)
class TFilter:
    """Series L, shunt C, series L low-pass, terminated in ``r_term``.

    Defaults are a Butterworth T for a 2 GHz corner in a 50 ohm system.
    """

    L: float = 50.0 / (TWO_PI * 2e9)
    C: float = 2.0 / (50.0 * TWO_PI * 2e9)
    r_term: float = 50.0

    def impedance(self, omega):
        w = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z_shunt = 1.0 / (1j * w * self.C)
            inner = 1j * w * self.L + self.r_term
            return 1j * w * self.L + z_shunt * inner / (z_shunt + inner)


@dataclass(frozen=True)
class SeriesRLC:
    R: float
    L: float
    C: float

    def admittance(self, omega):
        w = np.asarray(omega, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (self.R + 1j * w * self.L + 1.0 / (1j * w * self.C))

    @property
    def resonance(self) -> float:
        return 1.0 / math.sqrt(self.L * self.C)


def calibrated_nr_branch(omega_nr: float, kappa_nr: float, lam: float, C_B: float) -> SeriesRLC:
    """Series RLC whose damping of a C_B-shunted transmon reproduces 4 lam^2 / kappa on resonance.

    R sets the peak rate 1/(R C_B), R/L the full width kappa, and L C the
    resonance omega_nr.
    """
    if not (lam > 0 and kappa_nr > 0 and omega_nr > 0 and C_B > 0):
        raise PhysicsInputError("lam, kappa_nr, omega_nr and C_B must be positive")
    R = kappa_nr / (4.0 * lam**2 * C_B)
    L = R / kappa_nr
    return SeriesRLC(R, L, 1.0 / (omega_nr**2 * L))


@dataclass(frozen=True)
class CircuitNetwork:
    """Transmon coupled through C_c to one end of a filtered half-wave cavity.

    Both cavity ends connect through C_k to 50 ohm lines; the T filter hangs
    off the cavity midpoint. An optional series RLC models the NR branch
    directly across the transmon.
    """

    C_B: float = 90e-15
    C_c: float = 10e-15
    C_k: float = 10e-15
    r_port: float = 50.0
    cavity: TransmissionLine = field(default_factory=TransmissionLine)
    t_filter: TFilter | None = field(default_factory=TFilter)
    nr_branch: SeriesRLC | None = None

    def __post_init__(self):
        for name in ("C_B", "C_c", "C_k", "r_port"):
            if not getattr(self, name) > 0:
                raise PhysicsInputError(f"{name} must be positive")

    def without_nr(self) -> "CircuitNetwork":
        return CircuitNetwork(self.C_B, self.C_c, self.C_k, self.r_port, self.cavity,
                              self.t_filter, None)


def admittance(network: CircuitNetwork, omega, include_shunt: bool = True):
    """Admittance seen by the transmon junction at angular frequency ``omega``.

    Includes the transmon's own C_B unless ``include_shunt`` is False; it
    does not change the real part.
    """
    w = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z_port = network.r_port + 1.0 / (1j * w * network.C_k)
        half = line(network.cavity.z0, network.cavity.electrical_length(w) / 2.0)
        mid = shunt(1.0 / network.t_filter.impedance(w)) if network.t_filter else shunt(np.zeros_like(w))
        # from the transmon end: port shunt, half line, filter shunt, half line, far port
        chain = cascade(shunt(1.0 / z_port), half, mid, half)
        z_cavity_end = input_impedance(chain, z_port)
        y = 1.0 / (1.0 / (1j * w * network.C_c) + z_cavity_end)
        if network.nr_branch is not None:
            y = y + network.nr_branch.admittance(w)
        if include_shunt:
            y = y + 1j * w * network.C_B
    return y


def radiative_t1(network: CircuitNetwork, omega01, C_B: float | None = None):
    """Circuit-limited T1 = C_B / Re[Y(omega01)], in s."""
    C_B = network.C_B if C_B is None else C_B
    re_y = np.real(admittance(network, omega01, include_shunt=False))
    if np.any(~(re_y > 0)):
        raise PhysicsInputError("Re[Y] must be positive to define T1")
    return C_B / re_y


def linewidth_from_t1(T1, T_phi: float = math.inf):
    """Full linewidth gamma = 1/(pi T2) in Hz with 1/T2 = 1/(2 T1) + 1/T_phi."""
    inv_t2 = 0.5 / np.asarray(T1, dtype=float) + (0.0 if math.isinf(T_phi) else 1.0 / T_phi)
    return inv_t2 / math.pi
